use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named smooth source functions. They serialize by name, never by code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnalyticFn {
    #[serde(rename = "s_squared")]
    SSquared,
    #[serde(rename = "s_ln_s")]
    SLnS,
    #[serde(rename = "exp")]
    Exp,
}

/// Behaviour of `∫_S^∞ ds / f(s)` for large `S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReciprocalTail {
    /// The tail integral from `S` is at most `bound(S)`.
    Integrable,
    /// The blocks `[S, next(S)]` each contribute at least `per_block`.
    Divergent { per_block: f64 },
}

impl AnalyticFn {
    pub const ALL: [AnalyticFn; 3] = [AnalyticFn::SSquared, AnalyticFn::SLnS, AnalyticFn::Exp];

    pub fn name(self) -> &'static str {
        match self {
            AnalyticFn::SSquared => "s_squared",
            AnalyticFn::SLnS => "s_ln_s",
            AnalyticFn::Exp => "exp",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::UnknownAnalytic(name.to_owned()))
    }

    /// Smallest state the function is defined at.
    pub fn domain_lo(self) -> f64 {
        match self {
            AnalyticFn::SLnS => 0.0,
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn value(self, s: f64) -> f64 {
        match self {
            AnalyticFn::SSquared => s * s,
            AnalyticFn::SLnS => {
                if s == 0.0 {
                    0.0
                } else {
                    s * s.ln()
                }
            }
            AnalyticFn::Exp => s.exp(),
        }
    }

    pub fn derivative(self, s: f64) -> f64 {
        match self {
            AnalyticFn::SSquared => 2.0 * s,
            AnalyticFn::SLnS => s.ln() + 1.0,
            AnalyticFn::Exp => s.exp(),
        }
    }

    /// Declared Lipschitz bound, `sup |f'|` over `[lo, hi]`.
    pub fn lipschitz_on(self, lo: f64, hi: f64) -> f64 {
        match self {
            AnalyticFn::SSquared => 2.0 * lo.abs().max(hi.abs()),
            // f' = ln s + 1 is monotone
            AnalyticFn::SLnS => self.derivative(lo).abs().max(self.derivative(hi).abs()),
            AnalyticFn::Exp => hi.exp(),
        }
    }

    /// `min f` over `[lo, hi]`.
    pub fn min_on(self, lo: f64, hi: f64) -> f64 {
        match self {
            AnalyticFn::SSquared => {
                if lo <= 0.0 && hi >= 0.0 {
                    0.0
                } else {
                    self.value(lo).min(self.value(hi))
                }
            }
            AnalyticFn::SLnS => {
                let turn = (-1.0f64).exp();
                if lo <= turn && hi >= turn {
                    -turn
                } else {
                    self.value(lo).min(self.value(hi))
                }
            }
            AnalyticFn::Exp => lo.exp(),
        }
    }

    pub fn reciprocal_tail(self) -> ReciprocalTail {
        match self {
            AnalyticFn::SSquared | AnalyticFn::Exp => ReciprocalTail::Integrable,
            // ln ln s gains ln 2 whenever s is squared
            AnalyticFn::SLnS => ReciprocalTail::Divergent { per_block: LN_2 },
        }
    }

    /// Upper bound on `∫_S^∞ ds/f(s)` for integrable tails, `S > 0`.
    pub fn tail_bound(self, s: f64) -> Option<f64> {
        match self {
            AnalyticFn::SSquared => Some(1.0 / s),
            AnalyticFn::Exp => Some((-s).exp()),
            AnalyticFn::SLnS => None,
        }
    }

    /// End of the divergence block starting at `S` (see [`ReciprocalTail`]).
    pub fn next_block(self, s: f64) -> f64 {
        match self {
            AnalyticFn::SLnS => s * s,
            _ => 2.0 * s,
        }
    }

    /// `(A, k)` with `|f'(s)| ≤ A s^k` for all `s ≥ max(0, lo)` of the
    /// piece, when such a power bound exists.
    pub fn derivative_power_bound(self) -> Option<(f64, f64)> {
        match self {
            AnalyticFn::SSquared => Some((2.0, 1.0)),
            // ln s + 1 ≤ s on s ≥ 1
            AnalyticFn::SLnS => Some((1.0, 1.0)),
            AnalyticFn::Exp => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_agree_with_central_differences() {
        let samples: &[(AnalyticFn, &[f64])] = &[
            (AnalyticFn::SSquared, &[-3.0, 0.5, 2.0, 40.0]),
            (AnalyticFn::SLnS, &[1.5, 2.0, 10.0, 1e3]),
            (AnalyticFn::Exp, &[-2.0, 0.0, 3.0, 10.0]),
        ];
        for &(f, points) in samples {
            for &s in points {
                let h = 1e-5 * s.abs().max(1.0);
                let fd = (f.value(s + h) - f.value(s - h)) / (2.0 * h);
                let d = f.derivative(s);
                assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0), "{f:?} at {s}");
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for f in AnalyticFn::ALL {
            assert_eq!(AnalyticFn::from_name(f.name()).unwrap(), f);
        }
        assert!(AnalyticFn::from_name("cosh").is_err());
    }
}
