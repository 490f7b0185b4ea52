//! Scalar kinetic flows `u' = f(u)`, blow-up times `T(z) = ∫_z^∞ ds/f(s)`,
//! their inversion, and an executable comparison principle.
//!
//! Flows are chained piece by piece. Constant and affine pieces move in
//! closed form and their exit times are exact; analytic pieces are
//! integrated with an embedded Runge–Kutta pair and their exit times come
//! from quadrature of `1/f`. A trajectory is only reported as blown up when
//! it can leave through an infinite endpoint in finite time, i.e. when the
//! reciprocal tail integral is finite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, Tolerances};
use crate::source::example_d::{plateau_reciprocal_log2, F64_PLATEAU_MAX};
use crate::source::{AnalyticFn, Piece, PieceKind, PiecewiseSource, ReciprocalTail, Tail};

/// Plateau indices past the `f64` coverage that are summed in log2 domain
/// as divergence evidence.
const LOG_DOMAIN_EVIDENCE_MAX_N: u32 = 20;

/// Blocks appended as divergence evidence for unbounded closed-form tails.
const EVIDENCE_BLOCKS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps_per_piece: usize,
    /// Absolute tolerance for exit-time quadratures.
    pub quad_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps_per_piece: 1_000_000,
            quad_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FlowStatus {
    Alive { value: f64 },
    BlownUp { time: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOutcome {
    #[serde(flatten)]
    pub status: FlowStatus,
    /// Requested time horizon.
    pub horizon: f64,
    pub pieces_traversed: usize,
    /// Summed error estimates of the exit-time quadratures.
    pub quad_error: f64,
    pub ode_steps: usize,
}

impl FlowOutcome {
    pub fn value(&self) -> Option<f64> {
        match self.status {
            FlowStatus::Alive { value } => Some(value),
            FlowStatus::BlownUp { .. } => None,
        }
    }

    pub fn blowup_time(&self) -> Option<f64> {
        match self.status {
            FlowStatus::BlownUp { time } => Some(time),
            FlowStatus::Alive { .. } => None,
        }
    }

    pub fn is_alive(&self) -> bool {
        self.value().is_some()
    }
}

struct Trace {
    quad_error: f64,
    ode_steps: usize,
}

/// `∫_z^∞ ds/f` for an analytic piece reaching `+inf`.
enum AnalyticTail {
    Finite { value: f64, error: f64 },
    Divergent { partial_sums: Vec<f64>, per_block: f64 },
}

fn analytic_tail(name: AnalyticFn, z: f64, tol: f64) -> Result<AnalyticTail> {
    let piece = Piece::analytic(z, f64::INFINITY, name);
    match name.reciprocal_tail() {
        ReciprocalTail::Integrable => {
            let mut cut = z.abs().max(1.0) * 2.0;
            while name.tail_bound(cut).expect("integrable tail") > 0.25 * tol {
                cut *= 2.0;
            }
            let bound = name.tail_bound(cut).expect("integrable tail");
            let (v, e) = piece.reciprocal_integral(z, cut, 0.5 * tol)?;
            Ok(AnalyticTail::Finite {
                value: v + 0.5 * bound,
                error: e + 0.5 * bound,
            })
        }
        ReciprocalTail::Divergent { per_block } => {
            let mut sums = Vec::with_capacity(EVIDENCE_BLOCKS + 1);
            let mut s = z.max(2.0);
            let mut total = 0.0;
            if z < s {
                total += piece.reciprocal_integral(z, s, tol)?.0;
                sums.push(total);
            }
            for _ in 0..EVIDENCE_BLOCKS {
                let next = name.next_block(s);
                if !next.is_finite() || next > 1e300 {
                    break;
                }
                total += piece.reciprocal_integral(s, next, tol)?.0;
                sums.push(total);
                s = next;
            }
            Ok(AnalyticTail::Divergent {
                partial_sums: sums,
                per_block,
            })
        }
    }
}

/// Time for the trajectory from `z` to reach `boundary` inside piece `p`,
/// or `None` when it never gets there.
fn exit_time(p: &Piece, z: f64, boundary: f64, opts: &FlowOptions, trace: &mut Trace) -> Result<Option<f64>> {
    let v = p.value(z);
    match p.kind {
        PieceKind::Constant { value } => Ok(boundary.is_finite().then(|| (boundary - z) / value)),
        PieceKind::Affine { slope, .. } => {
            if !boundary.is_finite() {
                return Ok(None);
            }
            let wb = p.value(boundary);
            if wb / v <= 0.0 {
                return Ok(None);
            }
            Ok(Some(if slope == 0.0 {
                (boundary - z) / v
            } else {
                (slope * (boundary - z) / v).ln_1p() / slope
            }))
        }
        PieceKind::Analytic { name } => {
            if boundary == f64::INFINITY {
                return match analytic_tail(name, z, opts.quad_tol)? {
                    AnalyticTail::Finite { value, error } => {
                        trace.quad_error += error;
                        Ok(Some(value))
                    }
                    AnalyticTail::Divergent { .. } => Ok(None),
                };
            }
            if !boundary.is_finite() {
                return Ok(None);
            }
            if v > 0.0 {
                if !(name.min_on(z, boundary) > 0.0) {
                    return Ok(None);
                }
                let (t, e) = p.reciprocal_integral(z, boundary, opts.quad_tol)?;
                trace.quad_error += e;
                Ok(Some(t))
            } else {
                if !(name.value(boundary) < 0.0) {
                    return Ok(None);
                }
                let r = crate::quadrature::integrate(
                    |s| -1.0 / name.value(s),
                    boundary,
                    z,
                    opts.quad_tol,
                    0.0,
                )?;
                trace.quad_error += r.error;
                Ok(Some(r.value))
            }
        }
    }
}

/// Moves `z` for time `span` without leaving piece `p`.
fn advance(p: &Piece, z: f64, span: f64, opts: &FlowOptions, trace: &mut Trace) -> Result<f64> {
    let v = p.value(z);
    let moved = match p.kind {
        PieceKind::Constant { value } => z + value * span,
        PieceKind::Affine { slope, .. } => {
            if slope == 0.0 {
                z + v * span
            } else {
                // f itself evolves as w' = slope·w
                z + v * (slope * span).exp_m1() / slope
            }
        }
        PieceKind::Analytic { name } => {
            let out = ode::integrate(
                |y| name.value(y),
                z,
                span,
                Tolerances {
                    rtol: opts.rtol,
                    atol: opts.atol,
                    max_steps: opts.max_steps_per_piece,
                },
            )?;
            trace.ode_steps += out.accepted + out.rejected;
            out.value
        }
    };
    Ok(moved.clamp(p.lo, p.hi))
}

pub fn flow(f: &PiecewiseSource, z0: f64, t: f64) -> Result<FlowOutcome> {
    flow_with(f, z0, t, &FlowOptions::default())
}

/// Evolves `u' = f(u)`, `u(0) = z0` to time `t`.
pub fn flow_with(f: &PiecewiseSource, z0: f64, t: f64, opts: &FlowOptions) -> Result<FlowOutcome> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if !t.is_finite() || !z0.is_finite() {
        return Err(Error::InvalidParameter(format!("flow from {z0} for {t}")));
    }
    let pieces = f.covering_pieces();
    let mut i = f.locate(z0)?;
    let mut z = z0;
    let mut elapsed = 0.0;
    let mut traversed = 1;
    let mut trace = Trace {
        quad_error: 0.0,
        ode_steps: 0,
    };
    let outcome = |status, traversed, trace: &Trace| FlowOutcome {
        status,
        horizon: t,
        pieces_traversed: traversed,
        quad_error: trace.quad_error,
        ode_steps: trace.ode_steps,
    };
    loop {
        let p = &pieces[i];
        let v = p.value(z);
        let remaining = t - elapsed;
        if v == 0.0 || remaining <= 0.0 {
            return Ok(outcome(FlowStatus::Alive { value: z }, traversed, &trace));
        }
        let up = v > 0.0;
        let boundary = if up { p.hi } else { p.lo };
        match exit_time(p, z, boundary, opts, &mut trace)? {
            Some(tau) if tau <= remaining => {
                elapsed += tau;
                if boundary.is_infinite() {
                    return Ok(outcome(
                        FlowStatus::BlownUp { time: elapsed },
                        traversed,
                        &trace,
                    ));
                }
                let next = if up { Some(i + 1) } else { i.checked_sub(1) };
                let Some(next) = next.filter(|&k| k < pieces.len()) else {
                    return Err(Error::OutOfRange { value: boundary });
                };
                let w = pieces[next].value(boundary);
                if (up && w <= 0.0) || (!up && w >= 0.0) {
                    // f changes sign across the breakpoint: the state stays there
                    return Ok(outcome(FlowStatus::Alive { value: boundary }, traversed, &trace));
                }
                z = boundary;
                i = next;
                traversed += 1;
            }
            _ => {
                let value = advance(p, z, remaining, opts, &mut trace)?;
                return Ok(outcome(FlowStatus::Alive { value }, traversed, &trace));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum BlowupVerdict {
    Finite {
        time: f64,
        error: f64,
    },
    /// Cumulative sums over pieces (or blocks) together with a positive lower
    /// bound on every further contribution.
    Infinite {
        partial_sums: Vec<f64>,
        per_piece_lower_bound: f64,
    },
    Inconclusive {
        lower_bound: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupTimeResult {
    pub z0: f64,
    #[serde(flatten)]
    pub verdict: BlowupVerdict,
    pub pieces_summed: usize,
}

impl BlowupTimeResult {
    pub fn finite_time(&self) -> Option<f64> {
        match self.verdict {
            BlowupVerdict::Finite { time, .. } => Some(time),
            _ => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.verdict, BlowupVerdict::Infinite { .. })
    }
}

/// `T(z0) = ∫_{z0}^∞ ds/f(s)`, classified as finite, infinite, or
/// undecided when the source is truncated.
pub fn blowup_time(f: &PiecewiseSource, z0: f64, tol: f64) -> Result<BlowupTimeResult> {
    if !(z0 > 0.0) || !z0.is_finite() {
        return Err(Error::InvalidParameter(format!("blow-up time needs z0 > 0, got {z0}")));
    }
    let pieces = f.covering_pieces();
    let first = f.locate(z0)?;
    if f.eval(z0)? == 0.0 {
        return rest_point_verdict(f, z0, tol);
    }
    let rest = &pieces[first..];
    let n_analytic = rest
        .iter()
        .filter(|p| matches!(p.kind, PieceKind::Analytic { .. }))
        .count();
    let per = tol / (n_analytic + 1) as f64;
    let mut sum = 0.0;
    let mut error = 0.0;
    let mut partial = Vec::new();
    let result = |verdict, partial_len| BlowupTimeResult {
        z0,
        verdict,
        pieces_summed: partial_len,
    };
    for p in rest {
        let a = z0.max(p.lo);
        if p.hi.is_finite() {
            let m = p.min_on(a, p.hi);
            if !(m > 0.0) {
                return Err(Error::NonPositive { at: a, value: m });
            }
            let (v, e) = p.reciprocal_integral(a, p.hi, per)?;
            sum += v;
            error += e;
            partial.push(sum);
            continue;
        }
        // last piece, unbounded above
        let va = p.value(a);
        if !(va > 0.0) {
            return Err(Error::NonPositive { at: a, value: va });
        }
        let n = partial.len() + 1;
        let verdict = match p.kind {
            PieceKind::Constant { .. } => {
                // blocks of length `value` contribute exactly 1 each
                partial.extend((1..=EVIDENCE_BLOCKS).map(|k| sum + k as f64));
                BlowupVerdict::Infinite {
                    partial_sums: partial,
                    per_piece_lower_bound: 1.0,
                }
            }
            PieceKind::Affine { slope, .. } if slope < 0.0 => {
                let zero = a - va / slope;
                return Err(Error::NonPositive { at: zero, value: 0.0 });
            }
            PieceKind::Affine { slope, .. } => {
                // f doubles over each block, contributing ln 2 / slope
                let block = if slope == 0.0 {
                    1.0
                } else {
                    std::f64::consts::LN_2 / slope
                };
                partial.extend((1..=EVIDENCE_BLOCKS).map(|k| sum + k as f64 * block));
                BlowupVerdict::Infinite {
                    partial_sums: partial,
                    per_piece_lower_bound: block,
                }
            }
            PieceKind::Analytic { name } => {
                let m = name.min_on(a, 1e300);
                if !(m > 0.0) {
                    return Err(Error::NonPositive { at: a, value: m });
                }
                match analytic_tail(name, a, per)? {
                    AnalyticTail::Finite { value, error: e } => BlowupVerdict::Finite {
                        time: sum + value,
                        error: error + e,
                    },
                    AnalyticTail::Divergent {
                        partial_sums,
                        per_block,
                    } => {
                        partial.extend(partial_sums.into_iter().map(|s| sum + s));
                        BlowupVerdict::Infinite {
                            partial_sums: partial,
                            per_piece_lower_bound: per_block,
                        }
                    }
                }
            }
        };
        return Ok(result(verdict, n));
    }
    let n = partial.len();
    let verdict = match f.tail() {
        Tail::ExampleD { .. } => {
            // every plateau n ≥ 1 contributes 1 − 1/(φ_{n+1} − φ_n) ≥ 11/12
            for k in F64_PLATEAU_MAX + 1..=LOG_DOMAIN_EVIDENCE_MAX_N {
                sum += plateau_reciprocal_log2(k).to_f64();
                partial.push(sum);
            }
            BlowupVerdict::Infinite {
                partial_sums: partial,
                per_piece_lower_bound: plateau_reciprocal_log2(1).to_f64(),
            }
        }
        _ => BlowupVerdict::Inconclusive { lower_bound: sum },
    };
    Ok(result(verdict, n))
}

/// `f(z0) = 0`: with `f ≤ L (s − z0)` just above the rest point, every
/// dyadic block `[z0 + h, z0 + 2h]` contributes at least `ln 2 / L`.
fn rest_point_verdict(f: &PiecewiseSource, z0: f64, tol: f64) -> Result<BlowupTimeResult> {
    let (_, hi) = f.coverage();
    let width = (hi - z0).min(1.0);
    let lip = f.lipschitz_on(z0, z0 + width)?;
    if !(lip.is_finite() && lip > 0.0) {
        return Err(Error::NonPositive { at: z0, value: 0.0 });
    }
    let mut partial = Vec::with_capacity(EVIDENCE_BLOCKS);
    let mut sum = 0.0;
    let mut h = width * 0.5;
    for _ in 0..EVIDENCE_BLOCKS {
        sum += f.reciprocal_integral(z0 + h, z0 + 2.0 * h, tol)?;
        partial.push(sum);
        h *= 0.5;
    }
    Ok(BlowupTimeResult {
        z0,
        verdict: BlowupVerdict::Infinite {
            partial_sums: partial,
            per_piece_lower_bound: std::f64::consts::LN_2 / lip,
        },
        pieces_summed: 0,
    })
}

/// Initial value `z` with `T(z) = eps`, by bisection on the decreasing map
/// `z ↦ T(z)`.
pub fn invert_blowup_time(f: &PiecewiseSource, eps: f64, tol: f64) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("target time {eps} must be positive")));
    }
    const MAX_ITER: usize = 200;
    let quad_tol = tol * 0.1;
    let time_at = |z: f64| -> Result<f64> {
        let r = blowup_time(f, z, quad_tol)?;
        match r.verdict {
            BlowupVerdict::Finite { time, .. } => Ok(time),
            BlowupVerdict::Infinite { .. } => Err(Error::NoFiniteBlowup { eps }),
            BlowupVerdict::Inconclusive { .. } => Err(Error::BracketFailed { eps }),
        }
    };
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    let mut iter = 0;
    while time_at(hi)? > eps {
        lo = hi;
        hi *= 2.0;
        iter += 1;
        if iter >= MAX_ITER {
            return Err(Error::BracketFailed { eps });
        }
    }
    while time_at(lo)? < eps {
        hi = lo;
        lo *= 0.5;
        iter += 1;
        if iter >= MAX_ITER {
            return Err(Error::BracketFailed { eps });
        }
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if time_at(mid)? > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let z = 0.5 * (lo + hi);
    let t = time_at(z)?;
    if (t - eps).abs() > tol {
        return Err(Error::BracketFailed { eps });
    }
    Ok(z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub t: f64,
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<EnvelopeRow>,
    /// Largest of `lower − middle` and `middle − upper`, scaled by
    /// `max(1, |middle|)`; zero when the order holds everywhere.
    pub max_violation: f64,
    /// Set when some flow blew up before the last grid time; rows stop there.
    pub truncated_at: Option<f64>,
}

/// Flows from ordered data `x0 ≤ y0 ≤ z0` and the largest ordering violation
/// along `t_grid`.
pub fn comparison_envelope(
    f: &PiecewiseSource,
    x0: f64,
    y0: f64,
    z0: f64,
    t_grid: &[f64],
) -> Result<ComparisonReport> {
    if !(x0 <= y0 && y0 <= z0) {
        return Err(Error::InvalidParameter(format!(
            "comparison needs ordered data, got ({x0}, {y0}, {z0})"
        )));
    }
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut max_violation: f64 = 0.0;
    let mut truncated_at = None;
    for &t in t_grid {
        let (a, b, c) = (flow(f, x0, t)?, flow(f, y0, t)?, flow(f, z0, t)?);
        let (Some(lower), Some(middle), Some(upper)) = (a.value(), b.value(), c.value()) else {
            truncated_at = Some(t);
            break;
        };
        let scale = middle.abs().max(1.0);
        max_violation = max_violation
            .max((lower - middle) / scale)
            .max((middle - upper) / scale);
        rows.push(EnvelopeRow {
            t,
            lower,
            middle,
            upper,
        });
    }
    Ok(ComparisonReport {
        rows,
        max_violation,
        truncated_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{build_example_c, build_example_d, registered};
    use std::f64::consts::{E, LN_2};

    #[test]
    fn example_c_flow_closed_forms() {
        let f = build_example_c();
        let v = flow(&f, 2.0, LN_2).unwrap().value().unwrap();
        assert!((v - 4.0).abs() < 1e-8 * 4.0, "{v}");
        assert_eq!(flow(&f, 1.0, 3.0).unwrap().value(), Some(1.0));
        let v = flow(&f, 0.5, LN_2).unwrap().value().unwrap();
        assert!(v.abs() < 1e-15, "{v}");
    }

    #[test]
    fn example_d_flow_from_phi1_lies_between_envelopes() {
        let f = build_example_d(3).unwrap();
        let out = flow(&f, 4.0, 0.5).unwrap();
        let v = out.value().unwrap();
        assert!((7.0..=10.0).contains(&v), "{v}");
        // the collar [3.5, 4.5) lifts f from 2 to 12; from 4 the state
        // crosses the rest of the collar and then rides the plateau of 12
        assert!(out.pieces_traversed >= 2);
    }

    #[test]
    fn riccati_blows_up_with_certificate() {
        let f = registered("s_squared").unwrap();
        let out = flow(&f, 2.0, 1.0).unwrap();
        let t = out.blowup_time().unwrap();
        assert!((t - 0.5).abs() < 1e-10, "{t}");
        let v = flow(&f, 2.0, 0.25).unwrap().value().unwrap();
        assert!((v - 4.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn negative_time_rejected() {
        let f = registered("identity").unwrap();
        assert_eq!(flow(&f, 1.0, -1.0), Err(Error::NegativeTime(-1.0)));
    }

    #[test]
    fn blowup_time_verdicts() {
        let sq = registered("s_squared").unwrap();
        let r = blowup_time(&sq, 1.0, 1e-10).unwrap();
        assert!((r.finite_time().unwrap() - 1.0).abs() < 1e-9, "{r:?}");

        let c = build_example_c();
        let r = blowup_time(&c, E, 1e-10).unwrap();
        match r.verdict {
            BlowupVerdict::Infinite {
                partial_sums,
                per_piece_lower_bound,
            } => {
                assert!((per_piece_lower_bound - LN_2).abs() < 1e-15);
                assert!(partial_sums.windows(2).all(|w| w[1] > w[0]));
                for w in partial_sums.windows(2).skip(1) {
                    assert!(w[1] - w[0] >= LN_2 - 1e-9);
                }
            }
            other => panic!("{other:?}"),
        }

        let d = build_example_d(3).unwrap();
        let r = blowup_time(&d, 2.0, 1e-10).unwrap();
        match r.verdict {
            BlowupVerdict::Infinite {
                partial_sums,
                per_piece_lower_bound,
            } => {
                assert!((per_piece_lower_bound - 11.0 / 12.0).abs() < 1e-15);
                assert!(partial_sums.windows(2).all(|w| w[1] >= w[0]));
                assert!(*partial_sums.last().unwrap() > 19.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_source_is_inconclusive() {
        let f = PiecewiseSource::single(Piece::constant(0.0, 10.0, 2.0)).unwrap();
        let r = blowup_time(&f, 1.0, 1e-10).unwrap();
        assert_eq!(r.verdict, BlowupVerdict::Inconclusive { lower_bound: 4.5 });
    }

    #[test]
    fn nonpositive_source_rejected() {
        let f = registered("s_minus_1").unwrap();
        assert!(matches!(blowup_time(&f, 0.5, 1e-10), Err(Error::NonPositive { .. })));
    }

    #[test]
    fn inversion_of_closed_forms() {
        let sq = registered("s_squared").unwrap();
        for (eps, z) in [(0.5, 2.0), (0.1, 10.0)] {
            let got = invert_blowup_time(&sq, eps, 1e-12).unwrap();
            assert!((got - z).abs() < 1e-9, "{eps}: {got}");
        }
        let ex = registered("exp").unwrap();
        let got = invert_blowup_time(&ex, (-3.0f64).exp(), 1e-13).unwrap();
        assert!((got - 3.0).abs() < 1e-9, "{got}");
        let c = build_example_c();
        assert!(matches!(
            invert_blowup_time(&c, 0.5, 1e-10),
            Err(Error::NoFiniteBlowup { .. })
        ));
    }

    #[test]
    fn comparison_examples() {
        let id = registered("identity").unwrap();
        let r = comparison_envelope(&id, 1.0, 2.0, 3.0, &[0.0, 1.0]).unwrap();
        assert_eq!(r.max_violation, 0.0);
        assert!((r.rows[1].middle - 2.0 * E).abs() < 1e-14);

        let c = build_example_c();
        let r = comparison_envelope(&c, 0.5, 1.0, 2.0, &[0.0, LN_2]).unwrap();
        assert_eq!(r.max_violation, 0.0);
        assert!((r.rows[1].upper - 4.0).abs() < 1e-7);

        let r = comparison_envelope(&c, 3.0, 3.0, 3.0, &[0.1, 0.7]).unwrap();
        assert_eq!(r.max_violation, 0.0);
        assert!(comparison_envelope(&c, 2.0, 1.0, 3.0, &[0.0]).is_err());
    }

    #[test]
    fn comparison_stops_at_blowup() {
        let sq = registered("s_squared").unwrap();
        let r = comparison_envelope(&sq, 1.0, 2.0, 4.0, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.truncated_at, Some(0.3));
    }
}
