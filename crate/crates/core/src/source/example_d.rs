//! The collar/plateau source built on `φ_n = 2^(2^n)`.
//!
//! For `n ≥ 1` the source is the constant `φ_{n+1} − φ_n` on the plateau
//! `[φ_n + 1/2, φ_{n+1} − 1/2)` and the affine `h_n(s) = a_n s + b_n` on the
//! collar `[φ_n − 1/2, φ_n + 1/2)`, with
//!
//! ```text
//! a_n = φ_{n-1}^4 − 2 φ_{n-1}^2 + φ_{n-1}
//! b_n = (−2 φ_{n-1}^6 + 5 φ_{n-1}^4 − 2 φ_{n-1}^3 − φ_{n-1}) / 2
//! ```
//!
//! Below the first collar the source is the constant `φ_1 − φ_0 = 2` on
//! `[0, φ_1 − 1/2)`. With these supports every collar joins its two
//! neighbouring plateaus continuously.
//!
//! Three representations are provided: exact rationals (for continuity
//! proofs), log2-domain reals (for any `n`), and `f64` pieces (up to the
//! plateau ending at `φ_9 − 1/2 = 2^512`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use super::{Piece, PiecewiseSource, Tail};
use crate::error::{Error, Result};
use crate::log2::{Log2Real, Phi};

/// Largest `n` whose collar endpoints `φ_n ± 1/2` are exact in `f64`.
pub const F64_COLLAR_MAX: u32 = 5;

/// Largest `n` whose plateau is finite in `f64`.
pub const F64_PLATEAU_MAX: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExampleDOptions {
    /// Permit indices whose collars only exist in log2-domain / exact form.
    pub allow_log_domain: bool,
}

impl Default for ExampleDOptions {
    fn default() -> Self {
        ExampleDOptions {
            allow_log_domain: true,
        }
    }
}

fn phi_int(n: u32) -> BigInt {
    BigInt::from(Phi::new(n).exact())
}

fn rat(x: BigInt) -> BigRational {
    BigRational::from_integer(x)
}

fn half() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

/// `a_n`, exact. Requires `n ≥ 1`.
pub fn collar_slope_exact(n: u32) -> BigRational {
    assert!(n >= 1);
    let p = phi_int(n - 1);
    rat(p.pow(4) - BigInt::from(2) * p.pow(2) + &p)
}

/// `b_n`, exact. Requires `n ≥ 1`.
pub fn collar_intercept_exact(n: u32) -> BigRational {
    assert!(n >= 1);
    let p = phi_int(n - 1);
    let num = -BigInt::from(2) * p.pow(6) + BigInt::from(5) * p.pow(4)
        - BigInt::from(2) * p.pow(3)
        - &p;
    BigRational::new(num, BigInt::from(2))
}

/// Plateau height `φ_{n+1} − φ_n`, exact.
pub fn plateau_value_exact(n: u32) -> BigRational {
    rat(phi_int(n + 1) - phi_int(n))
}

/// `h_n(s)` in exact arithmetic.
pub fn collar_value_exact(n: u32, s: &BigRational) -> BigRational {
    collar_slope_exact(n) * s + collar_intercept_exact(n)
}

/// `(h_n(φ_n − 1/2) − (φ_n − φ_{n−1}), h_n(φ_n + 1/2) − (φ_{n+1} − φ_n))`.
pub fn continuity_residuals(n: u32) -> (BigRational, BigRational) {
    let c = rat(phi_int(n));
    let left = collar_value_exact(n, &(&c - half())) - plateau_value_exact(n - 1);
    let right = collar_value_exact(n, &(&c + half())) - plateau_value_exact(n);
    (left, right)
}

/// `a_n` in log2 domain, for any `n ≥ 1`.
pub fn collar_slope_log2(n: u32) -> Log2Real {
    assert!(n >= 1);
    let p = Phi::new(n - 1);
    p.pow(4.0) - p.pow(2.0).scale(2.0) + p.pow(1.0)
}

/// `φ_{n+1} − φ_n` in log2 domain.
pub fn plateau_value_log2(n: u32) -> Log2Real {
    Phi::new(n + 1).log2() - Phi::new(n).log2()
}

/// Collar endpoints `φ_n ∓ 1/2` in log2 domain.
pub fn collar_bounds_log2(n: u32) -> (Log2Real, Log2Real) {
    let c = Phi::new(n).log2();
    let h = Log2Real::from_f64(0.5);
    (c - h, c + h)
}

/// `∫ ds / f` over plateau `n`: `(φ_{n+1} − φ_n − 1) / (φ_{n+1} − φ_n)`,
/// i.e. `1 − 1/(φ_{n+1} − φ_n)`. For `n = 0` the plateau is `[0, 7/2)`.
pub fn plateau_reciprocal_log2(n: u32) -> Log2Real {
    let v = plateau_value_log2(n);
    if n == 0 {
        Log2Real::from_f64(3.5) / v
    } else {
        Log2Real::ONE - v.recip()
    }
}

fn collar_piece(n: u32) -> Option<Piece> {
    let c = Phi::new(n).float_value()?;
    let (lo, hi) = (c - 0.5, c + 0.5);
    if !(lo < hi) || n > F64_COLLAR_MAX {
        return None;
    }
    let slope = collar_slope_exact(n).to_f64()?;
    let value = plateau_value_exact(n - 1).to_f64()?;
    Some(Piece::affine_anchored(lo, hi, slope, lo, value))
}

fn plateau_piece(n: u32) -> Piece {
    let lo = if n == 0 {
        0.0
    } else {
        Phi::new(n).float_value().expect("finite phi") + 0.5
    };
    let hi = Phi::new(n + 1).float_value().expect("finite phi") - 0.5;
    let value = plateau_value_exact(n).to_f64().expect("finite plateau");
    Piece::constant(lo, hi, value)
}

/// `f64` pieces for indices `from_n ..= F64_PLATEAU_MAX`: each collar that
/// is resolvable in `f64`, then its plateau. Past [`F64_COLLAR_MAX`] the
/// collar is narrower than the `f64` spacing at `φ_n` and the two plateaus
/// meet at `φ_n`.
pub(crate) fn f64_pieces(from_n: u32) -> Vec<Piece> {
    let mut out = Vec::new();
    for n in from_n.max(1)..=F64_PLATEAU_MAX {
        out.extend(collar_piece(n));
        out.push(plateau_piece(n));
    }
    out
}

/// `f = g + h` listed through index `n_max`, continuing by the same rule.
pub fn build_example_d(n_max: u32) -> Result<PiecewiseSource> {
    build_example_d_with(n_max, ExampleDOptions::default())
}

pub fn build_example_d_with(n_max: u32, opts: ExampleDOptions) -> Result<PiecewiseSource> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("example-d needs n_max >= 1".into()));
    }
    if n_max > F64_COLLAR_MAX && !opts.allow_log_domain {
        return Err(Error::LogDomainRequired { n_max });
    }
    if n_max >= 63 {
        return Err(Error::InvalidParameter(format!("n_max = {n_max} too large")));
    }
    let mut pieces = vec![plateau_piece(0)];
    for n in 1..=n_max.min(F64_PLATEAU_MAX) {
        pieces.extend(collar_piece(n));
        pieces.push(plateau_piece(n));
    }
    PiecewiseSource::new(pieces, Tail::ExampleD { from_n: n_max + 1 })
}
