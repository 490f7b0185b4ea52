//! Signed reals stored as `sign · 2^log2`, and the double-exponential
//! tower `φ_n = 2^(2^n)`.
//!
//! Magnitudes that overflow (or underflow) `f64` stay representable as long
//! as their base-2 logarithm fits, which covers `φ_n^k` for every `n` used by
//! the certificates. Subtraction goes through `log1p` so differences of
//! nearly equal magnitudes keep their relative accuracy.

use std::cmp::Ordering;
use std::f64::consts::LN_2;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

/// `sign · 2^log2_abs`. Zero is `sign == 0` with `log2_abs == -inf`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Log2Real {
    sign: i8,
    log2_abs: f64,
}

impl Log2Real {
    pub const ZERO: Log2Real = Log2Real {
        sign: 0,
        log2_abs: f64::NEG_INFINITY,
    };
    pub const ONE: Log2Real = Log2Real {
        sign: 1,
        log2_abs: 0.0,
    };

    /// `2^e`.
    pub fn pow2(e: f64) -> Self {
        Log2Real {
            sign: 1,
            log2_abs: e,
        }
    }

    pub fn from_parts(sign: i8, log2_abs: f64) -> Self {
        if sign == 0 || log2_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Log2Real {
                sign: sign.signum(),
                log2_abs,
            }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Log2Real {
                sign: if x > 0.0 { 1 } else { -1 },
                log2_abs: x.abs().log2(),
            }
        }
    }

    /// Nearest `f64`; overflows to `±inf` and underflows to `0`.
    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log2_abs.exp2()
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// `log2 |x|`; `-inf` for zero.
    pub fn log2_abs(self) -> f64 {
        self.log2_abs
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn is_positive(self) -> bool {
        self.sign > 0
    }

    pub fn abs(self) -> Self {
        if self.sign == 0 {
            self
        } else {
            Log2Real {
                sign: 1,
                log2_abs: self.log2_abs,
            }
        }
    }

    /// Real power of a nonnegative value.
    pub fn powf(self, k: f64) -> Self {
        assert!(self.sign >= 0, "powf of a negative Log2Real");
        if k == 0.0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            return Self::ZERO;
        }
        Log2Real {
            sign: 1,
            log2_abs: self.log2_abs * k,
        }
    }

    pub fn powi(self, k: i32) -> Self {
        if k == 0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            return Self::ZERO;
        }
        let sign = if self.sign < 0 && k % 2 != 0 { -1 } else { 1 };
        Log2Real {
            sign,
            log2_abs: self.log2_abs * f64::from(k),
        }
    }

    pub fn recip(self) -> Self {
        assert!(self.sign != 0, "reciprocal of zero");
        Log2Real {
            sign: self.sign,
            log2_abs: -self.log2_abs,
        }
    }

    pub fn scale(self, c: f64) -> Self {
        self * Log2Real::from_f64(c)
    }
}

impl fmt::Debug for Log2Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => write!(f, "{}2^{}", if s < 0 { "-" } else { "" }, self.log2_abs),
        }
    }
}

impl fmt::Display for Log2Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_f64();
        if v.is_finite() && (v == 0.0 || v.abs() > 1e-300) {
            write!(f, "{v:e}")
        } else {
            fmt::Debug::fmt(self, f)
        }
    }
}

impl Neg for Log2Real {
    type Output = Log2Real;
    fn neg(self) -> Log2Real {
        Log2Real {
            sign: -self.sign,
            log2_abs: self.log2_abs,
        }
    }
}

impl Mul for Log2Real {
    type Output = Log2Real;
    fn mul(self, rhs: Log2Real) -> Log2Real {
        if self.sign == 0 || rhs.sign == 0 {
            return Log2Real::ZERO;
        }
        Log2Real {
            sign: self.sign * rhs.sign,
            log2_abs: self.log2_abs + rhs.log2_abs,
        }
    }
}

impl Div for Log2Real {
    type Output = Log2Real;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Log2Real) -> Log2Real {
        self * rhs.recip()
    }
}

impl Add for Log2Real {
    type Output = Log2Real;
    fn add(self, rhs: Log2Real) -> Log2Real {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (big, small) = if self.log2_abs >= rhs.log2_abs {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let d = (small.log2_abs - big.log2_abs).exp2();
        if big.sign == small.sign {
            Log2Real {
                sign: big.sign,
                log2_abs: big.log2_abs + d.ln_1p() / LN_2,
            }
        } else if d >= 1.0 {
            Log2Real::ZERO
        } else {
            Log2Real {
                sign: big.sign,
                log2_abs: big.log2_abs + (-d).ln_1p() / LN_2,
            }
        }
    }
}

impl Sub for Log2Real {
    type Output = Log2Real;
    fn sub(self, rhs: Log2Real) -> Log2Real {
        self + (-rhs)
    }
}

impl PartialOrd for Log2Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            ord => return Some(ord),
        }
        match self.sign {
            0 => Some(Ordering::Equal),
            1 => self.log2_abs.partial_cmp(&other.log2_abs),
            _ => other.log2_abs.partial_cmp(&self.log2_abs),
        }
    }
}

/// Largest index whose `φ_n` is finite in `f64` (`φ_9 = 2^512`).
pub const PHI_F64_MAX_INDEX: u32 = 9;

/// `φ_n = 2^(2^n)`, indexed by `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Phi {
    pub n: u32,
}

impl Phi {
    pub fn new(n: u32) -> Self {
        assert!(n < 64, "phi index {n} out of supported range");
        Phi { n }
    }

    /// Exact base-2 logarithm `2^n`.
    pub fn log2_value(self) -> u64 {
        1u64 << self.n
    }

    pub fn log2(self) -> Log2Real {
        Log2Real::pow2(self.log2_value() as f64)
    }

    /// `φ_n^k` in log2 domain.
    pub fn pow(self, k: f64) -> Log2Real {
        Log2Real::pow2(self.log2_value() as f64 * k)
    }

    pub fn float_value(self) -> Option<f64> {
        (self.n <= PHI_F64_MAX_INDEX).then(|| (self.log2_value() as f64).exp2())
    }

    pub fn exact(self) -> BigUint {
        BigUint::from(1u32) << self.log2_value()
    }

    pub fn next(self) -> Phi {
        Phi::new(self.n + 1)
    }

    pub fn prev(self) -> Option<Phi> {
        self.n.checked_sub(1).map(Phi::new)
    }
}
