//! Scalar autonomous Dormand–Prince 5(4) with embedded error control.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOutcome {
    pub value: f64,
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates `y' = g(y)` from `y0` over a time span `span ≥ 0`, landing
/// exactly on `span`.
pub fn integrate<G: Fn(f64) -> f64>(g: G, y0: f64, span: f64, tol: Tolerances) -> Result<OdeOutcome> {
    let mut y = y0;
    let mut t = 0.0;
    let mut k1 = g(y);
    let mut h = if k1 == 0.0 {
        span
    } else {
        (1e-3 * y.abs().max(1e-3) / k1.abs()).min(span)
    };
    let (mut accepted, mut rejected) = (0, 0);
    while t < span {
        if accepted + rejected >= tol.max_steps {
            return Err(Error::TooManySteps(tol.max_steps));
        }
        let last = t + h >= span;
        if last {
            h = span - t;
        }
        let k2 = g(y + h * A21 * k1);
        let k3 = g(y + h * (A31 * k1 + A32 * k2));
        let k4 = g(y + h * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = g(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        let k6 = g(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        let y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let k7 = g(y_new);
        let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let scale = tol.atol + tol.rtol * y.abs().max(y_new.abs());
        let ratio = (err / scale).abs();
        if ratio <= 1.0 && y_new.is_finite() {
            y = y_new;
            k1 = k7;
            t = if last { span } else { t + h };
            accepted += 1;
            let factor = if ratio == 0.0 {
                5.0
            } else {
                (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            rejected += 1;
            let factor = if ratio.is_finite() {
                (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h *= factor;
        }
    }
    Ok(OdeOutcome {
        value: y,
        accepted,
        rejected,
    })
}
