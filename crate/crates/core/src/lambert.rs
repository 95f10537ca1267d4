//! Principal branch of the Lambert W function (inverse of x·e^x).

use crate::error::{Error, Result};

const INV_E: f64 = 1.0 / std::f64::consts::E;

/// Principal-branch W0(x) for x ≥ −1/e.
///
/// Halley iteration from a branch-aware initial guess; the residual
/// |W·e^W − x| is driven below 1e−12·max(1, |x|).
pub fn lambert_w0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("lambert_w0", format!("non-finite argument {x}")));
    }
    if x < -INV_E {
        // Allow round-off at the branch point.
        if x > -INV_E - 1e-15 {
            return Ok(-1.0);
        }
        return Err(Error::domain(
            "lambert_w0",
            format!("argument {x} below branch point -1/e"),
        ));
    }
    if x == 0.0 {
        return Ok(0.0);
    }

    let mut w = initial_guess(x);
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= 1e-13 * x.abs().max(1.0) {
            break;
        }
        // Halley step.
        let denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
        let step = f / denom;
        w -= step;
        if w < -1.0 {
            w = -1.0 + 1e-16;
        }
    }
    Ok(w)
}

fn initial_guess(x: f64) -> f64 {
    if x < -0.25 {
        // Series around the branch point W(-1/e) = -1.
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 1.0 {
        // Padé-like rational start near zero.
        x * (1.0 - x + 1.5 * x * x) / (1.0 + 0.5 * x)
    } else if x < std::f64::consts::E {
        // ln ln x is unusable until x > e.
        (1.0 + x).ln()
    } else {
        // Asymptotic for large x.
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}
