//! Gaussian right-tail probability and the regularized lower incomplete gamma
//! function at `a = 3/2`, the two special functions the Ziv-Zakai bound needs.

use std::f64::consts::PI;

use libm::erfc;

use crate::{Error, Result};

/// Right-tail probability of the standard normal, `Q(x) = P(Z > x)`.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Regularized lower incomplete gamma `P(3/2, b)`.
///
/// Closed form `erf(sqrt b) - (2/sqrt pi) sqrt(b) e^{-b}`. The two terms cancel
/// for small `b`, so the power series is used there instead.
pub fn gamma_reg_three_halves(b: f64) -> Result<f64> {
    if b.is_nan() || b < 0.0 {
        return Err(Error::domain(format!("incomplete gamma needs b >= 0, got {b}")));
    }
    if b == 0.0 {
        return Ok(0.0);
    }
    if b.is_infinite() {
        return Ok(1.0);
    }
    if b < 1.0 {
        return Ok(series_three_halves(b));
    }
    // Q(3/2, b) = erfc(sqrt b) + (2/sqrt pi) sqrt(b) e^{-b}
    let s = b.sqrt();
    let upper = erfc(s) + 2.0 / PI.sqrt() * s * (-b).exp();
    Ok(1.0 - upper)
}

/// `P(a, x) = x^a e^{-x} / Γ(a+1) * Σ x^n / ((a+1)...(a+n))` with `a = 3/2`.
fn series_three_halves(x: f64) -> f64 {
    const A: f64 = 1.5;
    // Γ(5/2) = 3 sqrt(pi) / 4
    let gamma_a1 = 0.75 * PI.sqrt();
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 1.0;
    while term > sum * 1e-17 {
        term *= x / (A + n);
        sum += term;
        n += 1.0;
    }
    x.powf(A) * (-x).exp() / gamma_a1 * sum
}
