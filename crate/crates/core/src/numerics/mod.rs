//! Special functions and quadrature used by the rate formulas.
//!
//! All functions are pure. Quadrature-based ones take their accuracy budget
//! from [`quadrature::Tolerance`] and return [`Error::Numeric`] instead of a
//! silently inaccurate value.

mod expint;
mod gauss_hermite;
pub mod quadrature;

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
pub use expint::{e1, exp_int_ei, scaled_e1};
pub use gauss_hermite::{gauss_hermite_rule, QuadratureRule, MAX_ORDER as MAX_HERMITE_ORDER};
use quadrature::{integrate, integrate_complex, Tolerance};

pub type ComplexValue = Complex64;

/// Tail probability of the standard normal distribution.
pub fn q_function(y: f64) -> f64 {
    0.5 * libm::erfc(y / SQRT_2)
}

/// Survival function of Gamma(shape, 1) for integer shape:
/// `e^{-x} Σ_{t<shape} x^t / t!`.
pub fn regularized_upper_gamma(shape: u32, x: f64) -> f64 {
    assert!(shape >= 1, "shape must be positive");
    assert!(x >= 0.0, "x must be nonnegative");
    if x == 0.0 {
        return 1.0;
    }
    let ln_x = x.ln();
    let mut ln_factorial = 0.0;
    let mut sum = 0.0;
    for t in 0..shape {
        if t > 0 {
            ln_factorial += (t as f64).ln();
        }
        sum += (t as f64 * ln_x - x - ln_factorial).exp();
    }
    sum.min(1.0)
}

/// Integration window for `∫_0^∞ g(s) e^{-s} ds`; the neglected tail is below `e^{-60}`.
const EXP_WINDOW: f64 = 60.0;

/// Single-user factor of the log-capacity characteristic function,
/// `E{(1 + SNR)^{i t}}` with `SNR ~ Exp(mean rho)`.
///
/// Evaluated as `∫_0^∞ e^{-s} (1 + rho s)^{i t} ds` along the ray
/// `s = r e^{±iπ/4}`, where the oscillating factor turns into a decaying one.
pub fn log_char_moment(t: f64, rho: f64) -> Result<ComplexValue> {
    log_char_moment_with(t, rho, Tolerance::absolute(1e-13).with_max_intervals(4000))
}

pub fn log_char_moment_with(t: f64, rho: f64, tol: Tolerance) -> Result<ComplexValue> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::parameter(format!("average SNR must be positive, got {rho}")));
    }
    if !t.is_finite() {
        return Err(Error::parameter("t must be finite"));
    }
    if t == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if t < 0.0 {
        return log_char_moment_with(-t, rho, tol).map(|z| z.conj());
    }
    let direction = Complex64::from_polar(1.0, FRAC_PI_4);
    // |integrand| = exp(-r cos(π/4) - t arg(1 + ρ r e^{iπ/4})); the second
    // factor alone drops below e^{-45} once arg(1 + ρs) ≥ θ = 45/t.
    let mut reach = EXP_WINDOW / FRAC_PI_4.cos();
    let theta = 45.0 / t;
    if theta < 0.5 * FRAC_PI_4 {
        let tan = theta.tan();
        reach = reach.min(tan / (rho * FRAC_PI_4.sin() * (1.0 - tan)));
    }
    let jt = Complex64::new(0.0, t);
    let integrand = |r: f64| {
        let s = direction * r;
        (jt * (1.0 + rho * s).ln() - s).exp() * direction
    };
    // For large t the mass sits within ~1/(ρt) of the origin, far below the
    // adaptive rule's first nodes; doubling segments from that scale catch it.
    let mut breaks = vec![0.0];
    let mut b = (1.0 / (1.0 + rho * t)).min(reach);
    while b < reach {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(reach);
    let segments = (breaks.len() - 1) as f64;
    let segment_tol = Tolerance {
        abs: tol.abs / segments,
        ..tol
    };
    let mut value = Complex64::new(0.0, 0.0);
    for w in breaks.windows(2) {
        value += integrate_complex(integrand, w[0], w[1], segment_tol, "log_char_moment")?;
    }
    Ok(value)
}

/// `E{ln(1 + SNR)}` with `SNR ~ Exp(mean rho)`, i.e. `e^{1/rho} E1(1/rho)`.
pub fn mean_log1p(rho: f64) -> f64 {
    scaled_e1(1.0 / rho)
}

/// `E{(ln(1 + SNR))^2}` with `SNR ~ Exp(mean rho)`, by direct quadrature.
pub fn second_moment_log1p(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1e6) {
        return Err(Error::parameter(format!(
            "second moment defined here for 0 < rho < 1e6, got {rho}"
        )));
    }
    integrate(
        |s| {
            let l = (rho * s).ln_1p();
            l * l * (-s).exp()
        },
        0.0,
        EXP_WINDOW,
        Tolerance::relative(1e-13),
        "second_moment_log1p",
    )
}
