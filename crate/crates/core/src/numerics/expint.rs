//! Exponential integrals of real negative argument.
//!
//! Everything is expressed through `E1(a) = -Ei(-a)` for `a > 0`. The scaled
//! form `e^a E1(a)` is what the rate formulas need, and it stays O(1/a) where
//! `e^a` alone would overflow.

// Coefficients are kept at their published precision.
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_43;

/// Below this argument the power series is used, above it the continued fraction.
const SERIES_CUTOFF: f64 = 1.0;

fn e1_series(a: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -a / kf;
        let contrib = term / kf;
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - a.ln() - sum
}

/// Lentz evaluation of the continued fraction for `e^a E1(a)`.
fn scaled_e1_fraction(a: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = a + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// `e^a E1(a)` for `a > 0`.
pub fn scaled_e1(a: f64) -> f64 {
    debug_assert!(a > 0.0);
    if a <= SERIES_CUTOFF {
        a.exp() * e1_series(a)
    } else {
        scaled_e1_fraction(a)
    }
}

/// `E1(a)` for `a > 0`.
pub fn e1(a: f64) -> f64 {
    if a <= SERIES_CUTOFF {
        e1_series(a)
    } else {
        (-a).exp() * scaled_e1_fraction(a)
    }
}

/// The exponential integral `Ei(x)` restricted to `x < 0`.
pub fn exp_int_ei(x: f64) -> Result<f64> {
    if !(x < 0.0) || !x.is_finite() {
        return Err(Error::parameter(format!("Ei(x) requires finite x < 0, got {x}")));
    }
    Ok(-e1(-x))
}
