//! Globally adaptive Gauss-Kronrod (7/15) integration on finite intervals.

// Coefficients are kept at their published precision.
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Accuracy budget for [`integrate`] and [`integrate_complex`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Maximum number of subintervals before giving up.
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 0.0,
            max_intervals: 2000,
        }
    }
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Self {
            abs,
            ..Self::default()
        }
    }

    pub fn relative(rel: f64) -> Self {
        Self {
            abs: 0.0,
            rel,
            ..Self::default()
        }
    }

    pub fn with_max_intervals(mut self, max_intervals: usize) -> Self {
        self.max_intervals = max_intervals;
        self
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Returns (kronrod estimate, |kronrod - gauss|, integral of |f|).
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.norm() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let pair = f1 + f2;
        kronrod += pair * WGK[j];
        abs_sum += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    (kronrod, (kronrod - gauss).norm(), abs_sum * half.abs())
}

/// Integrates a complex-valued function over `[a, b]`.
///
/// Subdivides the interval with the largest error estimate until the summed
/// estimate falls under `max(tol.abs, tol.rel * |I|)`, or under the roundoff
/// floor implied by the integral of `|f|`.
pub fn integrate_complex<F>(f: F, a: f64, b: f64, tol: Tolerance, context: &str) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::parameter(format!("{context}: integration limits must be finite")));
    }
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }

    let (value, error, abs_integral) = gk15(&f, a, b);
    let mut total = value;
    let mut total_error = error;
    let mut total_abs = abs_integral;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });

    loop {
        let target = tol.abs.max(tol.rel * total.norm()).max(50.0 * f64::EPSILON * total_abs);
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::Numeric {
                context: format!("{context}: non-finite integrand"),
                residual: f64::INFINITY,
                tolerance: target,
                intervals: heap.len(),
            });
        }
        if total_error <= target {
            return Ok(total);
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Numeric {
                context: context.to_string(),
                residual: total_error,
                tolerance: target,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1, a1) = gk15(&f, worst.a, mid);
        let (v2, e2, a2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_error += e1 + e2 - worst.error;
        total_abs += a1 + a2;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        // Running sums drift; resum occasionally.
        if heap.len() % 256 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_error = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// Real-valued counterpart of [`integrate_complex`].
pub fn integrate<F>(f: F, a: f64, b: f64, tol: Tolerance, context: &str) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, tol, context).map(|z| z.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x.powi(5) - 2.0 * x * x, -1.0, 2.0, Tolerance::absolute(1e-14), "poly").unwrap();
        let exact = (64.0 - 1.0) / 6.0 - 2.0 * (8.0 + 1.0) / 3.0;
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_complex_integrand() {
        // int_0^10 e^{i 7 x} dx = (e^{70 i} - 1) / (7 i)
        let v = integrate_complex(
            |x| Complex64::new(0.0, 7.0 * x).exp(),
            0.0,
            10.0,
            Tolerance::absolute(1e-13),
            "osc",
        )
        .unwrap();
        let exact = (Complex64::new(0.0, 70.0).exp() - 1.0) / Complex64::new(0.0, 7.0);
        assert!((v - exact).norm() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let v = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::absolute(1e-9), "sqrt").unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let err = integrate(
            |x| (1.0 / x).sin(),
            1e-6,
            1.0,
            Tolerance::absolute(1e-15).with_max_intervals(8),
            "wild",
        )
        .unwrap_err();
        match err {
            Error::Numeric { residual, intervals, .. } => {
                assert!(residual > 1e-15);
                assert_eq!(intervals, 8);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
