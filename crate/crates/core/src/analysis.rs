//! Closed forms and approximations for the average rates.
//!
//! Rates are in bits/s/Hz and carry the `|G|` sum-rate prefactor, like the
//! Monte Carlo estimates in [`crate::rates`]. Ratios and gains are unitless.
//! Limit results are evaluated at finite parameters; the limit value itself
//! is documented on each function.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{
    gauss_hermite_rule, log_char_moment, mean_log1p, q_function, quadrature, regularized_upper_gamma,
    scaled_e1, second_moment_log1p, MAX_HERMITE_ORDER,
};
use crate::parallel::{map_indexed, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    ExactMn,
    ExactAccIntegral,
    LowSnrMn,
    LowSnrAccMultinomial,
    LargeBNormal,
    LargeBRatioLimit,
    LowSnrRatioLimit,
}

/// Parameters an approximation was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Params {
    pub rho: Option<f64>,
    pub users_per_group: Option<usize>,
    pub gain: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxResult {
    pub value: f64,
    pub method: Method,
    pub params: Params,
}

impl ApproxResult {
    fn new(value: f64, method: Method, rho: Option<f64>, users_per_group: Option<usize>, gain: usize) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Numeric {
                context: format!("{method:?} evaluation"),
                residual: value,
                tolerance: 0.0,
                intervals: 0,
            });
        }
        Ok(Self {
            value,
            method,
            params: Params {
                rho,
                users_per_group,
                gain: Some(gain),
            },
        })
    }
}

/// How to evaluate `H_G`, the expected maximum of `G` i.i.d. standard normals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HMethod {
    /// Closed forms, available for `G ≤ 5`.
    Table,
    /// Adaptive quadrature of the order-statistic integral; the reference.
    Integral,
    /// Gauss-Hermite quadrature with the given number of nodes.
    Ghq(usize),
    /// `sqrt(2 ln G)`, an upper bound that is tight only asymptotically.
    Asymptotic,
}

impl HMethod {
    /// Closed forms where they exist, 7-node Gauss-Hermite beyond.
    pub fn default_for(gain: usize) -> Self {
        if gain <= 5 {
            HMethod::Table
        } else {
            HMethod::Ghq(7)
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::parameter(format!("average SNR must be positive and finite, got {rho}")))
    }
}

fn check_gain(gain: usize) -> Result<()> {
    if gain >= 1 {
        Ok(())
    } else {
        Err(Error::parameter("|G| must be at least 1"))
    }
}

fn check_users(users: usize, min: usize) -> Result<()> {
    if users >= min {
        Ok(())
    } else {
        Err(Error::parameter(format!("B must be at least {min}, got {users}")))
    }
}

/// Exact average MN rate, `(G/ln2) e^{G/ρ} E1(G/ρ)`. `G = 1` is TDM.
pub fn exact_mn_rate(rho: f64, gain: usize) -> Result<ApproxResult> {
    check_rho(rho)?;
    check_gain(gain)?;
    let g = gain as f64;
    ApproxResult::new(g * scaled_e1(g / rho) / LN_2, Method::ExactMn, Some(rho), None, gain)
}

/// Effective MN gain over TDM. Tends to `G` as `ρ → ∞` (logarithmically
/// slowly) and to 1 as `ρ → 0`.
pub fn mn_gain_exact(rho: f64, gain: usize) -> Result<f64> {
    check_rho(rho)?;
    check_gain(gain)?;
    let g = gain as f64;
    Ok(g * scaled_e1(g / rho) / scaled_e1(1.0 / rho))
}

/// Second-order low-SNR form of the MN rate:
/// `(G/ln2) [ln(1 + ρ/G) − (ρ/G)² / (2 (1 + ρ/G)²)]`.
pub fn mn_rate_low_snr(rho: f64, gain: usize) -> Result<ApproxResult> {
    check_rho(rho)?;
    check_gain(gain)?;
    let g = gain as f64;
    let x = rho / g;
    let value = g / LN_2 * (x.ln_1p() - x * x / (2.0 * (1.0 + x) * (1.0 + x)));
    ApproxResult::new(value, Method::LowSnrMn, Some(rho), None, gain)
}

/// A way of writing `|G|` as an ordered sum of `B` nonnegative parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Composition {
    pub b: Vec<usize>,
}

/// Largest number of compositions [`psi`] will enumerate.
pub const MAX_COMPOSITIONS: u64 = 10_000_000;

fn composition_count(total: usize, parts: usize) -> Result<u64> {
    // C(n, k) with k ≤ n/2; the partial products C(n, i) increase with i,
    // so stop as soon as one passes the cap.
    let k = (parts - 1).min(total);
    let n = total + parts - 1;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc >= MAX_COMPOSITIONS as u128 {
            break;
        }
    }
    if acc >= MAX_COMPOSITIONS as u128 {
        return Err(Error::parameter(format!(
            "|G|={total}, B={parts} needs at least {MAX_COMPOSITIONS} compositions; use the Monte Carlo estimate instead"
        )));
    }
    Ok(acc as u64)
}

/// Calls `visit` on every composition in lexicographic order.
fn for_each_composition(total: usize, parts: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(pos: usize, remaining: usize, b: &mut [usize], visit: &mut impl FnMut(&[usize])) {
        if pos + 1 == b.len() {
            b[pos] = remaining;
            visit(b);
            return;
        }
        for v in 0..=remaining {
            b[pos] = v;
            rec(pos + 1, remaining - v, b, visit);
        }
    }
    let mut b = vec![0; parts];
    rec(0, total, &mut b, visit);
}

/// All compositions of `total` into `parts` parts, lexicographic.
pub fn compositions(total: usize, parts: usize) -> Result<Vec<Composition>> {
    check_users(parts, 1)?;
    let count = composition_count(total, parts)?;
    let mut out = Vec::with_capacity(count as usize);
    for_each_composition(total, parts, &mut |b| out.push(Composition { b: b.to_vec() }));
    Ok(out)
}

/// `Ψ_G(B)`: the expected minimum of `G` i.i.d. Gamma(B, 1) variables,
/// as a finite sum over compositions `b` of `G` into `B` parts:
///
/// `Σ_b  G!/∏b_t! · s! / (G^{s+1} ∏((t−1)!)^{b_t})`,  `s = Σ (t−1) b_t`.
pub fn psi(gain: usize, users_per_group: usize) -> Result<f64> {
    check_gain(gain)?;
    check_users(users_per_group, 1)?;
    composition_count(gain, users_per_group)?;
    let max_s = (users_per_group - 1) * gain;
    let mut ln_fact = vec![0.0_f64; max_s.max(gain) + 1];
    for i in 1..ln_fact.len() {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let ln_g = (gain as f64).ln();
    let mut sum = 0.0;
    for_each_composition(gain, users_per_group, &mut |b| {
        let mut s = 0;
        let mut ln_term = ln_fact[gain];
        for (t, &bt) in b.iter().enumerate() {
            s += t * bt;
            ln_term -= ln_fact[bt] + bt as f64 * ln_fact[t];
        }
        ln_term += ln_fact[s] - (s + 1) as f64 * ln_g;
        sum += ln_term.exp();
    });
    Ok(sum)
}

/// Low-SNR ACC rate, `ρ G Ψ / (B ln2)`.
pub fn acc_rate_low_snr(rho: f64, users_per_group: usize, gain: usize) -> Result<ApproxResult> {
    check_rho(rho)?;
    let value = rho * gain as f64 * psi(gain, users_per_group)? / (users_per_group as f64 * LN_2);
    ApproxResult::new(value, Method::LowSnrAccMultinomial, Some(rho), Some(users_per_group), gain)
}

/// Low-SNR limit of the ACC/MN rate ratio, `(G/B) Ψ`. Tends to `G` as `B → ∞`.
pub fn acc_over_mn_low_snr(gain: usize, users_per_group: usize) -> Result<ApproxResult> {
    let value = gain as f64 / users_per_group as f64 * psi(gain, users_per_group)?;
    ApproxResult::new(value, Method::LowSnrRatioLimit, None, Some(users_per_group), gain)
}

/// Large-`B` limit of the ACC/MN rate ratio at any SNR,
/// `e^{1/ρ}E1(1/ρ) / (e^{G/ρ}E1(G/ρ))`. Tends to `G` as `ρ → 0`.
pub fn acc_over_mn_large_b(rho: f64, gain: usize) -> Result<ApproxResult> {
    check_rho(rho)?;
    check_gain(gain)?;
    let value = scaled_e1(1.0 / rho) / scaled_e1(gain as f64 / rho);
    ApproxResult::new(value, Method::LargeBRatioLimit, Some(rho), None, gain)
}

/// Expected maximum of `G` i.i.d. standard normals.
pub fn h_order_stat(gain: usize, method: HMethod) -> Result<f64> {
    check_gain(gain)?;
    match method {
        HMethod::Table => {
            let inv_sqrt_pi = 1.0 / PI.sqrt();
            let inv_pi_3_2 = inv_sqrt_pi / PI;
            match gain {
                1 => Ok(0.0),
                2 => Ok(inv_sqrt_pi),
                3 => Ok(1.5 * inv_sqrt_pi),
                4 => Ok(3.0 * inv_pi_3_2 * (-1.0_f64 / 3.0).acos()),
                5 => Ok(2.5 * inv_pi_3_2 * (-23.0_f64 / 27.0).acos()),
                _ => Err(Error::parameter(format!("no closed form for H_{gain}; tabulated only up to 5"))),
            }
        }
        HMethod::Integral => {
            if gain == 1 {
                return Ok(0.0);
            }
            let g = gain as f64;
            let norm = g / (2.0 * PI).sqrt();
            let integrand = |y: f64| -> f64 {
                let q = q_function(y);
                if q <= 0.0 {
                    return 0.0;
                }
                y * ((g - 1.0) * q.ln() - 0.5 * y * y).exp()
            };
            // min of G normals; the mass lies well inside [-40, 40].
            let tol = quadrature::Tolerance::absolute(1e-14).with_max_intervals(4000);
            let lower = quadrature::integrate(integrand, -40.0, 0.0, tol, "order-statistic integral")?;
            let upper = quadrature::integrate(integrand, 0.0, 40.0, tol, "order-statistic integral")?;
            Ok(-norm * (lower + upper))
        }
        HMethod::Ghq(order) => {
            if order == 0 || order > MAX_HERMITE_ORDER {
                return Err(Error::parameter(format!(
                    "Gauss-Hermite order must be in 1..={MAX_HERMITE_ORDER}, got {order}"
                )));
            }
            if gain == 1 {
                return Ok(0.0);
            }
            let rule = gauss_hermite_rule(order)?;
            let g = gain as f64;
            let sum = rule.integrate(|x| x * q_function(std::f64::consts::SQRT_2 * x).powi(gain as i32 - 1));
            Ok(-std::f64::consts::SQRT_2 * g / PI.sqrt() * sum)
        }
        HMethod::Asymptotic => Ok((2.0 * (gain as f64).ln()).sqrt()),
    }
}

/// Large-`B` normal approximation of the ACC rate,
/// `(G/ln2)(μ − σ H_G / sqrt(B))` with `μ`, `σ` the mean and standard
/// deviation of `ln(1 + SNR)`.
pub fn acc_rate_large_b(rho: f64, users_per_group: usize, gain: usize, h_method: HMethod) -> Result<ApproxResult> {
    check_rho(rho)?;
    check_users(users_per_group, 2)?;
    let h = h_order_stat(gain, h_method)?;
    let mu = mean_log1p(rho);
    let variance = second_moment_log1p(rho)? - mu * mu;
    if !(variance > 0.0) {
        return Err(Error::Numeric {
            context: "variance of log-capacity".into(),
            residual: variance,
            tolerance: 0.0,
            intervals: 0,
        });
    }
    let value = gain as f64 / LN_2 * (mu - variance.sqrt() * h / (users_per_group as f64).sqrt());
    ApproxResult::new(value, Method::LargeBNormal, Some(rho), Some(users_per_group), gain)
}

/// Large-`B` effective ACC gain over TDM: exactly the nominal gain `|G|`.
pub fn acc_gain_limit(gain: usize) -> f64 {
    gain as f64
}

// ---------------------------------------------------------------------------
// Exact ACC rate by characteristic-function inversion.
//
// S = Σ_b ln(1 + X_b) has characteristic function m(t)^B. Its survival is
// recovered as that of R = ρ Σ_b E_b ~ Gamma(B, ρ) plus a Gil-Pelaez
// correction whose integrand (φ_S − φ_R)(t)/t decays like t^{−B−2}, so the
// t-integral can be truncated with a known tail bound. The correction is
// tabulated once on a composite Gauss-Legendre t-grid and reused for every
// outer abscissa y.
// ---------------------------------------------------------------------------

/// 16-point Gauss-Legendre rule on [-1, 1] (positive half; symmetric).
const GL16_NODES: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_8,
    0.755_404_408_355_003,
    0.865_631_202_387_831_8,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL16_WEIGHTS: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_5,
    0.149_595_988_816_576_7,
    0.124_628_971_255_533_9,
    0.095_158_511_682_492_78,
    0.062_253_523_938_647_89,
    0.027_152_459_411_754_095,
];

fn push_gl_panel(a: f64, b: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    for (x, w) in GL16_NODES.iter().zip(GL16_WEIGHTS) {
        nodes.push(mid - half * x);
        weights.push(half * w);
        nodes.push(mid + half * x);
        weights.push(half * w);
    }
}

/// Survival function of `S = Σ_{b≤B} ln(1 + X_b)`, `X_b ~ Exp(mean ρ)`,
/// tabulated for `y ∈ [0, y_max]`.
#[derive(Debug, Clone)]
pub struct LogCapacitySumSurvival {
    rho: f64,
    users: usize,
    /// `w_i (φ_S − φ_R)(t_i) / (π t_i)` at the t-grid nodes.
    nodes: Vec<f64>,
    coefficients: Vec<Complex64>,
}

impl LogCapacitySumSurvival {
    /// `tail_tol` bounds the truncation error of the t-integral; `refine`
    /// divides the t-panel width.
    fn build(rho: f64, users: usize, y_max: f64, tail_tol: f64, refine: f64, exec: Execution) -> Result<Self> {
        let b = users as f64;
        // Tail of the correction beyond T is below B ρ^{-B} T^{-B-1} / (π (B+1)).
        let t_max = (b * rho.powf(-b) / (PI * (b + 1.0) * tail_tol)).powf(1.0 / (b + 1.0));
        // Local phase rate: the e^{-ity} carrier plus the arguments of both
        // characteristic functions, each at most B ρ / (1 + ρ² t²), plus a
        // margin for their moduli, which vary on the scale 1/ρ.
        let margin = rho.min(1.0);
        let phase_rate = |t: f64| y_max + margin + 2.0 * b * rho / (1.0 + rho * rho * t * t);
        let mut breaks = vec![0.0];
        let mut t = 0.0;
        while t < t_max {
            t = (t + 1.0 / (refine * phase_rate(t))).min(t_max);
            breaks.push(t);
        }
        let mut nodes = Vec::with_capacity(16 * breaks.len());
        let mut weights = Vec::with_capacity(16 * breaks.len());
        for w in breaks.windows(2) {
            push_gl_panel(w[0], w[1], &mut nodes, &mut weights);
        }
        let coefficients = map_indexed(nodes.len(), exec, |i| -> Result<Complex64> {
            let t = nodes[i];
            let phi_s = log_char_moment(t, rho)?.powi(users as i32);
            let phi_r = Complex64::new(1.0, -rho * t).powi(-(users as i32));
            Ok((phi_s - phi_r) * (weights[i] / (PI * t)))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rho,
            users,
            nodes,
            coefficients,
        })
    }

    /// `P(S > y)`, clamped to [0, 1].
    pub fn survival(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        let correction: f64 = self
            .nodes
            .iter()
            .zip(&self.coefficients)
            .map(|(&t, c)| {
                let (sin, cos) = (t * y).sin_cos();
                // Im{e^{-ity} c}
                c.im * cos - c.re * sin
            })
            .sum();
        let reference = regularized_upper_gamma(self.users as u32, y / self.rho);
        (reference + correction).clamp(0.0, 1.0)
    }

    /// Number of characteristic-function evaluations in the table.
    pub fn table_len(&self) -> usize {
        self.nodes.len()
    }
}

/// Outer integration limit: beyond it `P(S > y)^G` integrates to less than `eps`.
fn survival_cutoff(rho: f64, users: usize, gain: usize, eps: f64) -> f64 {
    let b = users as f64;
    let g = gain as f64;
    // Chernoff: P(S > y) ≤ M(λ)^B e^{-λy} with M(λ) = E{(1+X)^λ}
    // = Σ_k λ!/(λ−k)! ρ^k for integer λ. Then ∫_y^∞ P^G ≤ eps once
    // y ≥ (B ln M(λ) + ln(1/(Gλ eps))/G) / λ; take the best λ.
    let chernoff = (1..=40u32)
        .map(|lambda| {
            let l = lambda as f64;
            let mut ln_terms = Vec::with_capacity(lambda as usize + 1);
            let mut ln_falling = 0.0;
            for k in 0..=lambda {
                if k > 0 {
                    ln_falling += ((lambda - k + 1) as f64).ln();
                }
                ln_terms.push(ln_falling + k as f64 * rho.ln());
            }
            let top = ln_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ln_m = top + ln_terms.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
            (b * ln_m + (1.0 / (g * l * eps)).ln() / g) / l
        })
        .fold(f64::INFINITY, f64::min);
    // S ≤ R pathwise, so P(S > y) ≤ P(R > y). Bisect for Q_B(y/ρ)^G ≤ eps · (ρ-scaled margin).
    let target = |y: f64| regularized_upper_gamma(users as u32, y / rho).powf(g) * rho * (b + y / rho) <= eps;
    let mut hi = rho;
    while !target(hi) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if target(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    chernoff.min(hi)
}

/// `P(S > y)` for `S` a sum of `B` log-capacities, on the given abscissae.
pub fn log_capacity_sum_survival(rho: f64, users_per_group: usize, ys: &[f64]) -> Result<Vec<f64>> {
    check_rho(rho)?;
    check_users(users_per_group, 2)?;
    let y_max = ys.iter().copied().fold(0.0, f64::max);
    let table = LogCapacitySumSurvival::build(rho, users_per_group, y_max, 1e-10, 1.0, Execution::default())?;
    Ok(ys.iter().map(|&y| table.survival(y)).collect())
}

const EXACT_ACC_REL_TOL: f64 = 1e-7;
const EXACT_ACC_MAX_LEVEL: u32 = 3;

/// Exact average ACC rate `(G/ln2)(1/B) ∫_0^∞ P(S > y)^G dy` by
/// characteristic-function inversion. Requires `B ≥ 2`; for `B = 1` use
/// [`exact_mn_rate`].
///
/// The t-grid and the outer y-grid are refined together until two
/// successive levels agree to a relative `1e-7`.
pub fn acc_rate_exact_integral(rho: f64, users_per_group: usize, gain: usize) -> Result<ApproxResult> {
    acc_rate_exact_integral_with(rho, users_per_group, gain, Execution::default())
}

pub fn acc_rate_exact_integral_with(
    rho: f64,
    users_per_group: usize,
    gain: usize,
    exec: Execution,
) -> Result<ApproxResult> {
    check_rho(rho)?;
    check_users(users_per_group, 2)?;
    check_gain(gain)?;
    let y_max = survival_cutoff(rho, users_per_group, gain, 1e-13);
    let scale = gain as f64 / (users_per_group as f64 * LN_2);

    let level_value = |level: u32| -> Result<f64> {
        let refine = (1u32 << level) as f64;
        let tail_tol = 1e-9 / 10f64.powi(level as i32);
        let table = LogCapacitySumSurvival::build(rho, users_per_group, y_max, tail_tol, refine, exec)?;
        let panels = 16usize << level;
        let width = y_max / panels as f64;
        let mut nodes = Vec::with_capacity(16 * panels);
        let mut weights = Vec::with_capacity(16 * panels);
        for p in 0..panels {
            push_gl_panel(p as f64 * width, (p + 1) as f64 * width, &mut nodes, &mut weights);
        }
        let values = map_indexed(nodes.len(), exec, |i| table.survival(nodes[i]).powi(gain as i32));
        Ok(values.iter().zip(&weights).map(|(v, w)| v * w).sum())
    };

    let mut previous = level_value(0)?;
    let mut residual = f64::INFINITY;
    for level in 1..=EXACT_ACC_MAX_LEVEL {
        let current = level_value(level)?;
        residual = (current - previous).abs();
        if residual <= EXACT_ACC_REL_TOL * current.abs() {
            return ApproxResult::new(
                scale * current,
                Method::ExactAccIntegral,
                Some(rho),
                Some(users_per_group),
                gain,
            );
        }
        previous = current;
    }
    Err(Error::Numeric {
        context: format!("exact ACC integral (rho={rho}, B={users_per_group}, G={gain})"),
        residual: scale * residual,
        tolerance: scale * EXACT_ACC_REL_TOL * previous.abs(),
        intervals: (16usize << EXACT_ACC_MAX_LEVEL) * 16,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `e^a E1(a)` at a = 1, 4 (mpmath).
    const SCALED_E1_1: f64 = 0.596_347_362_323_194_1;
    const SCALED_E1_4: f64 = 0.206_345_649_901_055_83;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn exact_mn_examples() {
        let tdm = exact_mn_rate(1.0, 1).unwrap();
        assert_eq!(tdm.method, Method::ExactMn);
        assert!((tdm.value - 0.860_347_382_270_886).abs() < 1e-12);
        assert!((exact_mn_rate(1.0, 4).unwrap().value - 4.0 / LN_2 * SCALED_E1_4).abs() < 1e-12);
        for g in [1usize, 4, 10] {
            let rho = 1e12;
            let v = exact_mn_rate(rho, g).unwrap().value;
            let ratio = v / (g as f64 * (rho / g as f64).log2());
            assert!((ratio - 1.0).abs() < 0.03, "G={g}: {ratio}");
        }
        // no overflow at extreme G/ρ
        let tiny = exact_mn_rate(1e-6, 100).unwrap().value;
        assert!(tiny.is_finite() && tiny > 0.0);
        assert!(exact_mn_rate(0.0, 2).is_err());
        assert!(exact_mn_rate(1.0, 0).is_err());
    }

    #[test]
    fn mn_gain_examples() {
        let g = mn_gain_exact(0.01, 10).unwrap();
        assert!((1.0..=1.05).contains(&g), "{g}");
        assert!((g - 1.008_894_987_564_591).abs() < 1e-12);
        for rho in [1e-3, 1.0, 1e3] {
            assert_eq!(mn_gain_exact(rho, 1).unwrap(), 1.0);
        }
        // Convergence to G is logarithmic: monotone in ρ, within 2% only at astronomic SNR.
        let mut prev = 1.0;
        for exp in [0, 3, 6, 12, 24, 60] {
            let v = mn_gain_exact(10f64.powi(exp), 10).unwrap();
            assert!(v > prev && v < 10.0);
            prev = v;
        }
        assert!(rel(mn_gain_exact(1e60, 10).unwrap(), 10.0) < 0.02);
        assert!((mn_gain_exact(1e6, 10).unwrap() - 8.26).abs() < 0.01);
    }

    #[test]
    fn low_snr_mn_examples() {
        let v = mn_rate_low_snr(0.1, 1).unwrap().value;
        let expected = (1.1f64.ln() - 0.01 / (2.0 * 1.21)) / LN_2;
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.1315).abs() < 1e-4);
        for g in [1usize, 3, 10] {
            let rho = 1e-6;
            assert!(rel(mn_rate_low_snr(rho, g).unwrap().value, rho / LN_2) < 1e-5);
        }
        // Tight at low SNR ...
        for g in [1usize, 2, 4, 10] {
            for rho in [1e-3, 1e-2, 0.1] {
                let exact = exact_mn_rate(rho, g).unwrap().value;
                assert!(rel(mn_rate_low_snr(rho, g).unwrap().value, exact) < 0.01);
            }
        }
        // ... but 1.6% low at ρ = 1, |G| = 4 (value from mpmath).
        assert!((mn_rate_low_snr(1.0, 4).unwrap().value - 1.172_296_776_278_332_3).abs() < 1e-12);
    }

    #[test]
    fn composition_enumeration() {
        let all = compositions(2, 3).unwrap();
        let listed: Vec<Vec<usize>> = all.iter().map(|c| c.b.clone()).collect();
        assert_eq!(
            listed,
            vec![vec![0, 0, 2], vec![0, 1, 1], vec![0, 2, 0], vec![1, 0, 1], vec![1, 1, 0], vec![2, 0, 0]]
        );
        assert_eq!(compositions(5, 4).unwrap().len(), 56);
        assert!(compositions(200, 8).is_err());
    }

    #[test]
    fn psi_examples() {
        for g in 1..=12 {
            assert!((psi(g, 1).unwrap() - 1.0 / g as f64).abs() < 1e-14);
        }
        for b in 1..=20 {
            assert!((psi(1, b).unwrap() - b as f64).abs() < 1e-12 * b as f64);
        }
        assert!((psi(2, 2).unwrap() - 1.25).abs() < 1e-15);
        // mpmath survival integrals ∫ Q_B(y)^G dy
        assert!((psi(4, 3).unwrap() - 1.466_033_935_546_875).abs() < 1e-13);
        assert!(rel(psi(10, 6).unwrap(), 2.853_638_274_134_517).abs() < 1e-12);
        assert!(rel(psi(4, 64).unwrap(), 55.964_184_701_658_63).abs() < 1e-11);
        assert!(psi(300, 10).is_err());
    }

    #[test]
    fn psi_matches_survival_quadrature() {
        // Independent route: E[min] = ∫ Q_B(y)^G dy.
        for (g, b) in [(2usize, 2usize), (3, 5), (7, 3), (5, 5)] {
            let direct = quadrature::integrate(
                |y| regularized_upper_gamma(b as u32, y).powi(g as i32),
                0.0,
                200.0,
                quadrature::Tolerance::absolute(1e-13),
                "psi oracle",
            )
            .unwrap();
            assert!(rel(psi(g, b).unwrap(), direct) < 1e-10, "G={g} B={b}");
        }
    }

    #[test]
    fn low_snr_acc_examples() {
        let v = acc_rate_low_snr(0.01, 2, 2).unwrap().value;
        assert!((v - 0.01 * 2.0 / (2.0 * LN_2) * 1.25).abs() < 1e-15);
        assert!((v - 0.01803).abs() < 1e-5);
        for g in [1usize, 4, 10] {
            assert!(rel(acc_rate_low_snr(0.3, 1, g).unwrap().value, 0.3 / LN_2) < 1e-13);
        }
    }

    #[test]
    fn low_snr_ratio_examples() {
        assert!((acc_over_mn_low_snr(4, 1).unwrap().value - 1.0).abs() < 1e-14);
        assert!((acc_over_mn_low_snr(2, 2).unwrap().value - 1.25).abs() < 1e-15);
        // Increasing and concave in B, below G.
        let vals: Vec<f64> = (1..=12).map(|b| acc_over_mn_low_snr(4, b).unwrap().value).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0] && w[1] < 4.0));
        assert!(vals.windows(3).all(|w| w[2] - w[1] < w[1] - w[0]));
        // Slow approach to G: at B = 64 the ratio is still 3.498.
        let at64 = acc_over_mn_low_snr(4, 64).unwrap().value;
        assert!((at64 - 3.497_761_543_853_665).abs() < 1e-9, "{at64}");
    }

    #[test]
    fn large_b_ratio_examples() {
        for rho in [1e-3, 1.0, 1e3] {
            assert!((acc_over_mn_large_b(rho, 1).unwrap().value - 1.0).abs() < 1e-15);
        }
        assert!(rel(acc_over_mn_large_b(1e-3, 4).unwrap().value, 4.0) < 0.02);
        let direct = 4.0 / LN_2 * SCALED_E1_1 / exact_mn_rate(1.0, 4).unwrap().value;
        assert!(rel(acc_over_mn_large_b(1.0, 4).unwrap().value, direct) < 1e-13);
        // Decreasing toward 1, but only logarithmically in ρ.
        let mut prev = 4.0;
        for exp in [0, 4, 8, 30, 300] {
            let v = acc_over_mn_large_b(10f64.powi(exp), 4).unwrap().value;
            assert!(v < prev && v > 1.0);
            prev = v;
        }
        assert!(rel(acc_over_mn_large_b(1e8, 4).unwrap().value, 1.084).abs() < 1e-3);
        assert!(rel(prev, 1.0) < 0.01);
    }

    #[test]
    fn large_b_ratio_sandwich() {
        // ½ ln(1 + 2/x) < e^x E1(x) < ln(1 + 1/x)
        for i in 0..=60 {
            let rho = 10f64.powf(-3.0 + 0.1 * i as f64);
            for g in [2usize, 4, 10] {
                let gf = g as f64;
                let v = acc_over_mn_large_b(rho, g).unwrap().value;
                let lower = 0.5 * (2.0 * rho).ln_1p() / (rho / gf).ln_1p();
                let upper = rho.ln_1p() / (0.5 * (2.0 * rho / gf).ln_1p());
                assert!(lower <= v && v <= upper, "rho={rho} G={g}: {lower} {v} {upper}");
                assert!((1.0..=gf).contains(&v));
            }
        }
    }

    #[test]
    fn h_table_examples() {
        assert_eq!(h_order_stat(1, HMethod::Table).unwrap(), 0.0);
        assert!((h_order_stat(2, HMethod::Table).unwrap() - 0.564_189_583_547_756_3).abs() < 1e-15);
        assert!((h_order_stat(3, HMethod::Table).unwrap() - 0.846_284_375_321_634_4).abs() < 1e-15);
        assert!((h_order_stat(4, HMethod::Table).unwrap() - 1.029_375_373_003_964).abs() < 1e-15);
        assert!((h_order_stat(5, HMethod::Table).unwrap() - 1.162_964_473_640_519_6).abs() < 1e-15);
        assert!(h_order_stat(6, HMethod::Table).is_err());
    }

    #[test]
    fn h_integral_matches_reference() {
        // mpmath values of ∫ y G φ(y) Φ(y)^{G-1} dy
        let reference = [
            (2usize, 0.564_189_583_547_756_3),
            (5, 1.162_964_473_640_519_6),
            (10, 1.538_752_730_835_173),
            (20, 1.867_475_059_798_320_5),
        ];
        for (g, expected) in reference {
            let v = h_order_stat(g, HMethod::Integral).unwrap();
            assert!((v - expected).abs() < 1e-10, "G={g}: {v}");
        }
        assert_eq!(h_order_stat(1, HMethod::Integral).unwrap(), 0.0);
    }

    #[test]
    fn h_ghq_examples() {
        let table = h_order_stat(3, HMethod::Table).unwrap();
        assert!((h_order_stat(3, HMethod::Ghq(7)).unwrap() - table).abs() < 1e-3);
        // Higher orders converge to the reference.
        let g10 = h_order_stat(10, HMethod::Integral).unwrap();
        assert!((h_order_stat(10, HMethod::Ghq(64)).unwrap() - g10).abs() < 1e-6);
        assert!(h_order_stat(3, HMethod::Ghq(0)).is_err());
        assert!(h_order_stat(3, HMethod::Ghq(65)).is_err());
        assert_eq!(HMethod::default_for(5), HMethod::Table);
        assert_eq!(HMethod::default_for(6), HMethod::Ghq(7));
    }

    #[test]
    fn h_bounds_and_monotonicity() {
        let mut prev = 0.0;
        for g in 2..=200usize {
            let h = h_order_stat(g, HMethod::Integral).unwrap();
            let lg = (g as f64).ln();
            assert!(h >= (lg / (PI * LN_2)).sqrt() - 1e-12, "G={g}");
            assert!(h <= (2.0 * lg).sqrt());
            assert!(h > prev);
            prev = h;
        }
        let h = h_order_stat(10_000, HMethod::Integral).unwrap();
        let asym = h_order_stat(10_000, HMethod::Asymptotic).unwrap();
        assert!(h <= asym && rel(h, asym) < 0.15);
    }

    #[test]
    fn large_b_examples() {
        let mu = SCALED_E1_1;
        let limit = 4.0 / LN_2 * mu;
        let far = acc_rate_large_b(1.0, 1_000_000, 4, HMethod::Table).unwrap();
        assert!(rel(far.value, limit) < 1e-3);
        let mut prev = 0.0;
        for b in [2usize, 10, 100, 1000] {
            let v = acc_rate_large_b(1.0, b, 4, HMethod::Table).unwrap().value;
            assert!(v <= limit && v > prev);
            prev = v;
        }
        // σ² = E[ln²(1+X)] − μ² at ρ = 1 (mpmath)
        let v = acc_rate_large_b(1.0, 16, 2, HMethod::Table).unwrap().value;
        let sigma = 0.419_881_642_269_566_26;
        let expected = 2.0 / LN_2 * (mu - sigma * 0.564_189_583_547_756_3 / 4.0);
        assert!(rel(v, expected) < 1e-12);
        assert!(acc_rate_large_b(1.0, 1, 4, HMethod::Table).is_err());
        assert_eq!(acc_gain_limit(10), 10.0);
        assert_eq!(acc_gain_limit(1), 1.0);
    }

    #[test]
    fn survival_is_a_distribution() {
        let ys: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let surv = log_capacity_sum_survival(1.0, 3, &ys).unwrap();
        assert_eq!(surv[0], 1.0);
        assert!(surv.iter().all(|&p| (0.0..=1.0).contains(&p)));
        assert!(surv.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        assert!(*surv.last().unwrap() < 1e-3);
    }

    #[test]
    fn survival_matches_closed_form_for_two_users() {
        // B = 2: P(S > y) = ∫ e^{-s} P(ln(1+ρE) > y − ln(1+ρs)) ds.
        let rho = 0.7f64;
        let ys = [0.2, 0.8, 1.5, 3.0];
        let surv = log_capacity_sum_survival(rho, 2, &ys).unwrap();
        for (&y, &p) in ys.iter().zip(&surv) {
            let split = y.exp_m1() / rho;
            let inner = quadrature::integrate(
                |s| (-s - ((y - (rho * s).ln_1p()).exp_m1() / rho)).exp(),
                0.0,
                split,
                quadrature::Tolerance::absolute(1e-14),
                "oracle",
            )
            .unwrap();
            let direct = inner + (-split).exp();
            assert!((p - direct).abs() < 1e-8, "y={y}: {p} vs {direct}");
        }
    }

    #[test]
    fn exact_acc_matches_nested_quadrature() {
        // Independent nested real-axis quadrature of ∫ P(S>y)^G dy.
        let cases = [
            (1.0, 2usize, 2usize, 1.237_840_665_617_191),
            (1.0, 3, 4, 2.060_777_434_648_347),
            (0.1, 3, 4, 0.270_127_604_279_831_8),
            (10.0, 2, 3, 6.325_849_755_336_409),
        ];
        for (rho, b, g, expected) in cases {
            let v = acc_rate_exact_integral(rho, b, g).unwrap();
            assert_eq!(v.method, Method::ExactAccIntegral);
            assert!(rel(v.value, expected) < 1e-6, "({rho},{b},{g}): {} vs {expected}", v.value);
        }
        assert!(acc_rate_exact_integral(1.0, 1, 2).is_err());
    }

    #[test]
    fn exact_acc_sits_between_mn_and_large_b_limit() {
        let v = acc_rate_exact_integral(1.0, 4, 3).unwrap().value;
        assert!(v > exact_mn_rate(1.0, 3).unwrap().value);
        assert!(v < 3.0 / LN_2 * SCALED_E1_1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn mn_gain_in_range(rho in 1e-3f64..1e3, g in 2usize..20) {
            let v = mn_gain_exact(rho, g).unwrap();
            prop_assert!(v > 1.0 && v < g as f64);
        }

        #[test]
        fn psi_positive_and_bounded(g in 1usize..8, b in 1usize..8) {
            let p = psi(g, b).unwrap();
            // min of G Gamma(B) variables has mean in (0, B]
            prop_assert!(p > 0.0 && p <= b as f64 + 1e-12);
        }

        #[test]
        fn large_b_ratio_decreasing_in_snr(rho in 1e-3f64..1e3, g in 2usize..12) {
            let a = acc_over_mn_large_b(rho, g).unwrap().value;
            let b = acc_over_mn_large_b(rho * 1.5, g).unwrap().value;
            prop_assert!(b <= a + 1e-12);
        }
    }
}
