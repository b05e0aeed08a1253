//! Instantaneous rate metrics and their Monte Carlo averages.
//!
//! A trial draws the SNRs of the `|G| × B` users of one stage. The stage set
//! is always the first `|G|` groups: every stage has the same statistics, so
//! averaging over all of them would only cost time.
//!
//! Per-trial values are computed in natural-log units and converted to
//! bits/s/Hz by one shared expression, so ACC and MN agree bit for bit when
//! `B = 1`.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::parallel::{map_indexed, Execution};
use crate::scheduling::StageSet;
pub use crate::scheduling::Scheme;
use crate::system::{fill_exponential, SeedSpec, SnrMatrix, SystemConfig};

/// Trials per independently accumulated block. Fixed so that the merge tree
/// (and hence every rounding) is independent of the worker count.
const BLOCK_TRIALS: u64 = 1024;

/// Smallest accepted Monte Carlo run.
pub const MIN_TRIALS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    /// Average rate in bits/s/Hz.
    pub mean: f64,
    /// Sample standard deviation over `sqrt(num_trials)`.
    pub std_err: f64,
    pub num_trials: u64,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainEstimate {
    pub value: f64,
    /// First-order (delta method) standard error, treating both rates as independent.
    pub std_err: f64,
    pub numerator: RateEstimate,
    pub denominator: RateEstimate,
}

/// `log2(1 + min SNR)`: the common rate of an MN multicast.
pub fn inst_rate_mn(user_snrs: &[f64]) -> f64 {
    assert!(!user_snrs.is_empty(), "need at least one user");
    mn_metric(user_snrs.iter().copied()) / LN_2
}

/// `min_g (1/B) Σ_b log2(1 + SNR_{g,b})` over the groups of `stage`.
pub fn inst_rate_acc(stage: &StageSet, snr: &SnrMatrix) -> f64 {
    acc_metric(stage.groups().iter().map(|&g| snr.row(g)), snr.users_per_group()) / LN_2
}

fn mn_metric(snrs: impl Iterator<Item = f64>) -> f64 {
    snrs.map(f64::ln_1p).fold(f64::INFINITY, f64::min)
}

fn acc_metric<'a>(rows: impl Iterator<Item = &'a [f64]>, users: usize) -> f64 {
    rows.map(|row| row.iter().map(|&s| s.ln_1p()).sum::<f64>() / users as f64)
        .fold(f64::INFINITY, f64::min)
}

/// Weight that turns the per-trial metric (in nats) into the reported rate.
fn prefactor(config: &SystemConfig, scheme: Scheme) -> f64 {
    match scheme {
        Scheme::Tdm => 1.0,
        Scheme::Mn | Scheme::Acc => config.nominal_gain() as f64,
    }
}

/// Minimum metric of one trial in nats, before the `|G|` prefactor.
///
/// * ACC: the weakest group's mean log-capacity.
/// * MN: the weakest of the first user of every group in the stage.
/// * TDM: a single user's log-capacity, averaged over all users drawn in the
///   trial (identically distributed, so the expectation is unchanged).
fn trial_metric_nats(config: &SystemConfig, scheme: Scheme, seed: SeedSpec, buf: &mut Vec<f64>) -> f64 {
    let users = config.users_per_group();
    buf.resize(config.nominal_gain() * users, 0.0);
    fill_exponential(&mut seed.rng(), config.avg_snr(), buf);
    match scheme {
        Scheme::Acc => acc_metric(buf.chunks_exact(users), users),
        Scheme::Mn => mn_metric(buf.chunks_exact(users).map(|row| row[0])),
        Scheme::Tdm => buf.iter().map(|&s| s.ln_1p()).sum::<f64>() / buf.len() as f64,
    }
}

/// Per-trial minimum metric in bits/s/Hz (without the `|G|` prefactor).
///
/// Trials with the same seed and `B` share their SNR draws group by group,
/// which allows pathwise comparisons across `|G|`.
pub fn trial_metric(config: &SystemConfig, scheme: Scheme, seed: SeedSpec) -> f64 {
    trial_metric_nats(config, scheme, seed, &mut Vec::new()) / LN_2
}

/// Per-trial rate sample whose mean is the average rate.
pub fn trial_rate(config: &SystemConfig, scheme: Scheme, seed: SeedSpec) -> f64 {
    prefactor(config, scheme) * trial_metric_nats(config, scheme, seed, &mut Vec::new()) / LN_2
}

/// Streaming count, mean and centred second moment.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.count == 0 {
            return b;
        }
        if b.count == 0 {
            return a;
        }
        let count = a.count + b.count;
        let delta = b.mean - a.mean;
        let wb = b.count as f64 / count as f64;
        Moments {
            count,
            mean: a.mean + delta * wb,
            m2: a.m2 + b.m2 + delta * delta * a.count as f64 * wb,
        }
    }

    /// Balanced pairwise reduction whose shape depends only on the length.
    fn merge_tree(parts: &[Moments]) -> Moments {
        match parts.len() {
            0 => Moments::default(),
            1 => parts[0],
            n => Moments::merge(Self::merge_tree(&parts[..n / 2]), Self::merge_tree(&parts[n / 2..])),
        }
    }
}

/// Monte Carlo average rate with the default execution mode.
pub fn mc_average_rate(config: &SystemConfig, scheme: Scheme, num_trials: u64, base_seed: u64) -> Result<RateEstimate> {
    mc_average_rate_with(config, scheme, num_trials, base_seed, Execution::default())
}

/// Monte Carlo average rate. Trial `i` uses stream `i` of `base_seed`, and
/// blocks are merged in a fixed order, so the result is bit-identical for
/// any execution mode and worker count.
pub fn mc_average_rate_with(
    config: &SystemConfig,
    scheme: Scheme,
    num_trials: u64,
    base_seed: u64,
    exec: Execution,
) -> Result<RateEstimate> {
    if num_trials < MIN_TRIALS {
        return Err(Error::parameter(format!("need at least {MIN_TRIALS} trials, got {num_trials}")));
    }
    let blocks = num_trials.div_ceil(BLOCK_TRIALS);
    let parts = map_indexed(blocks as usize, exec, |block| {
        let start = block as u64 * BLOCK_TRIALS;
        let end = (start + BLOCK_TRIALS).min(num_trials);
        let mut buf = Vec::new();
        let mut moments = Moments::default();
        for trial in start..end {
            moments.push(trial_metric_nats(config, scheme, SeedSpec::new(base_seed, trial), &mut buf));
        }
        moments
    });
    let total = Moments::merge_tree(&parts);
    let scale = prefactor(config, scheme) / LN_2;
    let variance = total.m2 / (total.count - 1) as f64;
    Ok(RateEstimate {
        mean: scale * total.mean,
        std_err: scale * (variance / total.count as f64).sqrt(),
        num_trials,
        scheme,
    })
}

/// Speed-up of a scheme over TDM, as a ratio of average rates.
pub fn effective_gain(scheme_rate: RateEstimate, tdm_rate: RateEstimate) -> Result<GainEstimate> {
    if !(tdm_rate.mean > 0.0) {
        return Err(Error::Numeric {
            context: "effective gain denominator".into(),
            residual: tdm_rate.mean,
            tolerance: 0.0,
            intervals: 0,
        });
    }
    let value = scheme_rate.mean / tdm_rate.mean;
    let rel_num = if scheme_rate.mean > 0.0 { scheme_rate.std_err / scheme_rate.mean } else { 0.0 };
    let rel_den = tdm_rate.std_err / tdm_rate.mean;
    Ok(GainEstimate {
        value,
        std_err: value * rel_num.hypot(rel_den),
        numerator: scheme_rate,
        denominator: tdm_rate,
    })
}
