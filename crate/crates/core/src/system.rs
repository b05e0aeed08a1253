//! System configuration and reproducible sampling of fading realizations.
//!
//! Only the instantaneous SNR `P |H_k|^2` enters any rate, so the channel is
//! parameterized by the average SNR `rho` alone. Under Rayleigh fading each
//! SNR is exponential with mean `rho`.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Topology and channel statistics.
///
/// `K = Λ B` users are split into `Λ` groups, each sharing one cache state.
/// Every file is cached at `Λγ` of the `Λ` states, which gives the nominal
/// coded-caching gain `|G| = Λγ + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    num_cache_states: usize,
    users_per_group: usize,
    cache_multiplicity: usize,
    library_size: usize,
    avg_snr: f64,
}

impl SystemConfig {
    /// `cache_multiplicity` is `Λγ`, the number of cache states holding each subfile.
    pub fn new(
        num_cache_states: usize,
        users_per_group: usize,
        cache_multiplicity: usize,
        library_size: usize,
        avg_snr: f64,
    ) -> Result<Self> {
        if num_cache_states == 0 {
            return Err(Error::parameter("need at least one cache state"));
        }
        if users_per_group == 0 {
            return Err(Error::parameter("need at least one user per group"));
        }
        if cache_multiplicity + 1 > num_cache_states {
            return Err(Error::parameter(format!(
                "nominal gain Λγ+1 = {} exceeds Λ = {num_cache_states}",
                cache_multiplicity + 1
            )));
        }
        let num_users = num_cache_states * users_per_group;
        if library_size < num_users {
            return Err(Error::parameter(format!(
                "library size N = {library_size} smaller than K = {num_users}"
            )));
        }
        if !(avg_snr > 0.0) || !avg_snr.is_finite() {
            return Err(Error::parameter(format!("average SNR must be positive, got {avg_snr}")));
        }
        Ok(Self {
            num_cache_states,
            users_per_group,
            cache_multiplicity,
            library_size,
            avg_snr,
        })
    }

    /// Builds a configuration from the cache fraction `γ = M/N`; `Λγ` must be an integer.
    pub fn from_cache_fraction(
        num_cache_states: usize,
        users_per_group: usize,
        cache_fraction: f64,
        library_size: usize,
        avg_snr: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&cache_fraction) {
            return Err(Error::parameter(format!("cache fraction must be in [0,1], got {cache_fraction}")));
        }
        let product = num_cache_states as f64 * cache_fraction;
        let rounded = product.round();
        if (product - rounded).abs() > 1e-9 {
            return Err(Error::parameter(format!(
                "Λγ = {product} is not an integer (Λ = {num_cache_states}, γ = {cache_fraction})"
            )));
        }
        Self::new(num_cache_states, users_per_group, rounded as usize, library_size, avg_snr)
    }

    /// Smallest configuration with the given nominal gain: `Λ = |G|`, `N = K`.
    pub fn for_gain(nominal_gain: usize, users_per_group: usize, avg_snr: f64) -> Result<Self> {
        if nominal_gain == 0 {
            return Err(Error::parameter("nominal gain must be at least 1"));
        }
        Self::new(
            nominal_gain,
            users_per_group,
            nominal_gain - 1,
            nominal_gain * users_per_group,
            avg_snr,
        )
    }

    pub fn with_avg_snr(&self, avg_snr: f64) -> Result<Self> {
        Self::new(
            self.num_cache_states,
            self.users_per_group,
            self.cache_multiplicity,
            self.library_size,
            avg_snr,
        )
    }

    pub fn num_cache_states(&self) -> usize {
        self.num_cache_states
    }

    pub fn users_per_group(&self) -> usize {
        self.users_per_group
    }

    pub fn num_users(&self) -> usize {
        self.num_cache_states * self.users_per_group
    }

    /// `Λγ`.
    pub fn cache_multiplicity(&self) -> usize {
        self.cache_multiplicity
    }

    pub fn cache_fraction(&self) -> f64 {
        self.cache_multiplicity as f64 / self.num_cache_states as f64
    }

    pub fn library_size(&self) -> usize {
        self.library_size
    }

    /// Cache size `M = γN`, in files.
    pub fn cache_size(&self) -> f64 {
        self.cache_fraction() * self.library_size as f64
    }

    pub fn avg_snr(&self) -> f64 {
        self.avg_snr
    }

    /// `|G| = Λγ + 1`, the number of groups served per stage.
    pub fn nominal_gain(&self) -> usize {
        self.cache_multiplicity + 1
    }
}

/// Instantaneous SNRs of one channel realization, indexed by (group, user).
#[derive(Debug, Clone, PartialEq)]
pub struct SnrMatrix {
    groups: usize,
    users_per_group: usize,
    values: Vec<f64>,
}

impl SnrMatrix {
    pub fn zeros(groups: usize, users_per_group: usize) -> Self {
        Self {
            groups,
            users_per_group,
            values: vec![0.0; groups * users_per_group],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let groups = rows.len();
        let users_per_group = rows.first().map_or(0, Vec::len);
        if groups == 0 || users_per_group == 0 {
            return Err(Error::parameter("SNR matrix must be non-empty"));
        }
        if rows.iter().any(|r| r.len() != users_per_group) {
            return Err(Error::parameter("SNR matrix rows must have equal length"));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::parameter("SNR values must be nonnegative"));
        }
        Ok(Self {
            groups,
            users_per_group,
            values,
        })
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn users_per_group(&self) -> usize {
        self.users_per_group
    }

    pub fn get(&self, group: usize, user: usize) -> f64 {
        self.values[group * self.users_per_group + user]
    }

    pub fn row(&self, group: usize) -> &[f64] {
        let start = group * self.users_per_group;
        &self.values[start..start + self.users_per_group]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Identifies the random substream of one Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub base_seed: u64,
    pub trial_index: u64,
}

impl SeedSpec {
    pub fn new(base_seed: u64, trial_index: u64) -> Self {
        Self {
            base_seed,
            trial_index,
        }
    }

    /// ChaCha8 keyed by `base_seed`, on stream `trial_index`. Streams never
    /// overlap, so trials can run in any order on any number of workers.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.trial_index);
        rng
    }
}

/// Uniform on (0, 1] from the top 53 bits of a 64-bit word.
#[inline]
fn unit_open_closed(word: u64) -> f64 {
    ((word >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Exponential draw with the given mean by inverse CDF.
#[inline]
pub fn sample_exponential<R: RngCore>(rng: &mut R, mean: f64) -> f64 {
    -mean * unit_open_closed(rng.next_u64()).ln()
}

/// Overwrites `out` with i.i.d. Exp(mean `rho`) draws.
pub fn fill_exponential<R: RngCore>(rng: &mut R, rho: f64, out: &mut [f64]) {
    for v in out {
        *v = sample_exponential(rng, rho);
    }
}

/// One full `Λ × B` realization for the given trial.
pub fn sample_snr(config: &SystemConfig, seed: SeedSpec) -> SnrMatrix {
    let mut snr = SnrMatrix::zeros(config.num_cache_states(), config.users_per_group());
    fill_exponential(&mut seed.rng(), config.avg_snr(), snr.values_mut());
    snr
}

/// CDF of an exponential SNR with mean `rho`.
pub fn snr_cdf(x: f64, rho: f64) -> f64 {
    assert!(x >= 0.0 && rho > 0.0);
    -(-x / rho).exp_m1()
}
