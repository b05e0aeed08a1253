//! Event logs of single ACC transmission stages.

use accsim_core::scheduling::{acc_stage_timeline, DeliveryTimeline, StageSet};
use accsim_core::system::{sample_snr, SeedSpec, SnrMatrix, SystemConfig};

use crate::error::{CliError, CliResult};

/// Point-to-point capacities (bits/s/Hz) of the three-group, three-user example stage.
pub const EXAMPLE2_CAPACITIES: [[f64; 3]; 3] = [[1.0, 0.25, 0.2], [0.2, 1.0, 0.25], [0.25, 1.0, 0.2]];

/// SNRs whose capacities are exactly [`EXAMPLE2_CAPACITIES`].
pub fn example2_snr() -> SnrMatrix {
    SnrMatrix::from_rows(
        EXAMPLE2_CAPACITIES
            .iter()
            .map(|row| row.iter().map(|&c| c.exp2() - 1.0).collect())
            .collect(),
    )
    .expect("example matrix is rectangular and nonnegative")
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimelineSource {
    Example2,
    /// The first `gain` groups of one random realization.
    Random {
        gain: usize,
        users_per_group: usize,
        rho: f64,
        seed: u64,
    },
}

impl TimelineSource {
    pub fn preset(name: &str) -> CliResult<Self> {
        match name {
            "example2" => Ok(TimelineSource::Example2),
            other => Err(CliError::usage(format!("unknown timeline preset '{other}'; available: example2"))),
        }
    }
}

/// Simulates one stage with unit-size subfiles.
pub fn run_timeline(source: &TimelineSource) -> CliResult<DeliveryTimeline> {
    let (snr, gain) = match source {
        TimelineSource::Example2 => (example2_snr(), 3),
        TimelineSource::Random {
            gain,
            users_per_group,
            rho,
            seed,
        } => {
            let config = SystemConfig::for_gain(*gain, *users_per_group, *rho)?;
            (sample_snr(&config, SeedSpec::new(*seed, 0)), *gain)
        }
    };
    let stage = StageSet::new((0..gain).collect())?;
    Ok(acc_stage_timeline(&stage, &snr, 1.0)?)
}
