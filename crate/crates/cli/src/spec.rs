//! Experiment specifications: one sweep axis, fixed parameters, and the
//! schemes and closed forms to evaluate at every point.
//!
//! A spec is assembled from up to three layers, later ones winning:
//! built-in defaults, a TOML file, and command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use accsim_core::analysis::HMethod;
use accsim_core::rates::Scheme;
use accsim_core::system::SystemConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Default Monte Carlo trials per point.
pub const DEFAULT_TRIALS: u64 = 100_000;

/// Linear SNR from decibels.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    /// Average SNR in dB.
    RhoDb(Vec<f64>),
    UsersPerGroup(Vec<usize>),
    Gain(Vec<usize>),
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::RhoDb(_) => "rho_db",
            Axis::UsersPerGroup(_) => "users_per_group",
            Axis::Gain(_) => "gain",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Axis::RhoDb(v) => v.len(),
            Axis::UsersPerGroup(v) | Axis::Gain(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Swept values as reals, in sweep order.
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::RhoDb(v) => v.clone(),
            Axis::UsersPerGroup(v) | Axis::Gain(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }
}

/// `start:stop:step`, inclusive of `stop` up to half a step. Points are
/// `start + i * step`, so there is no accumulated rounding.
fn parse_range(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(CliError::usage(format!("range '{text}' is not start:stop:step")));
    };
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::usage(format!("'{s}' is not a number in range '{text}'")))
    };
    let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(CliError::usage(format!("range '{text}' needs step > 0 and stop ≥ start")));
    }
    let count = ((stop - start) / step + 0.5).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(CliError::usage(format!("range '{text}' has too many points")));
    }
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn parse_int_list(text: &str) -> CliResult<Vec<usize>> {
    if text.contains(':') {
        return parse_range(text)?
            .into_iter()
            .map(|v| {
                if v.fract() == 0.0 && v >= 0.0 {
                    Ok(v as usize)
                } else {
                    Err(CliError::usage(format!("range '{text}' yields non-integer {v}")))
                }
            })
            .collect();
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("'{s}' is not a nonnegative integer")))
        })
        .collect()
}

impl FromStr for Axis {
    type Err = CliError;

    /// `rho_db=-20:30:1`, `b=1,2,4` / `users_per_group=…`, or `g=2:10:1` / `gain=…`.
    fn from_str(s: &str) -> CliResult<Self> {
        let (name, values) = s
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("axis '{s}' is not name=values")))?;
        let axis = match name.trim().to_ascii_lowercase().as_str() {
            "rho_db" | "rho-db" | "snr_db" => {
                let v = if values.contains(':') {
                    parse_range(values)?
                } else {
                    values
                        .split(',')
                        .map(|x| {
                            x.trim()
                                .parse::<f64>()
                                .map_err(|_| CliError::usage(format!("'{x}' is not a number")))
                        })
                        .collect::<CliResult<_>>()?
                };
                Axis::RhoDb(v)
            }
            "b" | "users_per_group" | "users-per-group" => Axis::UsersPerGroup(parse_int_list(values)?),
            "g" | "gain" => Axis::Gain(parse_int_list(values)?),
            other => return Err(CliError::usage(format!("unknown axis '{other}'"))),
        };
        if axis.is_empty() {
            return Err(CliError::usage("sweep axis has no points"));
        }
        Ok(axis)
    }
}

/// A closed-form expression that can be tabulated next to Monte Carlo rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analytic {
    ExactMn,
    ExactAcc,
    LowSnrMn,
    LowSnrAcc,
    /// Normal approximation of the ACC rate; `None` picks the default `H_G` method.
    LargeB(Option<HMethod>),
    /// Normal-approximation ACC rate over the exact MN rate.
    LargeBOverMn(Option<HMethod>),
    /// `B → ∞` limit of the ACC/MN ratio.
    LargeBRatio,
    /// `ρ → 0` limit of the ACC/MN ratio.
    LowSnrRatio,
}

fn h_suffix(method: Option<HMethod>) -> String {
    match method {
        None => String::new(),
        Some(HMethod::Table) => "-table".into(),
        Some(HMethod::Integral) => "-integral".into(),
        Some(HMethod::Ghq(v)) => format!("-ghq{v}"),
        Some(HMethod::Asymptotic) => "-asymptotic".into(),
    }
}

fn parse_h_suffix(suffix: &str) -> Option<Option<HMethod>> {
    match suffix {
        "" => Some(None),
        "-table" => Some(Some(HMethod::Table)),
        "-integral" => Some(Some(HMethod::Integral)),
        "-asymptotic" => Some(Some(HMethod::Asymptotic)),
        s => s
            .strip_prefix("-ghq")
            .and_then(|v| v.parse::<usize>().ok())
            .map(|v| Some(HMethod::Ghq(v))),
    }
}

impl Analytic {
    /// Whether the value is a ratio (reported in the gain column) rather than a rate.
    pub fn is_ratio(self) -> bool {
        matches!(self, Analytic::LargeBOverMn(_) | Analytic::LargeBRatio | Analytic::LowSnrRatio)
    }
}

impl fmt::Display for Analytic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Analytic::ExactMn => f.write_str("exact-mn"),
            Analytic::ExactAcc => f.write_str("exact-acc"),
            Analytic::LowSnrMn => f.write_str("low-snr-mn"),
            Analytic::LowSnrAcc => f.write_str("low-snr-acc"),
            Analytic::LargeB(m) => write!(f, "large-b{}", h_suffix(*m)),
            Analytic::LargeBOverMn(m) => write!(f, "large-b-over-mn{}", h_suffix(*m)),
            Analytic::LargeBRatio => f.write_str("large-b-ratio"),
            Analytic::LowSnrRatio => f.write_str("low-snr-ratio"),
        }
    }
}

impl FromStr for Analytic {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let s = s.trim().to_ascii_lowercase();
        let parsed = match s.as_str() {
            "exact-mn" => Some(Analytic::ExactMn),
            "exact-acc" => Some(Analytic::ExactAcc),
            "low-snr-mn" => Some(Analytic::LowSnrMn),
            "low-snr-acc" => Some(Analytic::LowSnrAcc),
            "large-b-ratio" => Some(Analytic::LargeBRatio),
            "low-snr-ratio" => Some(Analytic::LowSnrRatio),
            other => {
                if let Some(rest) = other.strip_prefix("large-b-over-mn") {
                    parse_h_suffix(rest).map(Analytic::LargeBOverMn)
                } else if let Some(rest) = other.strip_prefix("large-b") {
                    parse_h_suffix(rest).map(Analytic::LargeB)
                } else {
                    None
                }
            }
        };
        parsed.ok_or_else(|| CliError::usage(format!("unknown analytic '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::usage(format!("unknown output format '{other}'"))),
        }
    }
}

/// One layer of experiment settings, as written in a config file. Every
/// field is optional; [`ExperimentSpec::from_layers`] fills the gaps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecLayer {
    pub axis: Option<String>,
    pub rho_db: Option<f64>,
    pub gain: Option<usize>,
    pub users_per_group: Option<usize>,
    pub num_cache_states: Option<usize>,
    pub cache_fraction: Option<f64>,
    pub schemes: Option<Vec<String>>,
    pub analytics: Option<Vec<String>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub record_timing: Option<bool>,
}

impl SpecLayer {
    pub fn from_toml_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(self, top: SpecLayer) -> SpecLayer {
        SpecLayer {
            axis: top.axis.or(self.axis),
            rho_db: top.rho_db.or(self.rho_db),
            gain: top.gain.or(self.gain),
            users_per_group: top.users_per_group.or(self.users_per_group),
            num_cache_states: top.num_cache_states.or(self.num_cache_states),
            cache_fraction: top.cache_fraction.or(self.cache_fraction),
            schemes: top.schemes.or(self.schemes),
            analytics: top.analytics.or(self.analytics),
            trials: top.trials.or(self.trials),
            seed: top.seed.or(self.seed),
            out: top.out.or(self.out),
            format: top.format.or(self.format),
            record_timing: top.record_timing.or(self.record_timing),
        }
    }
}

/// Fully resolved sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub axis: Axis,
    /// SNR in dB when it is not the swept quantity.
    pub rho_db: f64,
    pub gain: usize,
    pub users_per_group: usize,
    /// When set, the nominal gain follows from `Λγ + 1` instead of `gain`.
    pub num_cache_states: Option<usize>,
    pub cache_fraction: Option<f64>,
    pub schemes: Vec<Scheme>,
    pub analytics: Vec<Analytic>,
    pub trials: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// Fill the `wall_time_ms` column; off by default so reruns are byte-identical.
    pub record_timing: bool,
}

/// Parameters of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub swept: f64,
    pub rho: f64,
    pub users_per_group: usize,
    pub gain: usize,
}

impl ExperimentSpec {
    pub fn from_layers(layer: SpecLayer) -> CliResult<Self> {
        let axis: Axis = layer
            .axis
            .as_deref()
            .ok_or_else(|| CliError::usage("a sweep axis is required (e.g. --axis rho_db=-20:30:1)"))?
            .parse()?;
        let schemes = layer
            .schemes
            .unwrap_or_default()
            .iter()
            .map(|s| s.parse::<Scheme>().map_err(CliError::from))
            .collect::<CliResult<Vec<_>>>()?;
        let analytics = layer
            .analytics
            .unwrap_or_default()
            .iter()
            .map(|s| s.parse())
            .collect::<CliResult<Vec<_>>>()?;
        if schemes.is_empty() && analytics.is_empty() {
            return Err(CliError::usage("nothing to evaluate: give --schemes and/or --analytics"));
        }
        let spec = ExperimentSpec {
            axis,
            rho_db: layer.rho_db.unwrap_or(0.0),
            gain: layer.gain.unwrap_or(2),
            users_per_group: layer.users_per_group.unwrap_or(1),
            num_cache_states: layer.num_cache_states,
            cache_fraction: layer.cache_fraction,
            schemes,
            analytics,
            trials: layer.trials.unwrap_or(DEFAULT_TRIALS),
            seed: layer.seed.unwrap_or(0),
            out: layer.out,
            format: layer.format.unwrap_or_default(),
            record_timing: layer.record_timing.unwrap_or(false),
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> CliResult<()> {
        if self.num_cache_states.is_some() != self.cache_fraction.is_some() {
            return Err(CliError::usage("num_cache_states and cache_fraction must be given together"));
        }
        if self.num_cache_states.is_some() && matches!(self.axis, Axis::Gain(_)) {
            return Err(CliError::usage("a gain axis cannot be combined with num_cache_states/cache_fraction"));
        }
        if !self.schemes.is_empty() && self.trials < accsim_core::rates::MIN_TRIALS {
            return Err(CliError::usage(format!(
                "at least {} trials are needed, got {}",
                accsim_core::rates::MIN_TRIALS,
                self.trials
            )));
        }
        // Every point must be a valid system.
        for point in self.points() {
            self.config_for(&point)?;
        }
        Ok(())
    }

    /// Sweep points in order.
    pub fn points(&self) -> Vec<Point> {
        let fixed_gain = match (self.num_cache_states, self.cache_fraction) {
            (Some(lambda), Some(gamma)) => (lambda as f64 * gamma).round() as usize + 1,
            _ => self.gain,
        };
        let base = Point {
            swept: 0.0,
            rho: db_to_linear(self.rho_db),
            users_per_group: self.users_per_group,
            gain: fixed_gain,
        };
        match &self.axis {
            Axis::RhoDb(v) => v
                .iter()
                .map(|&db| Point {
                    swept: db,
                    rho: db_to_linear(db),
                    ..base
                })
                .collect(),
            Axis::UsersPerGroup(v) => v
                .iter()
                .map(|&b| Point {
                    swept: b as f64,
                    users_per_group: b,
                    ..base
                })
                .collect(),
            Axis::Gain(v) => v
                .iter()
                .map(|&g| Point {
                    swept: g as f64,
                    gain: g,
                    ..base
                })
                .collect(),
        }
    }

    /// System configuration at one point.
    pub fn config_for(&self, point: &Point) -> CliResult<SystemConfig> {
        let config = match (self.num_cache_states, self.cache_fraction) {
            (Some(lambda), Some(gamma)) => {
                let users = lambda * point.users_per_group;
                SystemConfig::from_cache_fraction(lambda, point.users_per_group, gamma, users, point.rho)?
            }
            _ => SystemConfig::for_gain(point.gain, point.users_per_group, point.rho)?,
        };
        Ok(config)
    }
}
