//! Named sweeps, one per figure, that write plot-ready CSV.
//!
//! Axis ranges are chosen to cover the plotted regions; they are not read
//! off any table, so plots match in shape rather than pixel for pixel.

use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};
use crate::spec::{Analytic, Axis, ExperimentSpec, OutputFormat};
use crate::sweep::{render, run_sweep, write_atomic};
use accsim_core::analysis::HMethod;
use accsim_core::rates::Scheme;

pub const FIGURES: [&str; 10] = ["fig1", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "cor1"];

/// What a preset plots, for `figure --list`.
pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1" => "MN effective gain vs SNR for |G| in {2, 5, 10}",
        "fig3" => "MN and ACC effective gains vs SNR, |G| = 10, B in {2, 6, 20}",
        "fig4" => "MN and ACC effective gains vs SNR, B = 6, |G| in {2, 5, 10}",
        "fig5" => "ACC rate vs SNR, |G| = 4: simulation, exact integral, low-SNR forms",
        "fig6" => "ACC rate vs SNR, B = 3, |G| in {2, 4, 8}: simulation, exact, low-SNR",
        "fig7" => "ACC rate vs B at 0 dB, |G| in {2, 3, 4, 5}: simulation vs large-B form",
        "fig8" => "ACC rate vs B, |G| = 10: simulation vs large-B form with each H method",
        "fig9" => "ACC/MN ratio vs SNR (large-B form, GHQ V = 7), |G| = 10",
        "fig10" => "ACC/MN ratio vs SNR, |G| = 4, with the large-B and low-SNR limits",
        "cor1" => "Low-SNR ACC/MN ratio vs B for |G| in {2, 4, 10}",
        _ => return None,
    })
}

fn rho_range(start: f64, stop: f64, step: f64) -> Axis {
    let n = ((stop - start) / step).round() as usize;
    Axis::RhoDb((0..=n).map(|i| start + i as f64 * step).collect())
}

struct Builder {
    trials: u64,
    seed: u64,
    record_timing: bool,
}

impl Builder {
    fn spec(
        &self,
        axis: Axis,
        gain: usize,
        users_per_group: usize,
        rho_db: f64,
        schemes: &[Scheme],
        analytics: &[Analytic],
    ) -> ExperimentSpec {
        ExperimentSpec {
            axis,
            rho_db,
            gain,
            users_per_group,
            num_cache_states: None,
            cache_fraction: None,
            schemes: schemes.to_vec(),
            analytics: analytics.to_vec(),
            trials: self.trials,
            seed: self.seed,
            out: None,
            format: OutputFormat::Csv,
            record_timing: self.record_timing,
        }
    }
}

/// The sweeps of a preset, each with the file stem it is written under.
pub fn figure_specs(name: &str, trials: u64, seed: u64, record_timing: bool) -> CliResult<Vec<(String, ExperimentSpec)>> {
    use Analytic::*;
    use Scheme::*;
    let b = Builder {
        trials,
        seed,
        record_timing,
    };
    let specs = match name {
        "fig1" => [2, 5, 10]
            .iter()
            .map(|&g| (format!("fig1_G{g}"), b.spec(rho_range(-20.0, 30.0, 1.0), g, 1, 0.0, &[Mn], &[ExactMn])))
            .collect(),
        "fig3" => [2, 6, 20]
            .iter()
            .map(|&users| {
                (
                    format!("fig3_B{users}"),
                    b.spec(rho_range(-20.0, 40.0, 2.0), 10, users, 0.0, &[Mn, Acc], &[ExactMn, LargeB(None)]),
                )
            })
            .collect(),
        "fig4" => [2, 5, 10]
            .iter()
            .map(|&g| {
                (
                    format!("fig4_G{g}"),
                    b.spec(rho_range(-20.0, 40.0, 2.0), g, 6, 0.0, &[Mn, Acc], &[ExactMn, LargeB(None)]),
                )
            })
            .collect(),
        "fig5" => [2, 3, 6]
            .iter()
            .map(|&users| {
                (
                    format!("fig5_B{users}"),
                    b.spec(rho_range(-20.0, 10.0, 2.0), 4, users, 0.0, &[Mn, Acc], &[ExactAcc, LowSnrAcc, LowSnrMn]),
                )
            })
            .collect(),
        "fig6" => [2, 4, 8]
            .iter()
            .map(|&g| {
                (
                    format!("fig6_G{g}"),
                    b.spec(rho_range(-20.0, 10.0, 2.0), g, 3, 0.0, &[Acc], &[ExactAcc, LowSnrAcc]),
                )
            })
            .collect(),
        "fig7" => [2, 3, 4, 5]
            .iter()
            .map(|&g| {
                (
                    format!("fig7_G{g}"),
                    b.spec(
                        Axis::UsersPerGroup(vec![2, 4, 6, 8, 10, 15, 20, 30, 40, 50]),
                        g,
                        2,
                        0.0,
                        &[Acc],
                        &[LargeB(Some(HMethod::Table))],
                    ),
                )
            })
            .collect(),
        "fig8" => vec![(
            "fig8_G10".to_string(),
            b.spec(
                Axis::UsersPerGroup(vec![2, 4, 6, 8, 10, 15, 20, 30, 40, 50]),
                10,
                2,
                0.0,
                &[Acc],
                &[
                    LargeB(Some(HMethod::Integral)),
                    LargeB(Some(HMethod::Ghq(7))),
                    LargeB(Some(HMethod::Asymptotic)),
                ],
            ),
        )],
        "fig9" => [2, 6, 20, 100]
            .iter()
            .map(|&users| {
                (
                    format!("fig9_B{users}"),
                    b.spec(
                        rho_range(-20.0, 30.0, 1.0),
                        10,
                        users,
                        0.0,
                        &[],
                        &[LargeBOverMn(Some(HMethod::Ghq(7)))],
                    ),
                )
            })
            .collect(),
        "fig10" => [2, 10, 50, 200]
            .iter()
            .map(|&users| {
                (
                    format!("fig10_B{users}"),
                    b.spec(
                        rho_range(-30.0, 30.0, 1.0),
                        4,
                        users,
                        0.0,
                        &[],
                        &[LargeBOverMn(Some(HMethod::Table)), LargeBRatio, LowSnrRatio],
                    ),
                )
            })
            .collect(),
        "cor1" => [(2usize, 40usize), (4, 40), (10, 16)]
            .iter()
            .map(|&(g, max_b)| {
                (
                    format!("cor1_G{g}"),
                    b.spec(Axis::UsersPerGroup((1..=max_b).collect()), g, 1, 0.0, &[], &[LowSnrRatio]),
                )
            })
            .collect(),
        other => {
            return Err(CliError::usage(format!(
                "unknown figure '{other}'; available: {}",
                FIGURES.join(", ")
            )))
        }
    };
    Ok(specs)
}

/// Runs every sweep of a preset and writes `<out_dir>/<stem>.csv`.
pub fn run_figure(name: &str, out_dir: &Path, trials: u64, seed: u64, record_timing: bool) -> CliResult<Vec<PathBuf>> {
    let specs = figure_specs(name, trials, seed, record_timing)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut written = Vec::with_capacity(specs.len());
    for (stem, spec) in specs {
        let rows = run_sweep(&spec)?;
        let path = out_dir.join(format!("{stem}.csv"));
        write_atomic(&path, &render(&rows, OutputFormat::Csv)?)?;
        written.push(path);
    }
    Ok(written)
}
