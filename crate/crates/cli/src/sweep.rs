//! Sweep execution and CSV/JSON emission.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use accsim_core::analysis::{
    acc_over_mn_large_b, acc_over_mn_low_snr, acc_rate_exact_integral, acc_rate_large_b, acc_rate_low_snr,
    exact_mn_rate, mn_gain_exact, mn_rate_low_snr, HMethod,
};
use accsim_core::rates::{effective_gain, mc_average_rate, RateEstimate, Scheme};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::spec::{Analytic, ExperimentSpec, OutputFormat, Point};

pub const CSV_HEADER: [&str; 9] = [
    "swept",
    "scheme",
    "rate_mean",
    "rate_stderr",
    "gain",
    "gain_stderr",
    "trials",
    "wall_time_ms",
    "error",
];

/// One output line: a scheme's Monte Carlo estimate or a closed form at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub swept: f64,
    pub scheme: String,
    pub rate_mean: Option<f64>,
    pub rate_stderr: Option<f64>,
    /// Effective gain over TDM for rates; the ratio itself for ratio analytics.
    pub gain: Option<f64>,
    pub gain_stderr: Option<f64>,
    pub trials: Option<u64>,
    pub wall_time_ms: Option<f64>,
    pub error: Option<String>,
}

impl ResultRow {
    fn empty(swept: f64, scheme: String) -> Self {
        Self {
            swept,
            scheme,
            rate_mean: None,
            rate_stderr: None,
            gain: None,
            gain_stderr: None,
            trials: None,
            wall_time_ms: None,
            error: None,
        }
    }
}

fn timed<T>(record: bool, f: impl FnOnce() -> T) -> (T, Option<f64>) {
    let start = Instant::now();
    let value = f();
    let elapsed = record.then(|| start.elapsed().as_secs_f64() * 1e3);
    (value, elapsed)
}

fn mc_row(point: &Point, scheme: Scheme, estimate: CliResult<RateEstimate>, tdm: &CliResult<RateEstimate>) -> ResultRow {
    let mut row = ResultRow::empty(point.swept, scheme.name().to_string());
    match estimate {
        Ok(est) => {
            row.rate_mean = Some(est.mean);
            row.rate_stderr = Some(est.std_err);
            row.trials = Some(est.num_trials);
            match tdm.as_ref().map(|tdm| effective_gain(est, *tdm)) {
                Ok(Ok(gain)) => {
                    row.gain = Some(gain.value);
                    row.gain_stderr = Some(gain.std_err);
                }
                Ok(Err(e)) => row.error = Some(e.to_string()),
                Err(e) => row.error = Some(format!("TDM reference: {e}")),
            }
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// `(rate, gain)` of one closed form at one point. Rate gains are relative to
/// the exact TDM rate; ratio analytics have no rate.
fn analytic_values(analytic: Analytic, point: &Point) -> accsim_core::Result<(Option<f64>, f64)> {
    let (rho, b, g) = (point.rho, point.users_per_group, point.gain);
    let h = |m: Option<HMethod>| m.unwrap_or_else(|| HMethod::default_for(g));
    let tdm = || exact_mn_rate(rho, 1).map(|r| r.value);
    Ok(match analytic {
        Analytic::ExactMn => (Some(exact_mn_rate(rho, g)?.value), mn_gain_exact(rho, g)?),
        Analytic::ExactAcc => {
            let rate = acc_rate_exact_integral(rho, b, g)?.value;
            (Some(rate), rate / tdm()?)
        }
        Analytic::LowSnrMn => {
            let rate = mn_rate_low_snr(rho, g)?.value;
            (Some(rate), rate / tdm()?)
        }
        Analytic::LowSnrAcc => {
            let rate = acc_rate_low_snr(rho, b, g)?.value;
            (Some(rate), rate / tdm()?)
        }
        Analytic::LargeB(m) => {
            let rate = acc_rate_large_b(rho, b, g, h(m))?.value;
            (Some(rate), rate / tdm()?)
        }
        Analytic::LargeBOverMn(m) => {
            let ratio = acc_rate_large_b(rho, b, g, h(m))?.value / exact_mn_rate(rho, g)?.value;
            (None, ratio)
        }
        Analytic::LargeBRatio => (None, acc_over_mn_large_b(rho, g)?.value),
        Analytic::LowSnrRatio => (None, acc_over_mn_low_snr(g, b)?.value),
    })
}

fn analytic_row(point: &Point, analytic: Analytic, record_timing: bool) -> ResultRow {
    let mut row = ResultRow::empty(point.swept, analytic.to_string());
    let (result, elapsed) = timed(record_timing, || analytic_values(analytic, point));
    row.wall_time_ms = elapsed;
    match result {
        Ok((rate, gain)) => {
            row.rate_mean = rate;
            row.gain = Some(gain);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Evaluates every scheme and analytic at every point, in sweep order.
///
/// Failures at a point are recorded in the row's `error` column and do not
/// stop the sweep. All Monte Carlo runs use the spec's seed, so curves share
/// random numbers across points and schemes.
pub fn run_sweep(spec: &ExperimentSpec) -> CliResult<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for point in spec.points() {
        let config = spec.config_for(&point)?;
        let run = |scheme| {
            timed(spec.record_timing, || {
                mc_average_rate(&config, scheme, spec.trials, spec.seed).map_err(CliError::from)
            })
        };
        let tdm = if spec.schemes.is_empty() {
            None
        } else {
            Some(run(Scheme::Tdm))
        };
        for &scheme in &spec.schemes {
            let (estimate, elapsed) = match (scheme, &tdm) {
                (Scheme::Tdm, Some((Ok(est), t))) => (Ok(*est), *t),
                _ => run(scheme),
            };
            let tdm_ref = &tdm.as_ref().expect("TDM run whenever schemes are present").0;
            let mut row = mc_row(&point, scheme, estimate, tdm_ref);
            row.wall_time_ms = elapsed;
            rows.push(row);
        }
        for &analytic in &spec.analytics {
            rows.push(analytic_row(&point, analytic, spec.record_timing));
        }
    }
    Ok(rows)
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for r in rows {
        writer.write_record([
            r.swept.to_string(),
            r.scheme.clone(),
            fmt_opt(r.rate_mean),
            fmt_opt(r.rate_stderr),
            fmt_opt(r.gain),
            fmt_opt(r.gain_stderr),
            fmt_opt(r.trials),
            fmt_opt(r.wall_time_ms),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn render(rows: &[ResultRow], format: OutputFormat) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => write_csv(rows, &mut buf).map_err(|e| CliError::usage(format!("CSV encoding: {e}")))?,
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut buf, rows).map_err(|e| CliError::usage(format!("JSON encoding: {e}")))?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

/// Writes `bytes` to `path` via a temporary file in the same directory, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Runs the sweep and writes it to the spec's output (stdout when unset).
pub fn run_and_emit(spec: &ExperimentSpec) -> CliResult<Vec<ResultRow>> {
    let rows = run_sweep(spec)?;
    let bytes = render(&rows, spec.format)?;
    match &spec.out {
        Some(path) => write_atomic(path, &bytes)?,
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::io("<stdout>", e))?,
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::SpecLayer;

    fn spec(axis: &str, schemes: &[&str], analytics: &[&str]) -> ExperimentSpec {
        ExperimentSpec::from_layers(SpecLayer {
            axis: Some(axis.into()),
            gain: Some(4),
            users_per_group: Some(2),
            schemes: Some(schemes.iter().map(|s| s.to_string()).collect()),
            analytics: Some(analytics.iter().map(|s| s.to_string()).collect()),
            trials: Some(100),
            seed: Some(3),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn one_row_per_scheme_and_analytic() {
        let s = spec("rho_db=0", &["tdm", "mn", "acc"], &["exact-mn", "large-b", "low-snr-ratio"]);
        let rows = run_sweep(&s).unwrap();
        assert_eq!(rows.len(), 6);
        let names: Vec<&str> = rows.iter().map(|r| r.scheme.as_str()).collect();
        assert_eq!(names, ["tdm", "mn", "acc", "exact-mn", "large-b", "low-snr-ratio"]);
        assert_eq!(rows[0].gain, Some(1.0));
        assert!(rows[5].rate_mean.is_none() && rows[5].gain.is_some());
        assert!(rows.iter().all(|r| r.error.is_none() && r.wall_time_ms.is_none()));
    }

    #[test]
    fn point_errors_are_recorded_not_fatal() {
        let s = spec("b=1,2", &[], &["exact-acc"]);
        let rows = run_sweep(&s).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].error.as_deref().unwrap().contains("B must be at least 2"));
        assert!(rows[0].rate_mean.is_none());
        assert!(rows[1].error.is_none());
    }

    #[test]
    fn csv_schema() {
        let s = spec("g=2,3", &["mn"], &["large-b-ratio"]);
        let rows = run_sweep(&s).unwrap();
        let bytes = render(&rows, OutputFormat::Csv).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.count(), 4);
        assert!(text.contains("\n2,mn,"));
    }

    #[test]
    fn rerun_is_identical() {
        let s = spec("rho_db=-10:10:10", &["mn", "acc"], &["exact-mn"]);
        let a = render(&run_sweep(&s).unwrap(), OutputFormat::Csv).unwrap();
        let b = render(&run_sweep(&s).unwrap(), OutputFormat::Csv).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_atomic(&dir.path().join("missing/out.csv"), b"x").is_err());
    }
}
