use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use accsim::error::{CliError, CliResult};
use accsim::presets::{describe, run_figure, FIGURES};
use accsim::spec::{db_to_linear, ExperimentSpec, OutputFormat, SpecLayer, DEFAULT_TRIALS};
use accsim::sweep::{run_and_emit, write_atomic};
use accsim::timeline::{run_timeline, TimelineSource};
use accsim::validate::{validate, ValidateOptions};
use accsim::WORKERS_ENV;
use accsim_core::parallel::with_workers;
use clap::{Args, Parser, Subcommand};

/// Rates of coded caching over fading broadcast channels.
#[derive(Debug, Parser)]
#[command(name = "accsim", version)]
struct Cli {
    /// Worker threads for simulation and quadrature (default: all cores).
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate schemes and closed forms along one parameter axis.
    Sweep(SweepArgs),
    /// Regenerate the data behind a figure.
    Figure(FigureArgs),
    /// Compare closed forms against simulation at one configuration.
    Validate(ValidateArgs),
    /// Write the event log of one delivery stage as JSON lines.
    Timeline(TimelineArgs),
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// TOML file with sweep settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Swept axis: `rho_db=-10:20:2`, `b=2,4,8`, `g=2:10`.
    #[arg(long)]
    axis: Option<String>,
    /// Average SNR in dB when not swept.
    #[arg(long, allow_hyphen_values = true)]
    rho_db: Option<f64>,
    /// Nominal coded-caching gain |G| = Λγ + 1.
    #[arg(long)]
    gain: Option<usize>,
    /// Users per cache state, B.
    #[arg(long, short = 'b')]
    users_per_group: Option<usize>,
    /// Number of cache states Λ (with --cache-fraction, instead of --gain).
    #[arg(long)]
    num_cache_states: Option<usize>,
    /// Normalized cache size γ = M/N.
    #[arg(long)]
    cache_fraction: Option<f64>,
    /// Simulated schemes: tdm, mn, acc.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    /// Closed forms, e.g. exact-mn, exact-acc, low-snr-acc, large-b-ghq7.
    #[arg(long, value_delimiter = ',')]
    analytics: Option<Vec<String>>,
    /// Monte Carlo trials per point.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Fill the wall_time_ms column.
    #[arg(long)]
    record_timing: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
struct FigureArgs {
    /// Preset name; see --list.
    #[arg(required_unless_present = "list")]
    name: Option<String>,
    /// Directory for the CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    record_timing: bool,
    /// List presets and exit.
    #[arg(long)]
    list: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    rho_db: f64,
    /// Number of cache states Λ.
    #[arg(long, default_value_t = 4)]
    num_cache_states: usize,
    /// Normalized cache size γ.
    #[arg(long, default_value_t = 0.25)]
    cache_fraction: f64,
    #[arg(long, short = 'b', default_value_t = 4)]
    users_per_group: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
    /// Report file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TimelineArgs {
    /// Named stage (example2). Without it a random stage is drawn.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value_t = 3)]
    gain: usize,
    #[arg(long, short = 'b', default_value_t = 3)]
    users_per_group: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    rho_db: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&PathBuf>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => write_atomic(path, bytes),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn sweep(args: SweepArgs) -> CliResult<()> {
    let file = match &args.config {
        Some(path) => SpecLayer::from_toml_file(path)?,
        None => SpecLayer::default(),
    };
    let flags = SpecLayer {
        axis: args.axis,
        rho_db: args.rho_db,
        gain: args.gain,
        users_per_group: args.users_per_group,
        num_cache_states: args.num_cache_states,
        cache_fraction: args.cache_fraction,
        schemes: args.schemes,
        analytics: args.analytics,
        trials: args.trials,
        seed: args.seed,
        out: args.out,
        format: args.format.map(Into::into),
        record_timing: args.record_timing.then_some(true),
    };
    let spec = ExperimentSpec::from_layers(file.overlay(flags))?;
    run_and_emit(&spec)?;
    Ok(())
}

fn figure(args: FigureArgs) -> CliResult<()> {
    if args.list {
        for name in FIGURES {
            println!("{name:6} {}", describe(name).unwrap_or_default());
        }
        return Ok(());
    }
    let name = args.name.expect("clap requires a name without --list");
    for path in run_figure(&name, &args.out, args.trials, args.seed, args.record_timing)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

/// Returns whether every enforced check passed.
fn run_validate(args: ValidateArgs) -> CliResult<bool> {
    let report = validate(&ValidateOptions {
        rho: db_to_linear(args.rho_db),
        num_cache_states: args.num_cache_states,
        cache_fraction: args.cache_fraction,
        users_per_group: args.users_per_group,
        trials: args.trials,
        seed: args.seed,
        tolerance_scale: args.tolerance_scale,
    })?;
    let mut bytes = serde_json::to_vec_pretty(&report).map_err(|e| CliError::usage(format!("JSON encoding: {e}")))?;
    bytes.push(b'\n');
    emit(args.out.as_ref(), &bytes)?;
    for check in report.checks.iter().filter(|c| !c.passed) {
        let kind = if check.enforced { "FAIL" } else { "note" };
        eprintln!(
            "{kind}: {} deviation {:.3e} > tolerance {:.3e}",
            check.name, check.deviation, check.tolerance
        );
    }
    Ok(report.passed)
}

fn timeline(args: TimelineArgs) -> CliResult<()> {
    let source = match args.preset.as_deref() {
        Some(name) => TimelineSource::preset(name)?,
        None => TimelineSource::Random {
            gain: args.gain,
            users_per_group: args.users_per_group,
            rho: db_to_linear(args.rho_db),
            seed: args.seed,
        },
    };
    let tl = run_timeline(&source)?;
    let mut bytes = Vec::new();
    tl.write_jsonl(&mut bytes).map_err(|e| CliError::io("<buffer>", e))?;
    emit(args.out.as_ref(), &bytes)
}

fn run(command: Command) -> CliResult<ExitCode> {
    match command {
        Command::Sweep(args) => sweep(args)?,
        Command::Figure(args) => figure(args)?,
        Command::Validate(args) => {
            if !run_validate(args)? {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Timeline(args) => timeline(args)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let command = cli.command;
    let result = match cli.workers {
        Some(0) => Err(CliError::usage(format!("{WORKERS_ENV} must be at least 1"))),
        Some(n) => with_workers(n, move || run(command)),
        None => run(command),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
