//! `repeater-sched`: simulate, optimize and sweep distillation schedules.

mod analyze;
mod output;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use repeater_core::api::OptimizeResponse;
use repeater_core::linkstats::DEFAULT_ATTENUATION_LENGTH_M;
use repeater_core::optimizer::{default_fth_grid, search_schedules, SearchConfig, DEFAULT_SEED};
use repeater_core::states::{DEFAULT_COHERENCE_TIME_S, DEFAULT_SIGNAL_SPEED_M_PER_S};
use repeater_core::store::ResultsStore;
use repeater_core::sweep::{run_sweep, SweepOptions, SweepSpec};
use repeater_core::{ChainParams, NoiseParams, PolicyKind, ProtocolError, RunReport};

/// Exit status for a schedule that exceeds the distillation budget.
const EXIT_BUDGET: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "repeater-sched", version, about)]
struct Cli {
    /// Worker threads for parallel evaluation (default: all cores).
    #[arg(long, global = true, env = "REPEATER_SCHED_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the protocol once and print the report.
    Simulate(SimulateArgs),
    /// Search for the best global schedule of one chain.
    Optimize(OptimizeArgs),
    /// Evaluate a parameter grid into a results store.
    Sweep(SweepArgs),
    /// Derive tables from a results store.
    Analyze(AnalyzeArgs),
    /// Start the HTTP API.
    Serve(ServeArgs),
}

#[derive(Args, Debug, Clone)]
struct ChainArgs {
    /// Number of segments N (power of two).
    #[arg(long)]
    segments: u32,
    /// Multiplexed attempts per segment M (power of two).
    #[arg(long)]
    multiplexing: u32,
    /// Bell-state-analyzer coupling efficiency.
    #[arg(long)]
    coupling: f64,
    /// Gate error probability.
    #[arg(long)]
    gate_error: f64,
    /// Total distance in km.
    #[arg(long)]
    distance: f64,
    #[arg(long, default_value_t = DEFAULT_ATTENUATION_LENGTH_M / 1e3)]
    attenuation_km: f64,
    /// Memory coherence time in seconds.
    #[arg(long, default_value_t = DEFAULT_COHERENCE_TIME_S)]
    coherence_time: f64,
    /// Signal speed in fiber, m/s.
    #[arg(long, default_value_t = DEFAULT_SIGNAL_SPEED_M_PER_S)]
    signal_speed: f64,
}

impl ChainArgs {
    fn params(&self) -> ChainParams {
        ChainParams {
            segments: self.segments,
            multiplexing: self.multiplexing,
            coupling_eff: self.coupling,
            total_distance_m: self.distance * 1e3,
            attenuation_length_m: self.attenuation_km * 1e3,
            noise: NoiseParams {
                gate_error: self.gate_error,
                coherence_time_s: self.coherence_time,
                signal_speed_m_per_s: self.signal_speed,
            },
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum RunFormat {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    chain: ChainArgs,
    /// fth:<threshold>, skr, or manual:<comma-separated steps>.
    #[arg(long)]
    policy: PolicyKind,
    /// Accepted for uniformity with the other commands. A single run is
    /// deterministic and draws no random numbers.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = RunFormat::Text)]
    format: RunFormat,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Add the schedules executed by the local rules to the candidates.
    #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    include_ld: bool,
    /// Cap on distillation steps at any single level.
    #[arg(long)]
    max_steps_per_level: Option<u32>,
    /// Comma-separated F_th thresholds for the local baselines.
    #[arg(long, value_delimiter = ',', default_values_t = default_fth_grid())]
    fth_grid: Vec<f64>,
    #[arg(long, value_enum, default_value_t = RunFormat::Text)]
    format: RunFormat,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON sweep specification (grid and search settings).
    #[arg(long, conflicts_with = "default_grid", required_unless_present = "default_grid")]
    config: Option<PathBuf>,
    /// Use the built-in full parameter grid.
    #[arg(long)]
    default_grid: bool,
    /// Store directory.
    #[arg(long)]
    out: PathBuf,
    /// Continue an existing store with the same specification.
    #[arg(long)]
    resume: bool,
    /// Override the global seed of the specification.
    #[arg(long)]
    seed: Option<u64>,
    /// Stop after this many newly evaluated grid points.
    #[arg(long)]
    max_points: Option<usize>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    table: AnalyzeTable,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum AnalyzeTable {
    /// Plateau ratio of the search against each local baseline.
    Plateau,
    /// Smallest N with a global advantage, per (M, coupling, gate error).
    MinN,
    /// Capacity bounds. Defaults to every (distance, N) of the store grid.
    Bounds {
        /// Explicit transmissivities; overrides the store grid.
        #[arg(long, value_delimiter = ',')]
        eta: Vec<f64>,
        /// Repeater counts used with --eta.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0u32])]
        repeaters: Vec<u32>,
    },
    /// Every stored record as one row.
    ExportCurves,
    /// Per-level step counts of the searched schedules.
    ExportSchedules,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Results store to expose; repeatable.
    #[arg(long)]
    store: Vec<PathBuf>,
    /// Directory with the explorer's static bundle.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

fn budget_exit(err: &anyhow::Error) -> bool {
    matches!(
        err.downcast_ref::<ProtocolError>(),
        Some(ProtocolError::BudgetExceeded { .. })
    )
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let params = args.chain.params();
    let report = RunReport::evaluate(&params, &args.policy)?;
    let stdout = std::io::stdout();
    match args.format {
        RunFormat::Json => output::write_json(stdout.lock(), &report)?,
        RunFormat::Csv => output::write_csv(stdout.lock(), &report.level_rows())?,
        RunFormat::Text => print!("{}", report.to_text()),
    }
    Ok(())
}

fn optimize(args: &OptimizeArgs) -> Result<()> {
    let params = args.chain.params();
    let config = SearchConfig {
        samples: args.samples,
        seed: args.seed,
        include_ld_candidates: args.include_ld,
        max_steps_per_level: args.max_steps_per_level,
        fth_grid: args.fth_grid.clone(),
    };
    let search = search_schedules(&params, &config)?;
    let best = RunReport::evaluate(
        &params,
        &PolicyKind::Manual {
            schedule: search.best_schedule.clone(),
        },
    )?;
    let response = OptimizeResponse { search, best };
    let stdout = std::io::stdout();
    match args.format {
        RunFormat::Json => output::write_json(stdout.lock(), &response)?,
        RunFormat::Csv => output::write_csv(stdout.lock(), &output::optimize_rows(&response))?,
        RunFormat::Text => print!("{}", output::optimize_text(&response)),
    }
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<SweepSpec>(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => SweepSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.search.seed = seed;
    }
    spec.validate()?;
    let store = if args.resume {
        ResultsStore::resume(&args.out, spec.clone())?
    } else {
        ResultsStore::create(&args.out, spec.clone())?
    };
    let quiet = args.quiet;
    let summary = run_sweep(
        &spec,
        &store,
        SweepOptions {
            max_points: args.max_points,
        },
        &|p| {
            if !quiet {
                eprintln!("[{}/{}] points done", p.completed, p.total);
            }
        },
    )?;
    if !quiet {
        eprintln!(
            "sweep: {} points, {} already stored, {} evaluated, {} failed records",
            summary.total_points, summary.skipped_points, summary.evaluated_points, summary.failed_records
        );
    }
    Ok(())
}

fn serve(args: &ServeArgs) -> Result<()> {
    let state = repeater_service::AppState::load(&args.store)?;
    let app = repeater_service::router(Arc::new(state), args.static_dir.as_deref());
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(repeater_service::serve(args.bind, app))?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads / REPEATER_SCHED_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Optimize(a) => optimize(a),
        Command::Sweep(a) => sweep(a),
        Command::Analyze(a) => analyze::run(a),
        Command::Serve(a) => serve(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if budget_exit(&err) {
                ExitCode::from(EXIT_BUDGET)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
