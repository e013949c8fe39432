//! Command-line front end for the docking engine: `dock` runs a full docking
//! invocation, `bench` times the engine across a configuration matrix, and
//! `validate` checks input files and reports their shape.
//!
//! Exit codes are uniform across subcommands: 0 on success, 1 on any input
//! problem (bad flags, unreadable or malformed files), 2 on internal failure.

pub mod bench;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use dockette::engine::{self, BackendConfig, DockingConfig, EngineError, Strategy};
use dockette::model::{self, GridMaps, Ligand, OutputFormat};
use thiserror::Error;

/// Grid-based ligand docking: a memetic genetic algorithm over precomputed
/// receptor maps with interchangeable parallel execution strategies.
#[derive(Debug, Parser)]
#[command(name = "dockette", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dock a ligand into a receptor grid and print the best energy found.
    Dock(DockArgs),
    /// Time the engine across strategies, team sizes, and run counts; emit CSV.
    Bench(BenchArgs),
    /// Parse input files and report their shape.
    Validate(ValidateArgs),
}

/// Execution-strategy names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    /// Split each phase across a scheduler-managed worker pool.
    Workshare,
    /// Run each phase on a fixed worker team with explicit barriers.
    Explicit,
}

impl StrategyArg {
    pub fn to_strategy(self) -> Strategy {
        match self {
            StrategyArg::Workshare => Strategy::WorkShare,
            StrategyArg::Explicit => Strategy::ExplicitTeam,
        }
    }
}

impl fmt::Display for StrategyArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyArg::Workshare => "workshare",
            StrategyArg::Explicit => "explicit",
        })
    }
}

/// Result-file format for `dock --out`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    /// Full result structure.
    Json,
    /// Per-run summary table.
    Csv,
}

#[derive(Debug, Args)]
pub struct DockArgs {
    /// Ligand input file.
    #[arg(long)]
    pub ligand: PathBuf,
    /// Receptor grid file.
    #[arg(long)]
    pub grid: PathBuf,
    /// Number of independent runs.
    #[arg(long, default_value_t = 10)]
    pub nruns: u32,
    /// Base random seed; every draw of the invocation derives from it.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Parallel execution strategy.
    #[arg(long, value_enum, default_value_t = StrategyArg::Workshare)]
    pub strategy: StrategyArg,
    /// Workers cooperating on each run.
    #[arg(long, default_value_t = 64)]
    pub team_size: usize,
    /// Population size per run.
    #[arg(long, default_value_t = 150)]
    pub pop_size: usize,
    /// Energy-evaluation budget per run.
    #[arg(long, default_value_t = 2_500_000)]
    pub max_evals: u64,
    /// Generation cap per run.
    #[arg(long, default_value_t = 27_000)]
    pub max_generations: u64,
    /// Write the result here. Kernel timings are left out of the file, so
    /// identical invocations produce identical bytes.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format of the result file.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Benchmark input as LABEL=LIGAND:GRID (repeatable). The label names the
    /// workload size: small, medium, or large.
    #[arg(long = "input", value_name = "LABEL=LIGAND:GRID", required = true)]
    pub inputs: Vec<String>,
    /// Strategies to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [StrategyArg::Workshare, StrategyArg::Explicit])]
    pub strategies: Vec<StrategyArg>,
    /// Team sizes to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [32, 64, 128, 256])]
    pub team_sizes: Vec<usize>,
    /// Run counts to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 100])]
    pub nruns_values: Vec<u32>,
    /// Timed repeats of every matrix cell.
    #[arg(long, default_value_t = 10)]
    pub repeats: u32,
    /// Base random seed, shared by every cell and repeat.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Energy-evaluation budget per run. The default is far below dock's so
    /// that full sweeps finish in minutes.
    #[arg(long, default_value_t = 50_000)]
    pub bench_max_evals: u64,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Ligand input file.
    #[arg(long, required_unless_present = "grid")]
    pub ligand: Option<PathBuf>,
    /// Receptor grid file.
    #[arg(long, required_unless_present = "ligand")]
    pub grid: Option<PathBuf>,
}

/// Failures split by exit code: input problems exit 1, internal failures 2.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl From<EngineError> for CliError {
    fn from(err: EngineError) -> Self {
        match err {
            EngineError::InvalidConfig(_) | EngineError::Score(_) | EngineError::Params(_) => {
                CliError::Input(err.to_string())
            }
            EngineError::EmptyReduction | EngineError::Backend(_) => {
                CliError::Internal(err.to_string())
            }
        }
    }
}

/// Parse `argv` and run the selected subcommand, returning the process exit
/// code. Help and version requests print to standard output and exit 0.
pub fn main_run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Dock(args) => run_dock(args),
        Command::Bench(args) => bench::run_bench(args),
        Command::Validate(args) => run_validate(args),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            2
        }
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|err| CliError::Input(format!("cannot read {}: {err}", path.display())))
}

pub(crate) fn load_ligand(path: &Path) -> Result<Ligand, CliError> {
    model::parse_ligand(&read_input(path)?)
        .map_err(|err| CliError::Input(format!("{}: {err}", path.display())))
}

pub(crate) fn load_grid(path: &Path) -> Result<GridMaps, CliError> {
    model::parse_grid(&read_input(path)?)
        .map_err(|err| CliError::Input(format!("{}: {err}", path.display())))
}

/// Worker-thread cap: `DOCKETTE_THREADS` when set, otherwise the machine's
/// logical core count.
fn thread_cap() -> Result<usize, CliError> {
    match std::env::var("DOCKETTE_THREADS") {
        Ok(raw) => raw.trim().parse::<usize>().ok().filter(|&n| n >= 1).ok_or_else(|| {
            CliError::Input(format!("DOCKETTE_THREADS must be a positive integer, got {raw:?}"))
        }),
        Err(std::env::VarError::NotPresent) => {
            Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        }
        Err(err) => Err(CliError::Input(format!("DOCKETTE_THREADS: {err}"))),
    }
}

fn run_dock(args: &DockArgs) -> Result<(), CliError> {
    let ligand = load_ligand(&args.ligand)?;
    let grids = load_grid(&args.grid)?;
    let cap = thread_cap()?;

    let mut config = DockingConfig { nruns: args.nruns, seed: args.seed, ..DockingConfig::default() };
    config.ga.pop_size = args.pop_size;
    config.ga.max_evals = args.max_evals;
    config.ga.max_generations = args.max_generations;
    config.backend = BackendConfig {
        strategy: args.strategy.to_strategy(),
        team_size: args.team_size,
        // Fit concurrent runs under the thread cap; the team size itself is
        // taken as requested (oversubscription is a valid configuration).
        max_parallel_runs: (cap / args.team_size.max(1)).max(1),
    };

    let result = engine::run_docking(&ligand, &grids, &config)?;

    if let Some(out) = &args.out {
        // Kernel timings vary run to run; the file keeps the reproducible
        // fields only.
        let mut stored = result.clone();
        stored.timings.clear();
        let format = match args.format {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        };
        std::fs::write(out, model::write_result(&stored, format))
            .map_err(|err| CliError::Internal(format!("cannot write {}: {err}", out.display())))?;
    }

    println!("{}", result.best_energy);
    Ok(())
}

fn run_validate(args: &ValidateArgs) -> Result<(), CliError> {
    if let Some(path) = &args.ligand {
        let ligand = load_ligand(path)?;
        println!(
            "atoms={} torsions={} pairs={}",
            ligand.natoms(),
            ligand.ntorsions(),
            ligand.intra_pairs.len()
        );
    }
    if let Some(path) = &args.grid {
        let grids = load_grid(path)?;
        println!(
            "grid={}x{}x{} spacing={} maps={}",
            grids.nx,
            grids.ny,
            grids.nz,
            grids.spacing,
            grids.maps.len()
        );
    }
    Ok(())
}
