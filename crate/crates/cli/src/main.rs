//! `symmix`: the constraint → terms → generators → mixer → QAOA pipeline as
//! subcommands exchanging JSON (CSV for benchmark records).

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use symmix::sat1in3::AnsatzKind;

#[derive(Parser, Debug)]
#[command(name = "symmix", version, about = "Symmetry-preserving mixers and QAOA for exactly-one 3-SAT")]
pub struct Cli {
    /// Pretty-print JSON output.
    #[arg(long, global = true)]
    pub json_pretty: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Generate a random instance at the satisfiability threshold.
    Gen(GenArgs),
    /// Enumerate all satisfying assignments.
    Solve(InstanceArgs),
    /// Maximum set of variable-disjoint clauses.
    Mds(InstanceArgs),
    /// Build an ansatz (phase clauses, mixer programs, initial state).
    Ansatz(AnsatzArgs),
    /// Search for Hermitian terms commuting with every constraint.
    Search(SearchArgs),
    /// Select and group generators from a term list.
    Reduce(ReduceArgs),
    /// Compile a generator collection into a diffusor program or driver.
    Compile(CompileArgs),
    /// Check the quadratic sufficient condition for each term.
    Quadcheck(QuadcheckArgs),
    /// Simulate QAOA for one schedule.
    Run(RunArgs),
    /// Train angles by grid sweep and finite-difference ascent.
    Train(TrainArgs),
    /// Benchmark trained schedules across sizes.
    Bench(BenchArgs),
    /// Fit A·Bⁿ to inverse success probabilities.
    Fit(FitArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Solve(_) => "solve",
            Command::Mds(_) => "mds",
            Command::Ansatz(_) => "ansatz",
            Command::Search(_) => "search",
            Command::Reduce(_) => "reduce",
            Command::Compile(_) => "compile",
            Command::Quadcheck(_) => "quadcheck",
            Command::Run(_) => "run",
            Command::Train(_) => "train",
            Command::Bench(_) => "bench",
            Command::Fit(_) => "fit",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct OutArgs {
    /// Output file (stdout when omitted; the manifest then goes to stderr).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct GenArgs {
    #[arg(short, long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Redraw with sub-seeds until the instance has a solution.
    #[arg(long)]
    pub satisfiable: bool,
    /// Drop variables that appear in no clause.
    #[arg(long)]
    pub drop_unused: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct InstanceArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    X,
    Mds,
    Symcov,
}

impl From<KindArg> for AnsatzKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::X => AnsatzKind::X,
            KindArg::Mds => AnsatzKind::Mds,
            KindArg::Symcov => AnsatzKind::MdsSymcov,
        }
    }
}

#[derive(Args, Debug, Serialize, Clone)]
pub struct AnsatzOpts {
    /// Locality cap for the SymCov term search.
    #[arg(long, default_value_t = 4)]
    pub locality: usize,
    /// Force partial mixers on (default: on for symcov only).
    #[arg(long, conflicts_with = "no_partial_mixers")]
    pub partial_mixers: bool,
    /// Force partial mixers off.
    #[arg(long)]
    pub no_partial_mixers: bool,
    /// Keep every commuting term instead of dropping generatable ones.
    #[arg(long)]
    pub no_reduce: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct AnsatzArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub opts: AnsatzOpts,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Linear search when every constraint is linear, otherwise polynomial.
    Auto,
    Linear,
    Poly,
}

#[derive(Args, Debug, Serialize)]
pub struct SearchArgs {
    /// JSON array of constraints ({"c","rhs"} or {"monomials","rhs"}).
    #[arg(long)]
    pub constraints: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub locality: usize,
    /// Qubit count (defaults to the widest constraint).
    #[arg(short, long)]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value_t = Algorithm::Auto)]
    pub algorithm: Algorithm,
    /// Also report purely diagonal terms.
    #[arg(long)]
    pub include_diagonal: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct ReduceArgs {
    /// JSON array of Hermitian pairs.
    #[arg(long)]
    pub terms: PathBuf,
    #[arg(long)]
    pub no_reduce: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TagArg {
    Beta,
    Gamma,
}

#[derive(Args, Debug, Serialize)]
pub struct CompileArgs {
    /// Generator collection JSON (array of groups).
    #[arg(long)]
    pub collection: PathBuf,
    #[arg(short, long)]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value_t = TagArg::Beta)]
    pub tag: TagArg,
    /// Emit the driver Hamiltonian Σ g + g† instead of a diffusor program.
    #[arg(long)]
    pub driver: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct QuadcheckArgs {
    /// Ising constraint JSON {"h": [...], "J": [[...]]}.
    #[arg(long)]
    pub constraint: PathBuf,
    /// JSON array of Hermitian pairs.
    #[arg(long)]
    pub terms: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct RunArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub ansatz: PathBuf,
    #[arg(long)]
    pub schedule: PathBuf,
    /// Include the final amplitudes (n ≤ 12).
    #[arg(long)]
    pub amplitudes: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize, Clone)]
pub struct FdOpts {
    #[arg(long, default_value_t = 5000)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    pub rate: f64,
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    #[arg(long, default_value_t = 10)]
    pub grid_count: usize,
    #[arg(long, default_value_t = 0.2)]
    pub grid_a_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub grid_b_max: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(short, long, default_value_t = 14)]
    pub p: usize,
    /// Size of the training instances.
    #[arg(long, default_value_t = 12)]
    pub size: usize,
    #[arg(long, default_value_t = 32)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub fd: FdOpts,
    #[command(flatten)]
    #[serde(flatten)]
    pub opts: AnsatzOpts,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct BenchArgs {
    /// `KIND=FILE` pairs; FILE holds a schedule or a `train` result.
    #[arg(long = "schedule", required = true)]
    pub schedules: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "12,14,16,18,20,22")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Retrain at every size instead of reusing the given schedules.
    #[arg(long)]
    pub retrain: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub fd: FdOpts,
    /// Training-set size and seed when retraining.
    #[arg(long, default_value_t = 32)]
    pub train_count: usize,
    #[arg(long, default_value_t = 1)]
    pub train_seed: u64,
    /// Fit the mean instead of the median success.
    #[arg(long)]
    pub mean: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub opts: AnsatzOpts,
    /// CSV records (n, seed, kind, p, success).
    #[arg(long)]
    pub csv: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct FitArgs {
    /// Benchmark CSV, or a JSON array of [n, y] pairs.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub mean: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("SYMMIX_THREADS") {
        let n: usize = v.parse().map_err(|_| anyhow::anyhow!("SYMMIX_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = configure_threads().and_then(|_| commands::dispatch(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
