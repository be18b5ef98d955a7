use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "forest-solve",
    version,
    about = "Solve resistive networks and reversible Markov chains via spanning trees and forests",
    after_help = "Exit codes: 0 success, 2 usage or validation error, 3 numeric failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the network equations directly (dense LU).
    Solve(SolveArgs),
    /// Evaluate a tree/forest formula exactly by enumeration.
    Exact(TheoremArgs),
    /// Estimate a tree/forest formula by sampling.
    Estimate(EstimateArgs),
    /// Draw random spanning trees, or separating forests when --roots is given.
    Sample(SampleArgs),
    /// List every spanning tree, or every separating forest when --roots is given.
    Enumerate(EnumerateArgs),
    /// Random-walk quantities of the network's reversible chain.
    Markov(MarkovArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Theorem {
    /// Injected currents at the fixed nodes from their voltages.
    Vj,
    /// Free-node voltages from the fixed voltages.
    Vv,
    /// Branch currents from injected currents.
    Ji,
    /// Node voltages from a consistent current distribution.
    Iv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Network file: {"nodes": [...], "branches": [{"u", "v", "g"}, ...]}.
    #[arg(long)]
    pub network: PathBuf,
    /// Tolerance on max_rel_err reported by --check.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct Boundary {
    /// Fixed voltages, e.g. `1=1.0,2=0.0`.
    #[arg(long)]
    pub fixed: Option<String>,
    /// Injected currents, e.g. `1=-1,2=1`; unlisted nodes get zero.
    #[arg(long)]
    pub inject: Option<String>,
    /// Ground node for injected-current problems (defaults to the first node).
    #[arg(long)]
    pub ground: Option<String>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub boundary: Boundary,
}

#[derive(Debug, Args)]
pub struct TheoremArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub theorem: Theorem,
    #[command(flatten)]
    pub boundary: Boundary,
    /// Also solve with the linear-algebra oracle and report the discrepancy.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub theorem: TheoremArgs,
    #[command(flatten)]
    pub mc: MonteCarlo,
}

#[derive(Debug, Args)]
pub struct MonteCarlo {
    /// Number of samples.
    #[arg(long, default_value_t = 100_000)]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results are reproducible for a fixed (seed, workers).
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// Root set, e.g. `1,2`.
    #[arg(long)]
    pub roots: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// Root set, e.g. `1,2`.
    #[arg(long)]
    pub roots: Option<String>,
}

#[derive(Debug, Args)]
pub struct MarkovArgs {
    #[command(flatten)]
    pub common: Common,
    /// Also compute the fundamental-matrix or electrical answer.
    #[arg(long, global = true)]
    pub check: bool,
    #[command(subcommand)]
    pub action: MarkovAction,
}

#[derive(Debug, Subcommand)]
pub enum MarkovAction {
    /// Expected steps from --start until the walk first enters --roots.
    Hitting {
        #[arg(long)]
        start: String,
        #[arg(long)]
        roots: String,
    },
    /// Probability of entering --roots at each root.
    Absorb {
        #[arg(long)]
        start: String,
        #[arg(long)]
        roots: String,
        /// Estimate from this many sampled forests instead of enumerating.
        #[arg(long)]
        estimate: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Net probability flow while relaxing from --p0 to equilibrium.
    Flow {
        /// Initial distribution, e.g. `1=1.0`; unlisted states get zero.
        #[arg(long)]
        p0: String,
    },
}
