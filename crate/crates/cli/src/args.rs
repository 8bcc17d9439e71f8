//! Command-line grammar. Flags left unset fall back to the config file, then
//! to the defaults shown in `--help`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "mcustat", version, about = "U-statistics of uniformly ergodic Markov chains", arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one path and write path.csv
    Simulate(SimulateArgs),
    /// Ergodicity and Doeblin constants of the model
    Constants(ConstantsArgs),
    /// Centered U-statistic of one simulated path
    Ustat(UstatArgs),
    /// Martingale/remainder split of one simulated path (finite chains)
    Decompose(DecomposeArgs),
    /// A, B_n, C_n, t_n and the tail-bound table over a u grid
    Bounds(BoundsArgs),
    /// Split-chain trace with regeneration summary (finite chains)
    Split(SplitArgs),
    /// Rank statistics
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Decomposition identities and split-chain checks; exits 2 on a breach
    Verify(VerifyArgs),
    /// Quantile decay of unweighted and weighted statistics in n
    Rate(RateArgs),
    /// Empirical tail quantiles against the tail bounds
    Tail(TailArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run config with [model], [kernel] and [run] tables
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory [default: mcustat-out/<command>]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Base seed of every random stream [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it [default: available parallelism]
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Path length [default: 100]
    #[arg(long)]
    pub n: Option<usize>,
    /// Law of X_1: declared, stationary, law:p1,p2,.. or point:x1,.. [default: stationary]
    #[arg(long, value_name = "LAW")]
    pub initial: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ConstantsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Replace the derived L by this value (needs --rate-rho) [default: derived]
    #[arg(long)]
    pub rate_l: Option<f64>,
    /// Replace the derived rho by this value (needs --rate-l) [default: derived]
    #[arg(long)]
    pub rate_rho: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct UstatArgs {
    #[command(flatten)]
    pub common: Common,
    /// Path length [default: 100]
    #[arg(long)]
    pub n: Option<usize>,
    /// Law of X_1: declared, stationary, law:p1,p2,.. or point:x1,.. [default: stationary]
    #[arg(long, value_name = "LAW")]
    pub initial: Option<String>,
    /// joint-expectation, pi-expectation or none [default: joint-expectation]
    #[arg(long)]
    pub centering: Option<String>,
    /// raw or pairs-normalized [default: raw]
    #[arg(long)]
    pub normalization: Option<String>,
    /// Draws for sampled centering on continuous models [default: 4096]
    #[arg(long)]
    pub mc_samples: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Path length [default: 100]
    #[arg(long)]
    pub n: Option<usize>,
    /// Law of X_1: declared, stationary, law:p1,p2,.. or point:x1,.. [default: stationary]
    #[arg(long, value_name = "LAW")]
    pub initial: Option<String>,
    /// Martingale depth [default: floor(r log n)]
    #[arg(long)]
    pub t_n: Option<usize>,
    /// Depth rate r [default: 1.05 * 2 / log(1/rho)]
    #[arg(long)]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Horizon [default: 100]
    #[arg(long)]
    pub n: Option<usize>,
    /// Law of X_1: declared, stationary, law:p1,p2,.. or point:x1,.. [default: stationary]
    #[arg(long, value_name = "LAW")]
    pub initial: Option<String>,
    /// Levels u, comma separated [default: 1,2,4,8]
    #[arg(long, value_delimiter = ',')]
    pub u_grid: Vec<f64>,
    /// Martingale depth [default: floor(r log n)]
    #[arg(long)]
    pub t_n: Option<usize>,
    /// Depth rate r [default: 1.05 * 2 / log(1/rho)]
    #[arg(long)]
    pub r: Option<f64>,
    /// Multiplicative constant kappa [default: 1]
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Level constant beta [default: 1]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Replace the derived L (needs --rate-rho; finite chains) [default: derived]
    #[arg(long)]
    pub rate_l: Option<f64>,
    /// Replace the derived rho (needs --rate-l; finite chains) [default: derived]
    #[arg(long)]
    pub rate_rho: Option<f64>,
    /// Outer draws for Monte Carlo constants [default: 32]
    #[arg(long)]
    pub constants_samples: Option<usize>,
    /// Inner draws for Monte Carlo constants [default: 32]
    #[arg(long)]
    pub constants_inner: Option<usize>,
    /// Probe points for Monte Carlo constants [default: 50]
    #[arg(long)]
    pub constants_probes: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub common: Common,
    /// Trace length [default: 100000]
    #[arg(long)]
    pub steps: Option<usize>,
    /// Per-state function summed over blocks [default: indicator of state 0]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub f: Vec<f64>,
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Kendall's tau of a ranking against the identity order
    TauKendall(RanksArgs),
    /// AP correlation of a ranking against the identity order
    TauAp(RanksArgs),
    /// Weighted Wilcoxon rank sum of two samples
    Wilcoxon(WilcoxonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StatsIo {
    /// TOML run config with a [run] table
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory [default: mcustat-out/stats]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RanksArgs {
    #[command(flatten)]
    pub io: StatsIo,
    /// Ranks or scores, comma separated, no ties [required unless in config]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ranks: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct WilcoxonArgs {
    #[command(flatten)]
    pub io: StatsIo,
    /// First sample [required unless in config]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sample0: Vec<f64>,
    /// Second sample [required unless in config]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sample1: Vec<f64>,
    /// Weights of the first sample [default: all 1]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub weights0: Vec<f64>,
    /// Weights of the second sample [default: all 1]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub weights1: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Path length [default: 50]
    #[arg(long)]
    pub n: Option<usize>,
    /// Paths per initial law [default: 100]
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Martingale depth [default: floor(r log n)]
    #[arg(long)]
    pub t_n: Option<usize>,
    /// Split-chain trace length [default: 200000]
    #[arg(long)]
    pub steps: Option<usize>,
    /// Per-state function for the block identity [default: indicator of state 0]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Horizons, comma separated, at least 3 [default: 32,64,128,256]
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Vec<usize>,
    /// Paths per horizon [default: 1000]
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Law of X_1: declared, stationary, law:p1,p2,.. or point:x1,.. [default: stationary]
    #[arg(long, value_name = "LAW")]
    pub initial: Option<String>,
    /// joint-expectation, pi-expectation or none [default: joint-expectation]
    #[arg(long)]
    pub centering: Option<String>,
    /// Extra weight of the weighted series: one, inverse-lag, inverse-earlier or constant:<v> [default: inverse-lag]
    #[arg(long)]
    pub weights: Option<String>,
    /// Draws for sampled centering on continuous models [default: 256]
    #[arg(long)]
    pub mc_samples: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TailArgs {
    #[command(flatten)]
    pub common: Common,
    /// Horizons, comma separated [default: 50,100,200]
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Vec<usize>,
    /// Levels u, comma separated [default: 1,2,3,4,5,6]
    #[arg(long, value_delimiter = ',')]
    pub u_grid: Vec<f64>,
    /// Paths per horizon, at least 100 [default: 1000]
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Law of X_1: declared, stationary, law:p1,p2,.. or point:x1,.. [default: stationary]
    #[arg(long, value_name = "LAW")]
    pub initial: Option<String>,
    /// joint-expectation, pi-expectation or none [default: joint-expectation]
    #[arg(long)]
    pub centering: Option<String>,
    /// Level constant beta [default: 1]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Fixed kappa [default: calibrated from the simulations]
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Level held out of the kappa calibration [default: middle of the u grid]
    #[arg(long)]
    pub held_out_u: Option<f64>,
    /// Draws for sampled centering on continuous models [default: 256]
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Outer draws for Monte Carlo constants [default: 32]
    #[arg(long)]
    pub constants_samples: Option<usize>,
    /// Inner draws for Monte Carlo constants [default: 32]
    #[arg(long)]
    pub constants_inner: Option<usize>,
    /// Probe points for Monte Carlo constants [default: 50]
    #[arg(long)]
    pub constants_probes: Option<usize>,
}
