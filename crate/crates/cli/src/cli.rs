use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tissuemix::gibbs::GibbsInit;

use crate::config::{Method, Parallelism};

#[derive(Debug, Parser)]
#[command(name = "tissuemix", version, about = "Estimate subpopulation weights of heterogeneous tissue")]
pub struct Cli {
    /// Worker threads for parallel kernels (overrides TISSUEMIX_WORKERS).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a dataset from known parameters.
    Synth(SynthArgs),
    /// Evaluate a faulty-network ensemble into expression profiles.
    Profiles(ProfilesArgs),
    /// Fit the model with one of the engines.
    Fit(FitArgs),
    /// Marginal density grids and modes from a samples file.
    Density(DensityArgs),
    /// Time serial against parallel runs over a range of sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub genes: usize,
    #[arg(long, default_value_t = 3)]
    pub networks: usize,
    /// First N−1 weights, comma separated. Defaults to 0.1,0.3 when N = 3.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub true_k: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100.0)]
    pub rho: f64,
    /// `reference` or a JSON file holding Λ as nested rows.
    #[arg(long, default_value = "reference")]
    pub lambda: String,
    /// `binary`, `uniform`, or a profiles CSV whose rows are cycled.
    #[arg(long, default_value = "uniform")]
    pub profiles: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dataset CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth JSON; defaults to `<out stem>.truth.json`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProfilesArgs {
    #[arg(long)]
    pub netlist: PathBuf,
    /// One fault file per network of the ensemble.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub faults: Vec<PathBuf>,
    /// Stimulus files, one profile row per (stimulus, output).
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub stimulus: Vec<PathBuf>,
    /// `output,gene` CSV; every output keeps its own name when absent.
    #[arg(long)]
    pub gene_map: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Re-run the configuration echoed in an earlier report.
    #[arg(long, conflicts_with_all = ["data", "profiles", "ratios", "method", "hyperparams"])]
    pub replay: Option<PathBuf>,
    /// Dataset CSV `[gene,]r,d_1..d_N`.
    #[arg(long, conflicts_with_all = ["profiles", "ratios"])]
    pub data: Option<PathBuf>,
    /// Profiles CSV, joined with `--ratios` on gene name.
    #[arg(long, requires = "ratios")]
    pub profiles: Option<PathBuf>,
    #[arg(long, requires = "profiles")]
    pub ratios: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON file with a0, b0, q0, n0, K0, Lambda0.
    #[arg(long)]
    pub hyperparams: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Iteration cap (default 10000).
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Relative change stopping tolerance (vb: 1e-8, em: 1e-10).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Posterior draws summarized after a vb fit.
    #[arg(long, default_value_t = 10_000)]
    pub posterior_samples: usize,
    /// Gibbs iterations including burn-in.
    #[arg(long, default_value_t = 10_000)]
    pub iterations: usize,
    /// Defaults to a fifth of the iterations.
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, value_enum, default_value = "prior")]
    pub init: InitArg,
    /// JSON with K, Lambda, rho to start EM from.
    #[arg(long)]
    pub em_init: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "parallel")]
    pub parallel: Parallelism,
    /// Allow scheduling-dependent reductions (faster, not bit-reproducible).
    #[arg(long)]
    pub nondeterministic: bool,
    #[arg(long, default_value_t = 512)]
    pub grid_points: usize,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum InitArg {
    Prior,
    Overdispersed,
}

impl From<InitArg> for GibbsInit {
    fn from(a: InitArg) -> Self {
        match a {
            InitArg::Prior => GibbsInit::Prior,
            InitArg::Overdispersed => GibbsInit::Overdispersed,
        }
    }
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// Samples CSV written by `fit`.
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 512)]
    pub grid_points: usize,
    /// Grid padding beyond the sample range, in bandwidths.
    #[arg(long, default_value_t = 4.0)]
    pub pad: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "4000,5000,6000,7000,8000")]
    pub sizes: Vec<usize>,
    #[arg(long, value_enum, default_value = "vb")]
    pub method: Method,
    /// Fixed iteration count per run (no early stopping).
    #[arg(long, default_value_t = 100)]
    pub iterations: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "serial,parallel")]
    pub modes: Vec<Parallelism>,
    /// Timed repetitions per (size, mode); a warm-up run precedes them.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub nondeterministic: bool,
    /// Report CSV.
    #[arg(long)]
    pub out: PathBuf,
}
