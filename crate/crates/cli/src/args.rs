use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use umpteen::chain::DEFAULT_STATE_BUDGET;
use umpteen::peierls::DEFAULT_CLASS_BUDGET;
use umpteen::walk::DEFAULT_ENUMERATION_BUDGET;

#[derive(Parser, Debug)]
#[command(
    name = "umpteen",
    version,
    about = "Transposition walks, puzzle chains and spectral bounds"
)]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, default_value_t = default_workers())]
    pub workers: usize,

    /// File for the result; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Skip the result cache even when UMPTEEN_CACHE_DIR is set.
    #[arg(long, global = true)]
    pub no_cache: bool,

    #[command(subcommand)]
    pub command: Command,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exact return counts by exhaustive enumeration.
    ExactMoments(ExactMoments),
    /// Monte Carlo return probabilities with Wilson intervals.
    McReturn(McReturn),
    /// Flexible-site statistics of sampled walks.
    FlexStats(FlexStats),
    /// Flip classes of sampled walks, or the exhaustive flip partition.
    PeierlsClasses(PeierlsClasses),
    /// Return probabilities of the killed puzzle chain on a box.
    Decorated(Decorated),
    /// Dirichlet eigenpairs of boxes and norms of random connected sets.
    Laplacian(Laplacian),
    /// Spectra of H[G], complete-graph moments, or box counting functions.
    Spectra(Spectra),
    /// Two-sided bounds on the density of states near the lower edge.
    IdsBounds(IdsBounds),
    /// Exponent fit to the upper tail bound.
    LifshitzFit(LifshitzFit),
    /// Run the acceptance checks and print a pass/fail table.
    Verify(Verify),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ExactMoments(_) => "exact-moments",
            Command::McReturn(_) => "mc-return",
            Command::FlexStats(_) => "flex-stats",
            Command::PeierlsClasses(_) => "peierls-classes",
            Command::Decorated(_) => "decorated",
            Command::Laplacian(_) => "laplacian",
            Command::Spectra(_) => "spectra",
            Command::IdsBounds(_) => "ids-bounds",
            Command::LifshitzFit(_) => "lifshitz-fit",
            Command::Verify(_) => "verify",
        }
    }

    /// The seed slot of randomized commands.
    pub fn seed_mut(&mut self) -> Option<&mut Option<u64>> {
        match self {
            Command::McReturn(a) => Some(&mut a.seed),
            Command::FlexStats(a) => Some(&mut a.seed),
            Command::PeierlsClasses(a) => Some(&mut a.seed),
            Command::Laplacian(a) => Some(&mut a.seed),
            Command::IdsBounds(a) => Some(&mut a.seed),
            _ => None,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ExactMoments {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Largest walk length; rows for 2, 4, ..., max-2n.
    #[arg(long = "max-2n", default_value_t = 8)]
    pub max_two_n: usize,
    /// Largest number of step sequences to enumerate.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    pub budget: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct McReturn {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long = "two-n", visible_alias = "2n", default_value_t = 2)]
    pub two_n: usize,
    /// Rows for 2, 4, ..., max-2n instead of a single length.
    #[arg(long = "max-2n")]
    pub max_two_n: Option<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FlexStats {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Walk length n.
    #[arg(long = "n", default_value_t = 100)]
    pub n_steps: usize,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PeierlsClasses {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long = "two-n", visible_alias = "2n", default_value_t = 30)]
    pub two_n: usize,
    #[arg(long, default_value_t = 1_000)]
    pub samples: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest class to close under flips.
    #[arg(long, default_value_t = DEFAULT_CLASS_BUDGET)]
    pub class_budget: usize,
    /// Partition every step sequence of length 2, 4, ..., two-n instead of sampling.
    #[arg(long)]
    pub partition: bool,
    /// Largest number of sequences for --partition.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    pub budget: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Decorated {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Box half-side.
    #[arg(long = "L", default_value_t = 1)]
    pub l: usize,
    #[arg(long = "two-n", visible_alias = "2n", default_value_t = 2)]
    pub two_n: usize,
    /// Largest number of chain states.
    #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
    pub state_budget: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Laplacian {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Boxes of half-side 1..=L.
    #[arg(long = "L", default_value_t = 5)]
    pub l: usize,
    /// Number of random connected subsets.
    #[arg(long, default_value_t = 0)]
    pub subsets: usize,
    #[arg(long, default_value_t = 60)]
    pub max_size: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(group(ArgGroup::new("target").required(true).args(["graph", "kn_max", "box_l"])))]
pub struct Spectra {
    /// Decomposition of H[G]: K<n>, P<n>, C<n> or B<d>,<L>.
    #[arg(long)]
    pub graph: Option<String>,
    /// Complete-graph moments for N = 2..=kn-max.
    #[arg(long = "kn-max")]
    pub kn_max: Option<usize>,
    /// Moment order for --kn-max.
    #[arg(long = "moment-n", default_value_t = 4)]
    pub moment_n: usize,
    /// Counting function of the one-dimensional box of half-side L.
    #[arg(long = "box-L")]
    pub box_l: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct IdsBounds {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long = "max-2n", default_value_t = 12)]
    pub max_two_n: usize,
    /// Sequences enumerated before falling back to Monte Carlo.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    pub budget: u64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Add chain lower bounds from the box of this half-side.
    #[arg(long = "chain-L")]
    pub chain_l: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
    pub state_budget: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LifshitzFit {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long = "max-2n", default_value_t = 12)]
    pub max_two_n: usize,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    pub budget: u64,
    /// Fit exp(-eps^(-d/2)) instead of the moment bound.
    #[arg(long)]
    pub synthetic: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Verify {
    /// Run a single criterion.
    #[arg(long)]
    pub criterion: Option<u8>,
}
