use std::path::PathBuf;

use bpo_core::fw::StepRule;
use bpo_core::ingest::CostScale;
use bpo_core::MpVariant;
use bpo_core::UtilitySpec;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::runners::{BudgetRule, SolverKind};

#[derive(Debug, Parser)]
#[command(
    name = "bpo",
    version,
    about = "Budgeted influencer-portfolio optimization"
)]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic instance.
    Gen(GenArgs),
    /// Build an instance from an activity trace.
    Ingest(IngestArgs),
    /// Solve an instance with Frank-Wolfe.
    Solve(SolveArgs),
    /// Solve a multi-platform instance with Frank-Wolfe.
    SolveMp(SolveMpArgs),
    /// Greedy influence-per-cost rule of thumb.
    Heuristic(HeuristicArgs),
    /// Run several solvers on one instance.
    Compare(CompareArgs),
    /// Benchmark solvers over generated networks of growing size.
    Bench(BenchArgs),
    /// Check an instance file.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GraphModel {
    Ab,
    Er,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ImpressionModel {
    /// Newsfeed snapshot simulation.
    Feed,
    /// Long-run feed shares without re-posting.
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StepArg {
    Harmonic,
    Gapc,
    Linesearch,
}

impl From<StepArg> for StepRule {
    fn from(s: StepArg) -> Self {
        match s {
            StepArg::Harmonic => StepRule::Harmonic,
            StepArg::Gapc => StepRule::GapOverCurvature,
            StepArg::Linesearch => StepRule::LineSearch,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CostScaleArg {
    Unit,
    PerThousand,
}

impl From<CostScaleArg> for CostScale {
    fn from(c: CostScaleArg) -> Self {
        match c {
            CostScaleArg::Unit => CostScale::Unit,
            CostScaleArg::PerThousand => CostScale::PerThousand,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    PerPlatform,
    Shared,
}

impl From<VariantArg> for MpVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::PerPlatform => MpVariant::PerPlatform,
            VariantArg::Shared => MpVariant::Shared,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Args)]
pub struct FeedArgs {
    /// How impression ratios are obtained from the graph.
    #[arg(long, value_enum, default_value_t = ImpressionModel::Feed)]
    pub impressions: ImpressionModel,
    #[arg(long, default_value_t = 20)]
    pub feed_size: usize,
    #[arg(long, default_value_t = 200)]
    pub snapshots: usize,
}

#[derive(Clone, Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub model: GraphModel,
    #[arg(long)]
    pub n: usize,
    /// Attachment links per node (expected degree parameter for ER).
    #[arg(long, default_value_t = 4)]
    pub a: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[command(flatten)]
    pub feed: FeedArgs,
    #[arg(long, default_value_t = 0)]
    pub advertiser: usize,
    #[arg(long, value_enum, default_value_t = CostScaleArg::Unit)]
    pub cost_scale: CostScaleArg,
    /// `fixed:<B>` or `per-user:<x>` (B = x N).
    #[arg(long, default_value = "per-user:0.01")]
    pub budget_rule: BudgetRule,
}

#[derive(Clone, Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Rate window length, in the trace's time unit.
    #[arg(long)]
    pub window: f64,
    #[arg(long, value_enum, default_value_t = CostScaleArg::Unit)]
    pub cost_scale: CostScaleArg,
    #[arg(long, default_value = "per-user:0.01")]
    pub budget_rule: BudgetRule,
    /// Trace user id of the advertiser; the smallest id when absent.
    #[arg(long)]
    pub advertiser: Option<i64>,
    #[command(flatten)]
    pub feed: FeedArgs,
}

#[derive(Clone, Debug, Args)]
pub struct SolverArgs {
    /// `linear:δ`, `log:δ`, `afair:α` or `maxmin[:α]`.
    #[arg(long, default_value = "log:1000")]
    pub utility: UtilitySpec,
    #[arg(long, default_value_t = 30)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = StepArg::Linesearch)]
    pub step: StepArg,
    /// Curvature constant for `--step gapc`; estimated when absent.
    #[arg(long)]
    pub curvature: Option<f64>,
}

#[derive(Clone, Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Leave wall-clock timings out of the output so repeated runs are
    /// byte-identical.
    #[arg(long)]
    pub omit_timings: bool,
}

#[derive(Clone, Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Debug, Args)]
pub struct SolveMpArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Overrides the variant stored in the instance file.
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Debug, Args)]
pub struct HeuristicArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Utility used to score the greedy allocation.
    #[arg(long, default_value = "log:1000")]
    pub utility: UtilitySpec,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Debug, Args)]
pub struct BaselineArgs {
    /// Iterations of projected subgradient and mirror descent.
    #[arg(long, default_value_t = 300)]
    pub descent_iters: usize,
    /// Cascade samples for the influence-maximization baseline.
    #[arg(long, default_value_t = 100)]
    pub mc_runs: usize,
}

#[derive(Clone, Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "fw,ps,md,bim,heuristic")]
    pub solvers: Vec<SolverKind>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub baseline: BaselineArgs,
    #[arg(long)]
    pub omit_timings: bool,
}

#[derive(Clone, Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = GraphModel::Ab)]
    pub model: GraphModel,
    #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000,4000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    pub a: usize,
    #[arg(long, default_value = "per-user:0.01")]
    pub budget_rule: BudgetRule,
    #[arg(long, default_value = "log:1000")]
    pub utility: UtilitySpec,
    #[arg(long, value_delimiter = ',', default_value = "fw,heuristic")]
    pub solvers: Vec<SolverKind>,
    /// Seeds `seed, seed + 1, ...` per size.
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[command(flatten)]
    pub feed: FeedArgs,
    #[arg(long, default_value_t = 20)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    #[command(flatten)]
    pub baseline: BaselineArgs,
    #[arg(long)]
    pub omit_timings: bool,
}

#[derive(Clone, Debug, Args)]
pub struct ValidateArgs {
    /// Single- or multi-platform instance file.
    #[arg(long)]
    pub instance: PathBuf,
}
