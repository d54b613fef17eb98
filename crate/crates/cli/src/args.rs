use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "neighbor2vec", version, about = "No-walk graph embeddings with neighbor propagation")]
pub struct Cli {
    /// Read `key = value` defaults from this file; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the sampled training corpus, one sentence per line.
    Sample(SampleArgs),
    /// Sample a corpus and train embeddings.
    Embed(EmbedArgs),
    /// Smooth an embedding file over the graph.
    Propagate(PropagateArgs),
    /// Node classification with the repeated-run MLP protocol.
    EvalNode(EvalNodeArgs),
    /// Link prediction with the repeated-run MLP protocol.
    EvalLink(EvalLinkArgs),
    /// Rerun embed, propagate and evaluate for each value of one parameter.
    Sweep(SweepArgs),
    /// Time corpus generation and training across thread counts and graph sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphArgs {
    /// Edge list: `u v [weight]` per line, `#` comments.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long)]
    pub directed: bool,
    /// Read a third column as the edge weight.
    #[arg(long)]
    pub weighted: bool,
    /// `string_id<TAB>int_id` lines mapping external ids to dense ids.
    #[arg(long, value_name = "PATH")]
    pub node_map: Option<PathBuf>,
    /// Lower bound on the node count, for trailing isolated nodes.
    #[arg(long, default_value_t = 0)]
    pub num_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerChoice {
    NoWalk,
    RandomWalk,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SamplerArgs {
    #[arg(long, value_enum, default_value_t = SamplerChoice::NoWalk)]
    pub sampler: SamplerChoice,
    /// Neighbors per sentence; defaults to max(8, ceil(average degree)).
    #[arg(long)]
    pub num: Option<usize>,
    /// Sampling rounds per node (walks per node for random walks).
    #[arg(long, default_value_t = 10)]
    pub n_sample: usize,
    /// Walk length for the random-walk sampler.
    #[arg(long, default_value_t = 40)]
    pub walk_len: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "NEIGHBOR2VEC_THREADS", default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleChoice {
    Linear,
    Constant,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
    /// `full` or the maximum distance between paired positions.
    #[arg(long, default_value = "full")]
    pub window: String,
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 0.025)]
    pub alpha: f64,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.75)]
    pub noise_exponent: f64,
    #[arg(long, value_enum, default_value_t = ScheduleChoice::Linear)]
    pub schedule: ScheduleChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    Average,
    Attention,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PropArgs {
    #[arg(long, default_value_t = 0.1)]
    pub rate: f64,
    #[arg(long, default_value_t = 1)]
    pub iterations: usize,
    #[arg(long, value_enum, default_value_t = MethodChoice::Average)]
    pub method: MethodChoice,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MlpArgs {
    /// Two hidden layer widths, comma separated.
    #[arg(long, default_value = "256,256")]
    pub hidden: String,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    #[arg(long, default_value_t = 100)]
    pub mlp_epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 1024)]
    pub batch: usize,
    /// Independent evaluation runs.
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    /// Corpus output; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct EmbedArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    #[arg(long, value_name = "PATH")]
    pub output: PathBuf,
    /// Write the little-endian binary format instead of text.
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct PropagateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_name = "PATH")]
    pub embeddings: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub prop: PropArgs,
    #[arg(long, value_name = "PATH")]
    pub output: PathBuf,
    /// Read and write the binary embedding format.
    #[arg(long)]
    pub binary: bool,
    #[arg(long, env = "NEIGHBOR2VEC_THREADS", default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct EvalNodeArgs {
    #[arg(long, value_name = "PATH")]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub binary: bool,
    /// `node_id<TAB>class_id` lines.
    #[arg(long, value_name = "PATH")]
    pub labels: PathBuf,
    /// Training node ids, one per line.
    #[arg(long, value_name = "PATH")]
    pub train: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub valid: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub test: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub node_map: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub mlp: MlpArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    /// JSON report destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct EvalLinkArgs {
    /// Training graph; its edges are the positive training pairs.
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_name = "PATH")]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub binary: bool,
    /// Test positives, `u v` per line.
    #[arg(long, value_name = "PATH")]
    pub test_pos: PathBuf,
    /// Test negatives shared by all positives, `u v` per line.
    #[arg(long, value_name = "PATH")]
    pub test_neg: Option<PathBuf>,
    /// Per-positive negative tails, one whitespace-separated list per line.
    #[arg(long, value_name = "PATH")]
    pub test_candidates: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub valid_pos: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub valid_neg: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub valid_candidates: Option<PathBuf>,
    /// `roc-auc`, `mrr` or `hits@K`.
    #[arg(long, default_value = "roc-auc")]
    pub metric: String,
    /// `hadamard`, `average`, `abs-diff` or `squared-diff`.
    #[arg(long, default_value = "hadamard")]
    pub combiner: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub mlp: MlpArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskChoice {
    Node,
    Link,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    NSample,
    Num,
    Dim,
    Rate,
    Iterations,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_enum)]
    pub task: TaskChoice,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Comma-separated values for the swept parameter.
    #[arg(long)]
    pub values: String,
    /// Node task labels; splits come from the files below or a stratified split.
    #[arg(long, value_name = "PATH")]
    pub labels: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub train: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub valid: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub test: Option<PathBuf>,
    /// Training fraction of the stratified split used without split files.
    #[arg(long, default_value_t = 0.5)]
    pub train_frac: f64,
    #[arg(long, default_value_t = 0.0)]
    pub valid_frac: f64,
    /// Link task: fraction of edges held out as test positives.
    #[arg(long, default_value_t = 0.1)]
    pub holdout: f64,
    #[arg(long, default_value = "roc-auc")]
    pub metric: String,
    #[arg(long, default_value = "hadamard")]
    pub combiner: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub train_cfg: TrainArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub prop: PropArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub mlp: MlpArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    /// CSV destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct BenchArgs {
    /// Benchmark this edge list; otherwise synthetic graphs are generated.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub directed: bool,
    #[arg(long)]
    pub weighted: bool,
    /// Comma-separated node counts of preferential-attachment graphs.
    #[arg(long, default_value = "100000")]
    pub synthetic_nodes: String,
    /// Average degree of the synthetic graphs (even).
    #[arg(long, default_value_t = 10)]
    pub degree: usize,
    /// Comma-separated thread counts.
    #[arg(long, default_value = "1")]
    pub thread_counts: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}
