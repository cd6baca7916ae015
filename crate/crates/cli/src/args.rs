use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pmean::{
    OnUndefined, OovPolicy, PoolingPolicies, SingularityPolicy, TokenizerConfig, TrainProtocol,
};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "pmean",
    version,
    about = "Power-mean sentence embeddings: pooling, projection training and evaluation"
)]
pub struct Cli {
    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Seed for every random choice of the run.
    #[arg(long, global = true, env = "PMEAN_SEED", default_value_t = 0)]
    pub seed: u64,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed one sentence per line of a text file.
    Embed(EmbedArgs),
    /// Train a bilingual projection on a parallel corpus.
    TrainProjection(TrainProjectionArgs),
    /// Map an embedding file into the shared space of a trained projection.
    Project(ProjectArgs),
    /// Evaluate pooled configs on monolingual tasks.
    Eval(EvalArgs),
    /// Train on source-language tasks and test on their target-language versions.
    EvalTransfer(EvalTransferArgs),
    /// Evaluate several p-value sets over the same spaces.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OovArg {
    Skip,
    ZeroVector,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PoolingArgs {
    /// Fail on undefined power means instead of writing 0.
    #[arg(long)]
    pub strict: bool,

    /// Treatment of out-of-vocabulary tokens.
    #[arg(long, value_enum, default_value_t = OovArg::Skip)]
    pub oov: OovArg,

    /// Keep token case.
    #[arg(long)]
    pub no_lowercase: bool,
}

impl PoolingArgs {
    pub fn policies(&self) -> PoolingPolicies {
        PoolingPolicies {
            oov: match self.oov {
                OovArg::Skip => OovPolicy::Skip,
                OovArg::ZeroVector => OovPolicy::ZeroVector,
            },
            singularity: SingularityPolicy {
                on_undefined: if self.strict {
                    OnUndefined::Error
                } else {
                    OnUndefined::NanToZero
                },
                ..SingularityPolicy::default()
            },
        }
    }

    pub fn tokenizer(&self) -> TokenizerConfig {
        TokenizerConfig {
            lowercase: !self.no_lowercase,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProtocolArgs {
    /// Random subsample runs.
    #[arg(long, default_value_t = 50)]
    pub runs: usize,

    /// Classifier training epochs.
    #[arg(long = "epochs", default_value_t = 30)]
    pub max_epochs: usize,

    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,

    /// Comma-separated Adam step sizes to choose from.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001,0.0001")]
    pub lr_grid: Vec<f64>,

    #[arg(long, default_value_t = 0.1)]
    pub val_fraction: f64,

    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,

    #[arg(long, default_value_t = 0.0)]
    pub l2: f64,

    /// Standardize features with statistics of each run's training rows.
    #[arg(long)]
    pub znorm: bool,
}

impl ProtocolArgs {
    pub fn protocol(&self, seed: u64) -> TrainProtocol {
        TrainProtocol {
            lr_grid: self.lr_grid.clone(),
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            runs: self.runs,
            val_fraction: self.val_fraction,
            test_fraction: self.test_fraction,
            l2: self.l2,
            seed,
            ..TrainProtocol::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmbedArgs {
    /// Pooled-config file.
    #[arg(long)]
    pub config: PathBuf,

    /// Sentences, one per line.
    #[arg(long)]
    pub input: PathBuf,

    /// Tab-separated vectors, one line per sentence.
    #[arg(long)]
    pub output: PathBuf,

    /// Standardize columns with statistics of the whole input.
    #[arg(long)]
    pub znorm: bool,

    #[command(flatten)]
    pub pooling: PoolingArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainProjectionArgs {
    /// Sentence pairs, `source TAB target` per line.
    #[arg(long)]
    pub corpus: PathBuf,

    #[arg(long)]
    pub source_embeddings: PathBuf,

    #[arg(long)]
    pub target_embeddings: PathBuf,

    /// Model file (JSON).
    #[arg(long)]
    pub output: PathBuf,

    /// Per-epoch loss CSV; defaults to the model path with a `.loss.csv` extension.
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,

    #[arg(long, default_value_t = 0.5)]
    pub margin: f64,

    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,

    #[arg(long, default_value_t = 100)]
    pub epochs: usize,

    #[arg(long, default_value_t = 300)]
    pub shared_dim: usize,

    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,

    /// Adam step size.
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,

    /// Keep token case.
    #[arg(long)]
    pub no_lowercase: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SideArg {
    Source,
    Target,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProjectArgs {
    #[arg(long)]
    pub model: PathBuf,

    #[arg(long)]
    pub embeddings: PathBuf,

    #[arg(long, value_enum)]
    pub side: SideArg,

    /// Projected embeddings in text format.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// Pooled-config file; repeat for one report row per config.
    #[arg(long, required = true)]
    pub config: Vec<PathBuf>,

    /// Task file; repeat for several tasks.
    #[arg(long, required = true)]
    pub task: Vec<PathBuf>,

    /// Directory for report.json, report.md and manifest.json.
    #[arg(long)]
    pub out_dir: PathBuf,

    #[command(flatten)]
    pub pooling: PoolingArgs,

    #[command(flatten)]
    pub protocol: ProtocolArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalTransferArgs {
    /// Config embedding the source-language side; repeat for several rows.
    #[arg(long, required = true)]
    pub source_config: Vec<PathBuf>,

    /// Config embedding the target-language side, paired with each
    /// `--source-config` in order. Defaults to the source configs.
    #[arg(long)]
    pub target_config: Vec<PathBuf>,

    /// Source-language task; repeat for several tasks.
    #[arg(long, required = true)]
    pub train: Vec<PathBuf>,

    /// Target-language task, paired with each `--train` in order.
    #[arg(long, required = true)]
    pub test: Vec<PathBuf>,

    #[arg(long)]
    pub out_dir: PathBuf,

    #[command(flatten)]
    pub pooling: PoolingArgs,

    #[command(flatten)]
    pub protocol: ProtocolArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// Config listing the spaces; its p-values are replaced by each `--p-set`.
    #[arg(long)]
    pub config: PathBuf,

    /// Spaces for the target side of transfer tasks; defaults to `--config`.
    #[arg(long)]
    pub target_config: Option<PathBuf>,

    /// Comma-separated p-values, e.g. `1,-inf,inf`; one report row each.
    #[arg(long = "p-set", required = true, allow_hyphen_values = true)]
    pub p_sets: Vec<String>,

    /// Monolingual task file.
    #[arg(long)]
    pub task: Vec<PathBuf>,

    /// Source-language side of a transfer task.
    #[arg(long)]
    pub train: Vec<PathBuf>,

    /// Target-language side of a transfer task, paired with `--train`.
    #[arg(long)]
    pub test: Vec<PathBuf>,

    #[arg(long)]
    pub out_dir: PathBuf,

    #[command(flatten)]
    pub pooling: PoolingArgs,

    #[command(flatten)]
    pub protocol: ProtocolArgs,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn p_sets_accept_negative_values() {
        let cli = Cli::try_parse_from([
            "pmean",
            "sweep",
            "--config",
            "c.cfg",
            "--p-set",
            "-inf,1,inf",
            "--p-set",
            "1",
            "--task",
            "t.tsv",
            "--out-dir",
            "o",
        ])
        .unwrap();
        let Command::Sweep(args) = cli.command else {
            panic!()
        };
        assert_eq!(args.p_sets, ["-inf,1,inf", "1"]);
    }

    #[test]
    fn projection_defaults() {
        let cli = Cli::try_parse_from([
            "pmean",
            "train-projection",
            "--corpus",
            "c",
            "--source-embeddings",
            "s",
            "--target-embeddings",
            "t",
            "--output",
            "m",
        ])
        .unwrap();
        let Command::TrainProjection(args) = cli.command else {
            panic!()
        };
        assert_eq!((args.margin, args.dropout, args.epochs), (0.5, 0.5, 100));
    }
}
