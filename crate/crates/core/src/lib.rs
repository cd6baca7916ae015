//! Concatenated power-mean sentence embeddings.
//!
//! A sentence is represented by looking its words up in one or more word
//! embedding spaces and concatenating, per space, several power means of the
//! word vectors (minimum, arithmetic mean, maximum, cubic mean, ...). The
//! crate also provides
//!
//! - a trainer for bilingual `tanh` projections that map two languages'
//!   word vectors into one shared space ([`projection`]),
//! - logistic-regression probing with random subsample validation
//!   ([`classifier`]), and
//! - a harness for monolingual and cross-lingual transfer evaluation with
//!   JSON and markdown reports ([`eval`]).
//!
//! ```
//! use std::sync::Arc;
//! use pmean::{read_text_embeddings, Embedder, PValue, PooledConfig};
//!
//! let text = "good 0.5 1.0\nfilm -0.5 2.0\n";
//! let (space, _) = read_text_embeddings(text.as_bytes(), "toy", None)?;
//! let config = PooledConfig::uniform(
//!     &[Arc::new(space)],
//!     &[PValue::MIN, PValue::MEAN, PValue::MAX],
//! )?;
//! let embedder = Embedder::new(config);
//! let (x, _) = embedder.embed_corpus(&["Good film"])?;
//! assert_eq!(x.row(0).to_vec(), vec![-0.5, 1.0, 0.0, 1.5, 0.5, 2.0]);
//! # Ok::<(), pmean::Error>(())
//! ```
//!
//! ## Feature flags
//!
//! - `parallel` (default): sentence embedding, subsample runs, grid cells
//!   and report cells run on the rayon thread pool. Results do not depend on
//!   the feature or on the number of threads.

pub mod classifier;
mod error;
pub mod eval;
pub mod gradcheck;
pub mod optim;
pub mod par;
pub mod pmean;
pub mod pooling;
pub mod projection;
pub mod store;
pub mod synth;
pub mod znorm;

pub use classifier::{EvalScore, MetricKind, SoftmaxModel, TrainProtocol};
pub use error::{Error, Result};
pub use eval::{EvalReport, EvalTask, ReportFormat, TaskDataset, TransferPair};
pub use par::Parallelism;
pub use pmean::{power_mean, OnUndefined, PValue, PoolStats, SingularityPolicy};
pub use pooling::{ConfigSpec, Embedder, PoolPart, PooledConfig, PoolingPolicies};
pub use projection::{ParallelCorpus, ProjectionModel, ProjectionTrainConfig, Side};
pub use store::{
    load_text_embeddings, lookup_sequence, read_text_embeddings, EmbeddingSpace, OovPolicy,
    TokenizerConfig,
};
pub use znorm::ZNorm;
