//! The scoring network: a rectified MLP trained with a composite
//! similarity + squared-error + pairwise-ranking loss under AdamW.

mod adam;
mod checkpoint;
mod config;
mod loss;
mod mlp;
mod train;

pub use adam::AdamW;
pub use checkpoint::{Checkpoint, CheckpointHeader, CHECKPOINT_MAGIC};
pub use config::ScorerConfig;
pub use loss::{
    composite_with_grad, loss_composite, loss_mse, loss_rank, loss_similarity, LossTerms, LossWeights,
};
pub use mlp::{backward, LayerSpan, Mlp, SCORE_MAX, SCORE_MIN};
pub use train::{evaluate, train, EpochLoss, TestMetrics, TrainReport, TrainingData};

use crate::metrics::MetricError;

#[derive(Debug, thiserror::Error)]
pub enum ScorerError {
    #[error("invalid scorer configuration: {0}")]
    Config(String),
    #[error("input has {got} features, network expects {expected}")]
    Dim { expected: usize, got: usize },
    #[error("length mismatch between truth ({0}) and predictions ({1})")]
    LengthMismatch(usize, usize),
    #[error("cosine similarity undefined for a zero-norm score vector")]
    ZeroNorm,
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite value in forward pass")]
    NonFiniteForward,
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("{0} split is empty")]
    EmptySplit(&'static str),
    #[error("checkpoint truncated: expected {expected} bytes of weights, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
