//! Computational explanation-quality metrics: faithfulness, robustness,
//! complexity and simple saliency statistics.

mod batch;
mod complexity;
mod correlate;
mod faithfulness;
mod oracle;
mod perturb;
mod robustness;

pub use batch::{aggregate_by_explainer, run_batch, BatchConfig, ExplainerSummary, XaiRecord};
pub use complexity::{saliency_stats, sparseness_gini, SaliencyStats};
pub use correlate::{correlate_with_human, CorrelationReport};
pub use faithfulness::{
    faithfulness, necessity, relevance_order, sufficiency, FaithfulnessCurve, FaithfulnessReport, ThresholdSet,
};
pub use oracle::{checked_proba, predicted_class, ConstantOracle, ModelOracle, SinglePixelOracle};
pub use perturb::{PerturbationKind, PerturbationStrategy};
pub use robustness::{max_sensitivity, DEFAULT_SENSITIVITY_SAMPLES};

use crate::data::DataError;
use crate::metrics::MetricError;

#[derive(Debug, thiserror::Error)]
pub enum XaiError {
    #[error("saliency is {saliency:?} but image is {image:?}")]
    DimMismatch { saliency: (usize, usize), image: (usize, usize) },
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("oracle backend failed: {0}")]
    Backend(#[source] Box<dyn std::error::Error + Send + Sync>),
    #[error("oracle returned an invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("attribution has no mass")]
    ZeroMass,
    #[error("non-finite attribution value")]
    NonFinite,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}
