//! Uses of a trained scorer: per-image explainer selection, backbone
//! comparison, and score-steered RISE saliency.

mod report;
mod rise;
mod select;

pub use report::{backbone_report, BackboneReport, BackboneRow, ScoredSample};
pub use rise::{
    rise_pasta, rise_raw, rise_saliency, steer_weight, PastaScorer, RiseConfig, RiseMask, RisePastaResult, SteerConfig,
};
pub use select::{mixture_select, selection_report, Candidate, CandidateSet, Selection, SelectionReport};

use crate::encoding::EncodingError;
use crate::xai::XaiError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("scorer failure: {0}")]
    Scorer(String),
    #[error("scorer backend failed: {0}")]
    Backend(#[source] Box<dyn std::error::Error + Send + Sync>),
    #[error(transparent)]
    Xai(#[from] XaiError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}
