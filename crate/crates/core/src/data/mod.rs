//! Dataset manifest, annotation records, vote aggregation and split construction.

mod artifact;
mod manifest;
mod split;
mod votes;

pub use artifact::{ConceptActivation, ConceptEntry, SaliencyMap, SaliencyMeta};
pub use manifest::{
    load_manifest, load_rgb, validate_manifest, AnnotationRecord, BoundingBox, DatasetManifest, ExplanationEntry,
    ExplanationKind, ImageEntry, ManifestFile, PairKey, Question, RecordKey, ValidationReport, Violation,
    ViolationKind, ANNOTATIONS_FILE, MANIFEST_FILE, MAX_IMAGE_ID, MAX_XAI_ID,
};
pub use split::{SplitAssignment, SplitConfig, SplitPart};
pub use votes::{aggregate_votes, check_votes, Aggregation, LIKERT_MAX, LIKERT_MIN, VOTES_PER_ITEM};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("expected 5 votes, got {0}")]
    VoteCount(usize),
    #[error("vote {0} outside the 1..=5 Likert range")]
    VoteRange(u8),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite value in artifact")]
    NonFinite,
    #[error("missing file: {0}")]
    Missing(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("malformed annotation on line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
