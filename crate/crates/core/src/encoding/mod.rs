//! Explanation artifacts to encoder inputs: heatmap and blur renderings,
//! concept sentences, weighted concept embeddings, and scorer input assembly.

mod colormap;
mod concept;
mod render;

pub use colormap::{colormap, colormap_index, Rgb};
pub use concept::{assemble_input, concept_sentence, weighted_concept_embedding, ConceptSentence, EmbeddedSample};
pub use render::{encode_png, render, render_blur, render_heatmap, RenderedExplanation, Rendering, DEFAULT_BLEND};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EncodingError {
    #[error("saliency is {saliency:?} but image is {image:?}")]
    DimMismatch { image: (u32, u32), saliency: (usize, usize) },
    #[error("saliency values must lie in [0, 1]; normalize first")]
    OutOfRange,
    #[error("blend factor must lie in [0, 1], got {0}")]
    Blend(f64),
    #[error("concept table is empty")]
    EmptyConcepts,
    #[error("n_top must be at least 1")]
    NTop,
    #[error("activation vector has zero norm")]
    ZeroNorm,
    #[error("expected {expected} concept vectors of equal dimension, got {got}")]
    ConceptVectors { expected: usize, got: usize },
    #[error("label {label} outside vocabulary of {classes}")]
    Label { label: usize, classes: usize },
    #[error("image encoding failed: {0}")]
    Image(String),
}
