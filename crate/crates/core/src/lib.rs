//! Learned perceptual scoring of XAI explanations, with the data handling,
//! metrics, encoders and applications around it.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix the precision used by the command-line pipeline.

pub mod apps;
pub mod bridge;
pub mod data;
pub mod encoding;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod scorer;
pub mod synth;
pub mod xai;

pub use image::RgbImage;

/// Scoring network at checkpoint precision.
pub type Scorer = scorer::Mlp<f32>;
/// Scoring network in double precision, used for gradient checks.
pub type Scorer64 = scorer::Mlp<f64>;
pub type Saliency = data::SaliencyMap<f32>;
pub type Saliency64 = data::SaliencyMap<f64>;
pub type Sample = encoding::EmbeddedSample<f32>;
pub type ScorerCheckpoint = scorer::Checkpoint<f32>;
