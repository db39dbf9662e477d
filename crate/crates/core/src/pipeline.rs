//! Glue from a dataset manifest to scorer inputs: explanation encoding,
//! bridge embedding and per-question sample assembly.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bridge::{BridgeClient, BridgeError};
use crate::data::{aggregate_votes, Aggregation, DataError, DatasetManifest, ExplanationKind, PairKey, Question};
use crate::encoding::{concept_sentence, render, EmbeddedSample, EncodingError, Rendering, DEFAULT_BLEND};
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
    #[error("no embedding for pair {0:?}")]
    MissingEmbedding(PairKey),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedOptions {
    pub rendering: Rendering,
    pub blend: f64,
    pub n_top: usize,
    pub template: String,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        Self { rendering: Rendering::HeatmapOverlay, blend: DEFAULT_BLEND, n_top: 15, template: String::new() }
    }
}

/// What gets sent to the encoder for one explanation.
#[derive(Debug, Clone, PartialEq)]
pub enum EncoderInput {
    /// PNG of the saliency map rendered over its image.
    Image(Vec<u8>),
    /// Sentence built from the top concepts.
    Text(String),
}

/// Saliency maps are min-max normalized before rendering.
pub fn encoder_input(manifest: &DatasetManifest, pair: PairKey, options: &EmbedOptions) -> Result<EncoderInput, PipelineError> {
    let entry = manifest
        .explanation(pair)
        .ok_or_else(|| DataError::Missing(format!("explanation ({}, {})", pair.image_id, pair.xai_id)))?;
    match entry.kind {
        ExplanationKind::Saliency => {
            let image = manifest.load_image(pair.image_id)?;
            let saliency = manifest.load_saliency::<f64>(pair)?.normalized();
            Ok(EncoderInput::Image(render(&image, &saliency, options.rendering, options.blend)?.to_png()?))
        }
        ExplanationKind::Concept => {
            let table = manifest.load_concepts(pair)?;
            Ok(EncoderInput::Text(concept_sentence(&table, options.n_top, &options.template)?.text))
        }
    }
}

/// Embeds each pair's explanation, rendering in parallel and pipelining the
/// bridge requests.
pub fn embed_explanations(
    manifest: &DatasetManifest,
    pairs: &[PairKey],
    client: &BridgeClient,
    options: &EmbedOptions,
) -> Result<BTreeMap<PairKey, Vec<f64>>, PipelineError> {
    let inputs: Vec<EncoderInput> =
        pairs.par_iter().map(|p| encoder_input(manifest, *p, options)).collect::<Result<_, _>>()?;
    let mut images = (Vec::new(), Vec::new());
    let mut texts = (Vec::new(), Vec::new());
    for (pair, input) in pairs.iter().zip(inputs) {
        match input {
            EncoderInput::Image(png) => {
                images.0.push(*pair);
                images.1.push(png);
            }
            EncoderInput::Text(t) => {
                texts.0.push(*pair);
                texts.1.push(t);
            }
        }
    }
    let mut out = BTreeMap::new();
    out.extend(images.0.into_iter().zip(client.embed_images(&images.1)?));
    out.extend(texts.0.into_iter().zip(client.embed_texts(&texts.1)?));
    Ok(out)
}

/// One sample per annotation record of `question`, in record-key order.
pub fn build_samples<T: Scalar>(
    manifest: &DatasetManifest,
    embeddings: &BTreeMap<PairKey, Vec<f64>>,
    question: Question,
    aggregation: Aggregation,
) -> Result<Vec<EmbeddedSample<T>>, PipelineError> {
    let mut records: Vec<_> = manifest.records_for(question).collect();
    records.sort_by_key(|r| r.key());
    let num_labels = manifest.num_labels();
    records
        .into_iter()
        .map(|r| {
            let embedding = embeddings.get(&r.pair()).ok_or(PipelineError::MissingEmbedding(r.pair()))?;
            Ok(EmbeddedSample {
                pair: r.pair(),
                question,
                embedding: embedding.iter().map(|v| T::of(*v)).collect(),
                label: r.predicted_label,
                num_labels,
                target: aggregate_votes(&r.votes, aggregation)?,
            })
        })
        .collect()
}
