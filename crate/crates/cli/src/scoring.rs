//! Embedding lookup and scorer inference shared by `select` and `report`.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use pasta_core::data::{DatasetManifest, ExplanationEntry, PairKey};
use pasta_core::encoding::assemble_input;
use pasta_core::pipeline::embed_explanations;
use pasta_core::ScorerCheckpoint;
use rayon::prelude::*;

use crate::args::{EmbedArgs, Global};
use crate::embeddings;
use crate::exit::invalid;
use crate::run::{BridgeInfo, Recorder};

/// Reads `path` when given, otherwise embeds every explanation of the manifest.
pub fn obtain_embeddings(
    global: &Global,
    manifest: &DatasetManifest,
    path: Option<&Path>,
    embed: &EmbedArgs,
    rec: &mut Recorder,
) -> Result<BTreeMap<PairKey, Vec<f64>>> {
    if let Some(path) = path {
        rec.input(path)?;
        return embeddings::read(path);
    }
    let client = global.connect()?;
    rec.bridge(BridgeInfo::of(&global.bridge, &client));
    let pairs: Vec<PairKey> = manifest.file.explanations.iter().map(ExplanationEntry::pair).collect();
    Ok(embed_explanations(manifest, &pairs, &client, &embed.options())?)
}

pub fn load_checkpoint(path: &Path, rec: &mut Recorder) -> Result<ScorerCheckpoint> {
    rec.input(path)?;
    ScorerCheckpoint::load(path).with_context(|| format!("loading {}", path.display()))
}

/// Classifier label per image, taken from its annotation records.
pub fn predicted_labels(manifest: &DatasetManifest) -> BTreeMap<u32, usize> {
    let mut labels = BTreeMap::new();
    for r in &manifest.records {
        labels.entry(r.image_id).or_insert(r.predicted_label);
    }
    labels
}

/// Scorer output for every explanation in the manifest.
pub fn score_explanations(
    manifest: &DatasetManifest,
    embeddings: &BTreeMap<PairKey, Vec<f64>>,
    checkpoint: &ScorerCheckpoint,
) -> Result<BTreeMap<PairKey, f64>> {
    let labels = predicted_labels(manifest);
    let header = &checkpoint.header;
    if header.num_labels != manifest.num_labels() {
        return Err(invalid(format!(
            "checkpoint expects {} labels, dataset has {}",
            header.num_labels,
            manifest.num_labels()
        )));
    }
    manifest
        .file
        .explanations
        .par_iter()
        .map(|entry| {
            let pair = entry.pair();
            let label = *labels
                .get(&pair.image_id)
                .ok_or_else(|| invalid(format!("image {} has no annotation giving its predicted label", pair.image_id)))?;
            let e = embeddings
                .get(&pair)
                .ok_or_else(|| invalid(format!("no embedding for ({}, {})", pair.image_id, pair.xai_id)))?;
            if e.len() != header.embed_dim {
                return Err(invalid(format!("embedding has {} values, checkpoint expects {}", e.len(), header.embed_dim)));
            }
            let e32: Vec<f32> = e.iter().map(|v| *v as f32).collect();
            let x = assemble_input(&e32, label, header.num_labels)?;
            Ok((pair, f64::from(checkpoint.weights.predict(&x)?)))
        })
        .collect()
}
