//! Seeded synthetic datasets with the on-disk layout of a real one: images
//! with one or more coloured objects, saliency maps centred near the first
//! object, concept tables, and five votes per question drawn around a clamped
//! linear function of each explanation's stub embedding.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::bridge::{BridgeClient, BridgeSpec, DEFAULT_TIMEOUT};
use crate::data::{
    AnnotationRecord, BoundingBox, ConceptActivation, DataError, DatasetManifest, ExplanationEntry, ExplanationKind,
    ImageEntry, ManifestFile, PairKey, Question, SaliencyMap,
};
use crate::pipeline::{embed_explanations, EmbedOptions, PipelineError};
use crate::rng::SeededRng;
use crate::scorer::{SCORE_MAX, SCORE_MIN};

const CONCEPTS: [&str; 12] =
    ["beak", "feathers", "fur", "paw", "stripes", "tail", "wheel", "window", "wing", "whiskers", "water", "grass"];
const LABELS: [&str; 3] = ["bird", "cat", "vehicle"];
const BACKBONES: [&str; 2] = ["resnet50", "vit_b"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_images: usize,
    /// Saliency explainers; their ids come first, counting from 1.
    pub n_saliency: usize,
    /// Concept explainers, with ids after the saliency ones.
    pub n_concept: usize,
    pub image_size: u32,
    pub seed: u64,
    /// Standard deviation of each annotator's vote around the target.
    pub vote_noise: f64,
    pub questions: Vec<Question>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_images: 60,
            n_saliency: 8,
            n_concept: 2,
            image_size: 32,
            seed: 0,
            vote_noise: 0.4,
            questions: Question::ALL.to_vec(),
        }
    }
}

/// `clamp(3 + 1.2 z + noise, 1, 5)` where `z` standardizes `w . e` over the
/// given embeddings and `w` is drawn from `seed`.
pub fn linear_targets(embeddings: &[Vec<f64>], seed: u64, noise: f64) -> Vec<f64> {
    let Some(dim) = embeddings.first().map(Vec::len) else { return Vec::new() };
    let mut rng = SeededRng::stream(seed, 0x7A);
    let w: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
    let raw: Vec<f64> = embeddings.iter().map(|e| e.iter().zip(&w).map(|(a, b)| a * b).sum()).collect();
    let (mean, std) = crate::scalar::mean_std(&raw).expect("non-empty");
    let std = if std > 0.0 { std } else { 1.0 };
    raw.iter()
        .map(|r| (3.0 + 1.2 * (r - mean) / std + noise * rng.normal()).clamp(SCORE_MIN, SCORE_MAX))
        .collect()
}

fn draw_image(rng: &mut SeededRng, size: u32) -> (RgbImage, BoundingBox) {
    let bg = [rng.below(80) as u8, rng.below(80) as u8, rng.below(80) as u8];
    let mut img = RgbImage::from_pixel(size, size, image::Rgb(bg));
    let mut first = None;
    for _ in 0..1 + rng.below(3) {
        let w = 4 + rng.below(size as usize / 2) as u32;
        let h = 4 + rng.below(size as usize / 2) as u32;
        let x0 = rng.below((size - w) as usize + 1) as u32;
        let y0 = rng.below((size - h) as usize + 1) as u32;
        let colour = image::Rgb([rng.below(256) as u8, rng.below(256) as u8, rng.below(256) as u8]);
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                img.put_pixel(x, y, colour);
            }
        }
        first.get_or_insert(BoundingBox {
            x0: x0 as usize,
            y0: y0 as usize,
            x1: (x0 + w) as usize,
            y1: (y0 + h) as usize,
        });
    }
    (img, first.expect("at least one object"))
}

/// A Gaussian bump near the box centre; explainer `k` has spread and offset
/// growing with `k`, so later explainers are blurrier and less accurate.
fn draw_saliency(rng: &mut SeededRng, size: u32, bbox: &BoundingBox, k: usize) -> SaliencyMap<f64> {
    let s = size as f64;
    let jitter = 0.05 * s * k as f64;
    let cx = (bbox.x0 + bbox.x1) as f64 / 2.0 + jitter * rng.normal();
    let cy = (bbox.y0 + bbox.y1) as f64 / 2.0 + jitter * rng.normal();
    let spread = s * (0.08 + 0.04 * k as f64);
    let values = (0..size * size)
        .map(|i| {
            let (x, y) = ((i % size) as f64 + 0.5, (i / size) as f64 + 0.5);
            let d2 = (x - cx).powi(2) + (y - cy).powi(2);
            ((-d2 / (2.0 * spread * spread)).exp() + 0.05 * rng.unit()).min(1.0)
        })
        .collect();
    SaliencyMap::new(size as usize, size as usize, values).expect("square map")
}

fn check(config: &SynthConfig) -> Result<(), DataError> {
    let bad = |m: &str| Err(DataError::Config(m.into()));
    if config.n_images == 0 || config.n_saliency + config.n_concept == 0 {
        return bad("synthetic dataset needs images and explainers");
    }
    if config.image_size < 8 {
        return bad("synthetic images must be at least 8 pixels wide");
    }
    if config.n_images as u32 > crate::data::MAX_IMAGE_ID || (config.n_saliency + config.n_concept) as u32 > crate::data::MAX_XAI_ID {
        return bad("synthetic dataset exceeds the id ranges");
    }
    if config.questions.is_empty() {
        return bad("no questions requested");
    }
    Ok(())
}

/// Writes a dataset under `root` and returns its manifest. Votes are derived
/// from stub-bridge embeddings of the written artifacts using `options`.
pub fn synth_dataset(root: &Path, config: &SynthConfig, options: &EmbedOptions) -> Result<DatasetManifest, PipelineError> {
    check(config)?;
    let mut rng = SeededRng::new(config.seed);
    for dir in ["images", "saliency", "concepts"] {
        fs::create_dir_all(root.join(dir)).map_err(DataError::from)?;
    }
    let n_xai = config.n_saliency + config.n_concept;
    let mut images = Vec::with_capacity(config.n_images);
    let mut explanations = Vec::new();
    let mut labels = BTreeMap::new();
    let mut proto = DatasetManifest {
        root: root.to_path_buf(),
        file: ManifestFile { labels: LABELS.iter().map(|s| s.to_string()).collect(), images: vec![], explanations: vec![], annotations: crate::data::ANNOTATIONS_FILE.to_string() },
        records: vec![],
    };
    for image_id in 1..=config.n_images as u32 {
        let (img, bbox) = draw_image(&mut rng, config.image_size);
        img.save(proto.image_path(image_id)).map_err(|e| DataError::Parse(e.to_string()))?;
        images.push(ImageEntry { image_id, bbox: Some(bbox) });
        labels.insert(image_id, rng.below(LABELS.len()));
        for k in 0..n_xai {
            let pair = PairKey { image_id, xai_id: k as u32 + 1 };
            let kind = if k < config.n_saliency { ExplanationKind::Saliency } else { ExplanationKind::Concept };
            match kind {
                ExplanationKind::Saliency => {
                    draw_saliency(&mut rng, config.image_size, &bbox, k).write(&proto.saliency_path(pair))?;
                }
                ExplanationKind::Concept => {
                    let table = ConceptActivation::new(CONCEPTS.iter().map(|c| (*c, rng.unit())))?;
                    table.write(&proto.concept_path(pair))?;
                }
            }
            explanations.push(ExplanationEntry {
                image_id,
                xai_id: pair.xai_id,
                kind,
                explainer_name: format!("{}_{k:02}", if kind == ExplanationKind::Saliency { "saliency" } else { "concept" }),
                backbone: BACKBONES[k % BACKBONES.len()].to_string(),
                family: None,
            });
        }
    }
    proto.file.images = images;
    proto.file.explanations = explanations;

    let client = BridgeClient::connect(&BridgeSpec::Stub, DEFAULT_TIMEOUT)?;
    let pairs: Vec<PairKey> = proto.file.explanations.iter().map(ExplanationEntry::pair).collect();
    let embeddings = embed_explanations(&proto, &pairs, &client, options)?;
    let ordered: Vec<Vec<f64>> = pairs.iter().map(|p| embeddings[p].clone()).collect();

    let mut records = Vec::new();
    for (qi, &question) in config.questions.iter().enumerate() {
        // Image and text embeddings occupy different regions, so each kind is
        // standardized on its own.
        let mut targets = vec![0.0; pairs.len()];
        for kind in [ExplanationKind::Saliency, ExplanationKind::Concept] {
            let idx: Vec<usize> =
                (0..pairs.len()).filter(|&i| proto.file.explanations[i].kind == kind).collect();
            let group: Vec<Vec<f64>> = idx.iter().map(|&i| ordered[i].clone()).collect();
            for (i, t) in idx.into_iter().zip(linear_targets(&group, config.seed ^ (qi as u64 + 1), 0.0)) {
                targets[i] = t;
            }
        }
        let mut votes_rng = SeededRng::stream(config.seed, 0x100 + qi as u64);
        for (pair, target) in pairs.iter().zip(&targets) {
            let votes = (0..5)
                .map(|_| (target + config.vote_noise * votes_rng.normal()).round().clamp(SCORE_MIN, SCORE_MAX) as u8)
                .collect();
            let entry = proto.explanation(*pair).expect("just added");
            records.push(AnnotationRecord {
                image_id: pair.image_id,
                xai_id: pair.xai_id,
                question,
                votes,
                predicted_label: labels[&pair.image_id],
                dataset_name: "synthetic".into(),
                backbone: entry.backbone.clone(),
                explainer_name: entry.explainer_name.clone(),
            });
        }
    }
    proto.records = records;
    proto.write()?;
    Ok(proto)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets_are_clamped_and_spread() {
        let mut rng = SeededRng::new(1);
        let e: Vec<Vec<f64>> = (0..200).map(|_| (0..4).map(|_| rng.normal()).collect()).collect();
        let t = linear_targets(&e, 3, 0.1);
        assert!(t.iter().all(|v| (1.0..=5.0).contains(v)));
        let (m, s) = crate::scalar::mean_std(&t).unwrap();
        assert!((m - 3.0).abs() < 0.3 && s > 0.8, "{m} {s}");
        assert_eq!(t, linear_targets(&e, 3, 0.1));
    }

    #[test]
    fn dataset_validates_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let config = SynthConfig { n_images: 6, n_saliency: 3, n_concept: 1, questions: vec![Question::Q1, Question::Q3], ..Default::default() };
        let m = synth_dataset(dir.path(), &config, &EmbedOptions::default()).unwrap();
        assert!(m.validate().is_clean(), "{:?}", m.validate());
        assert_eq!(m.records.len(), 6 * 4 * 2);
        let back = crate::data::load_manifest(dir.path()).unwrap();
        assert_eq!(back.file, m.file);
        assert_eq!(back.records, m.records);
    }
}
