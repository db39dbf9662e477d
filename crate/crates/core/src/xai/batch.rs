use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DatasetManifest, ExplanationKind, PairKey};

use super::complexity::{saliency_stats, sparseness_gini, SaliencyStats};
use super::faithfulness::{FaithfulnessReport, ThresholdSet};
use super::oracle::ModelOracle;
use super::perturb::PerturbationStrategy;
use super::XaiError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub strategies: Vec<PerturbationStrategy>,
    pub thresholds: ThresholdSet,
}

/// Metrics for one saliency explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XaiRecord {
    pub image_id: u32,
    pub xai_id: u32,
    pub explainer: String,
    pub backbone: String,
    /// Keyed by perturbation kind name.
    pub faithfulness: BTreeMap<String, FaithfulnessReport>,
    pub gini: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<SaliencyStats<f64>>,
}

impl XaiRecord {
    pub fn pair(&self) -> PairKey {
        PairKey { image_id: self.image_id, xai_id: self.xai_id }
    }
}

/// Evaluates every saliency explanation in the manifest. Concept explanations
/// have no pixel-level counterpart and are skipped. Output follows manifest order.
pub fn run_batch<O: ModelOracle>(
    manifest: &DatasetManifest,
    oracle: &O,
    config: &BatchConfig,
) -> Result<Vec<XaiRecord>, XaiError> {
    if config.strategies.is_empty() {
        return Err(XaiError::Invalid("no perturbation strategies given".into()));
    }
    let entries: Vec<_> =
        manifest.file.explanations.iter().filter(|e| e.kind == ExplanationKind::Saliency).collect();
    entries
        .par_iter()
        .map(|entry| {
            let pair = entry.pair();
            let image = manifest.load_image(pair.image_id)?;
            let saliency = manifest.load_saliency::<f64>(pair)?;
            let mut faithfulness = BTreeMap::new();
            for strategy in &config.strategies {
                let report = FaithfulnessReport::evaluate(&image, &saliency, oracle, strategy, &config.thresholds)?;
                faithfulness.insert(strategy.kind.name().to_string(), report);
            }
            let gini = sparseness_gini(saliency.values())?;
            let stats = match manifest.image_entry(pair.image_id).and_then(|e| e.bbox) {
                Some(bbox) => Some(saliency_stats(&saliency, &bbox)?),
                None => None,
            };
            Ok(XaiRecord {
                image_id: pair.image_id,
                xai_id: pair.xai_id,
                explainer: entry.explainer_name.clone(),
                backbone: entry.backbone.clone(),
                faithfulness,
                gini,
                stats,
            })
        })
        .collect()
}

/// Per-explainer means, one row per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainerSummary {
    pub explainer: String,
    pub n: usize,
    pub faithfulness: BTreeMap<String, f64>,
    pub gini: f64,
}

pub fn aggregate_by_explainer(records: &[XaiRecord]) -> Vec<ExplainerSummary> {
    let mut groups: BTreeMap<&str, Vec<&XaiRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(&r.explainer).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(name, rows)| {
            let n = rows.len();
            let mut faithfulness: BTreeMap<String, f64> = BTreeMap::new();
            for r in &rows {
                for (k, v) in &r.faithfulness {
                    *faithfulness.entry(k.clone()).or_default() += v.faithfulness / n as f64;
                }
            }
            let gini = rows.iter().map(|r| r.gini).sum::<f64>() / n as f64;
            ExplainerSummary { explainer: name.to_string(), n, faithfulness, gini }
        })
        .collect()
}
