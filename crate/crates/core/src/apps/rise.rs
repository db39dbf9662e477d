//! RISE saliency: the importance of a pixel is the expected class probability
//! over random smooth masks that keep it.
//!
//! Mask `k` is drawn from stream `derive(seed, k)`: `grid * grid` Bernoulli(keep)
//! cells in row-major order, then the shift `dx = below(cell_w)`, `dy = below(cell_h)`,
//! with `cell = ceil(side / grid)`. The grid is bilinearly upsampled to
//! `(grid + 1) * cell` (sample centres at `(u + 0.5) * grid / up - 0.5`, mirrored
//! about the first and last cell centre) and cropped at `(dx, dy)`.

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::SaliencyMap;
use crate::rng::SeededRng;
use crate::scorer::{SCORE_MAX, SCORE_MIN};
use crate::xai::{checked_proba, predicted_class, FaithfulnessReport, ModelOracle, PerturbationStrategy, ThresholdSet};

use super::AppError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiseConfig {
    pub n_masks: usize,
    pub grid: usize,
    pub keep_prob: f64,
    pub seed: u64,
    /// Masks generated and scored together; bounds peak memory.
    pub chunk: usize,
}

impl Default for RiseConfig {
    fn default() -> Self {
        Self { n_masks: 2000, grid: 7, keep_prob: 0.5, seed: 0, chunk: 64 }
    }
}

impl RiseConfig {
    pub fn check(&self) -> Result<(), AppError> {
        if self.n_masks == 0 {
            return Err(AppError::Invalid("n_masks must be at least 1".into()));
        }
        if self.grid == 0 || self.chunk == 0 {
            return Err(AppError::Invalid("grid and chunk must be positive".into()));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob < 1.0) {
            return Err(AppError::Invalid(format!("keep probability {} outside (0, 1)", self.keep_prob)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SteerConfig {
    pub lambda: f64,
    /// Map the 1..5 score to [0, 1] before blending with the probability.
    pub normalize_pasta: bool,
}

impl Default for SteerConfig {
    fn default() -> Self {
        Self { lambda: 0.5, normalize_pasta: true }
    }
}

impl SteerConfig {
    pub fn check(&self) -> Result<(), AppError> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(AppError::Invalid(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        Ok(())
    }
}

/// `lambda * s_pasta + (1 - lambda) * s_proba`, with `s_pasta` first mapped by
/// `(s - 1) / 4` when `normalize` is set.
pub fn steer_weight(s_pasta: f64, s_proba: f64, lambda: f64, normalize: bool) -> f64 {
    let s = if normalize { (s_pasta - SCORE_MIN) / (SCORE_MAX - SCORE_MIN) } else { s_pasta };
    lambda * s + (1.0 - lambda) * s_proba
}

/// Scores candidate saliency maps for an image, as the scorer would rate their renderings.
pub trait PastaScorer: Sync {
    fn score_batch(&self, image: &RgbImage, candidates: &[SaliencyMap<f64>]) -> Result<Vec<f64>, AppError>;
}

/// One upsampled mask with values in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RiseMask {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl RiseMask {
    pub fn generate(config: &RiseConfig, width: usize, height: usize, index: usize) -> Self {
        let g = config.grid;
        let mut rng = SeededRng::stream(config.seed, index as u64);
        let cells: Vec<f64> =
            (0..g * g).map(|_| if rng.bernoulli(config.keep_prob) { 1.0 } else { 0.0 }).collect();
        let cell_w = width.div_ceil(g);
        let cell_h = height.div_ceil(g);
        let dx = rng.below(cell_w);
        let dy = rng.below(cell_h);
        let up_w = ((g + 1) * cell_w) as f64;
        let up_h = ((g + 1) * cell_h) as f64;
        let axis = |u: usize, up: f64| {
            let top = (g - 1) as f64;
            let mut c = (u as f64 + 0.5) * g as f64 / up - 0.5;
            if c < 0.0 {
                c = -c;
            }
            if c > top {
                c = (2.0 * top - c).max(0.0);
            }
            let lo = c.floor() as usize;
            (lo, (lo + 1).min(g - 1), c - lo as f64)
        };
        let cols: Vec<_> = (0..width).map(|x| axis(x + dx, up_w)).collect();
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            let (r0, r1, fy) = axis(y + dy, up_h);
            for &(c0, c1, fx) in &cols {
                let top = cells[r0 * g + c0] * (1.0 - fx) + cells[r0 * g + c1] * fx;
                let bottom = cells[r1 * g + c0] * (1.0 - fx) + cells[r1 * g + c1] * fx;
                values.push(top * (1.0 - fy) + bottom * fy);
            }
        }
        Self { width, height, values }
    }

    /// `image` with every channel scaled by the mask and rounded.
    pub fn apply(&self, image: &RgbImage) -> RgbImage {
        let mut out = image.clone();
        for (px, m) in out.pixels_mut().zip(&self.values) {
            for c in px.0.iter_mut() {
                *c = (*c as f64 * m).round() as u8;
            }
        }
        out
    }

    pub fn to_saliency(&self) -> SaliencyMap<f64> {
        SaliencyMap::new(self.width, self.height, self.values.clone()).expect("mask shape")
    }
}

/// Accumulates `sum_k w_k m_k / (n_masks * keep)` without normalizing. Masks are
/// produced and scored in parallel a chunk at a time, then summed in index order,
/// so the result does not depend on the thread count.
fn accumulate<O: ModelOracle + ?Sized>(
    image: &RgbImage,
    oracle: &O,
    config: &RiseConfig,
    steer: Option<(&dyn PastaScorer, SteerConfig)>,
) -> Result<SaliencyMap<f64>, AppError> {
    config.check()?;
    if let Some((_, s)) = &steer {
        s.check()?;
    }
    let (width, height) = (image.width() as usize, image.height() as usize);
    if width == 0 || height == 0 {
        return Err(AppError::Invalid("empty image".into()));
    }
    let class = predicted_class(oracle, image)?;
    let lambda = steer.map(|(_, s)| s.lambda).unwrap_or(0.0);
    let mut acc = vec![0.0f64; width * height];
    for start in (0..config.n_masks).step_by(config.chunk) {
        let end = (start + config.chunk).min(config.n_masks);
        let masks: Vec<RiseMask> =
            (start..end).into_par_iter().map(|k| RiseMask::generate(config, width, height, k)).collect();
        // A component with zero blend weight is not queried.
        let proba: Vec<f64> = if lambda < 1.0 {
            masks
                .par_iter()
                .map(|m| Ok(checked_proba(oracle, &m.apply(image))?[class]))
                .collect::<Result<_, AppError>>()?
        } else {
            vec![0.0; masks.len()]
        };
        let weights: Vec<f64> = match steer {
            Some((scorer, s)) if lambda > 0.0 => {
                let candidates: Vec<SaliencyMap<f64>> = masks.iter().map(RiseMask::to_saliency).collect();
                let scores = scorer.score_batch(image, &candidates)?;
                if scores.len() != masks.len() {
                    return Err(AppError::Scorer(format!("{} scores for {} masks", scores.len(), masks.len())));
                }
                scores.iter().zip(&proba).map(|(sp, pr)| steer_weight(*sp, *pr, s.lambda, s.normalize_pasta)).collect()
            }
            _ => proba,
        };
        for (mask, w) in masks.iter().zip(&weights) {
            for (a, m) in acc.iter_mut().zip(&mask.values) {
                *a += w * m;
            }
        }
    }
    let norm = config.n_masks as f64 * config.keep_prob;
    for a in &mut acc {
        *a /= norm;
    }
    if acc.iter().any(|v| !v.is_finite()) {
        return Err(AppError::Invalid("non-finite RISE accumulation".into()));
    }
    Ok(SaliencyMap::new(width, height, acc).expect("image shape"))
}

/// Unnormalized RISE map, `E[w m] / keep` estimated over the configured masks.
pub fn rise_raw<O: ModelOracle + ?Sized>(image: &RgbImage, oracle: &O, config: &RiseConfig) -> Result<SaliencyMap<f64>, AppError> {
    accumulate(image, oracle, config, None)
}

/// RISE saliency min-max normalized to `[0, 1]`.
pub fn rise_saliency<O: ModelOracle + ?Sized>(
    image: &RgbImage,
    oracle: &O,
    config: &RiseConfig,
) -> Result<SaliencyMap<f64>, AppError> {
    Ok(rise_raw(image, oracle, config)?.normalized())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisePastaResult {
    pub saliency: SaliencyMap<f64>,
    pub faithfulness: FaithfulnessReport,
    /// Raw 1..5 score of the final map.
    pub pasta_score: f64,
}

/// RISE with each mask's weight blended from its class probability and the
/// scorer's rating of the mask rendered as a candidate explanation.
#[allow(clippy::too_many_arguments)]
pub fn rise_pasta<O: ModelOracle + ?Sized>(
    image: &RgbImage,
    oracle: &O,
    scorer: &dyn PastaScorer,
    config: &RiseConfig,
    steer: SteerConfig,
    strategy: &PerturbationStrategy,
    thresholds: &ThresholdSet,
) -> Result<RisePastaResult, AppError> {
    let saliency = accumulate(image, oracle, config, Some((scorer, steer)))?.normalized();
    let faithfulness = FaithfulnessReport::evaluate(image, &saliency, oracle, strategy, thresholds)?;
    let pasta_score = scorer
        .score_batch(image, std::slice::from_ref(&saliency))?
        .first()
        .copied()
        .ok_or_else(|| AppError::Scorer("no score for the final map".into()))?;
    Ok(RisePastaResult { saliency, faithfulness, pasta_score })
}
