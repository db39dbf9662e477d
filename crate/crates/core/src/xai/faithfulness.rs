use std::collections::BTreeMap;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::data::SaliencyMap;
use crate::scalar::Scalar;

use super::oracle::{checked_proba, predicted_class, ModelOracle};
use super::perturb::{apply_field, PerturbationStrategy};
use super::XaiError;

/// Explanation-size thresholds, as integer percentages of the pixel count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThresholdSet(Vec<u32>);

impl Default for ThresholdSet {
    fn default() -> Self {
        Self((1..=9).map(|k| k * 10).collect())
    }
}

impl ThresholdSet {
    /// Each threshold must lie in `2..=99`; at `t = 1` the step range `1, 3, .. < t` is empty.
    pub fn new(percentages: Vec<u32>) -> Result<Self, XaiError> {
        if percentages.is_empty() {
            return Err(XaiError::Invalid("threshold set is empty".into()));
        }
        if let Some(bad) = percentages.iter().find(|t| !(2..=99).contains(*t)) {
            return Err(XaiError::Invalid(format!("threshold {bad}% outside 2..=99")));
        }
        Ok(Self(percentages))
    }

    pub fn percentages(&self) -> &[u32] {
        &self.0
    }

    /// Perturbation steps (percent) evaluated for threshold `t`.
    pub fn steps(t: u32) -> impl Iterator<Item = u32> {
        (1..t).step_by(2)
    }
}

/// Number of pixels perturbed at step `percent` of an `n`-pixel image.
pub(crate) fn perturbed_count(percent: u32, n: usize) -> usize {
    (percent as usize * n).div_ceil(100).min(n)
}

/// Row-major pixel indices sorted by relevance; ties keep row-major order.
pub fn relevance_order<T: Scalar>(saliency: &SaliencyMap<T>, descending: bool) -> Result<Vec<usize>, XaiError> {
    let values = saliency.values();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(XaiError::NonFinite);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let by_value = values[a].partial_cmp(&values[b]).expect("finite");
        let by_value = if descending { by_value.reverse() } else { by_value };
        by_value.then(a.cmp(&b))
    });
    Ok(order)
}

/// Per-threshold normalized values and their maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessCurve {
    pub thresholds: Vec<u32>,
    pub per_threshold: Vec<f64>,
    pub value: f64,
}

fn curve<T: Scalar, O: ModelOracle + ?Sized>(
    image: &RgbImage,
    saliency: &SaliencyMap<T>,
    oracle: &O,
    strategy: &PerturbationStrategy,
    thresholds: &ThresholdSet,
    descending: bool,
) -> Result<FaithfulnessCurve, XaiError> {
    let dims = (image.width() as usize, image.height() as usize);
    if (saliency.width(), saliency.height()) != dims {
        return Err(XaiError::DimMismatch { saliency: (saliency.width(), saliency.height()), image: dims });
    }
    strategy.check()?;
    let class = predicted_class(oracle, image)?;
    let clean = checked_proba(oracle, image)?[class];
    let order = relevance_order(saliency, descending)?;
    let field = strategy.field(image, 0);

    // Steps are shared between thresholds, so each is queried once.
    let mut differences: BTreeMap<u32, f64> = BTreeMap::new();
    let mut per_threshold = Vec::with_capacity(thresholds.percentages().len());
    for &t in thresholds.percentages() {
        let mut total = 0.0;
        let mut count = 0usize;
        for step in ThresholdSet::steps(t) {
            let d = match differences.get(&step) {
                Some(d) => *d,
                None => {
                    let k = perturbed_count(step, order.len());
                    let perturbed = apply_field(image, &field, &order[..k]);
                    let d = (clean - checked_proba(oracle, &perturbed)?[class]).abs();
                    differences.insert(step, d);
                    d
                }
            };
            total += d;
            count += 1;
        }
        let mean = total / count as f64;
        per_threshold.push(if descending { 1.0 - (-mean).exp() } else { (-mean).exp() });
    }
    let value = per_threshold.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(FaithfulnessCurve { thresholds: thresholds.percentages().to_vec(), per_threshold, value })
}

/// Prediction stability when the least relevant pixels are perturbed, in `(0, 1]`.
pub fn sufficiency<T: Scalar, O: ModelOracle + ?Sized>(
    image: &RgbImage,
    saliency: &SaliencyMap<T>,
    oracle: &O,
    strategy: &PerturbationStrategy,
    thresholds: &ThresholdSet,
) -> Result<FaithfulnessCurve, XaiError> {
    curve(image, saliency, oracle, strategy, thresholds, false)
}

/// Prediction change when the most relevant pixels are perturbed, in `[0, 1)`.
pub fn necessity<T: Scalar, O: ModelOracle + ?Sized>(
    image: &RgbImage,
    saliency: &SaliencyMap<T>,
    oracle: &O,
    strategy: &PerturbationStrategy,
    thresholds: &ThresholdSet,
) -> Result<FaithfulnessCurve, XaiError> {
    curve(image, saliency, oracle, strategy, thresholds, true)
}

/// Harmonic mean of sufficiency and necessity; 0 when both are 0.
pub fn faithfulness(suf: f64, nec: f64) -> f64 {
    if suf + nec == 0.0 {
        0.0
    } else {
        2.0 * suf * nec / (suf + nec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessReport {
    pub sufficiency: f64,
    pub necessity: f64,
    pub faithfulness: f64,
}

impl FaithfulnessReport {
    pub fn evaluate<T: Scalar, O: ModelOracle + ?Sized>(
        image: &RgbImage,
        saliency: &SaliencyMap<T>,
        oracle: &O,
        strategy: &PerturbationStrategy,
        thresholds: &ThresholdSet,
    ) -> Result<Self, XaiError> {
        let sufficiency = sufficiency(image, saliency, oracle, strategy, thresholds)?.value;
        let necessity = necessity(image, saliency, oracle, strategy, thresholds)?.value;
        Ok(Self { sufficiency, necessity, faithfulness: faithfulness(sufficiency, necessity) })
    }
}

#[cfg(test)]
mod tests {
    use super::super::oracle::{ConstantOracle, SinglePixelOracle};
    use super::super::perturb::PerturbationKind;
    use super::*;
    use proptest::prelude::*;

    fn image(seed: u64) -> RgbImage {
        let mut rng = crate::rng::SeededRng::new(seed);
        RgbImage::from_fn(8, 8, |_, _| image::Rgb([rng.below(256) as u8, rng.below(256) as u8, rng.below(256) as u8]))
    }

    fn map(values: Vec<f64>) -> SaliencyMap<f64> {
        SaliencyMap::new(8, 8, values).unwrap()
    }

    fn uniform(seed: u64) -> PerturbationStrategy {
        PerturbationStrategy::new(PerturbationKind::DEFAULT_UNIFORM, seed)
    }

    /// Direct transcription of the step loop with no caching or shared helpers.
    fn enumerate(img: &RgbImage, order: &[usize], oracle: &SinglePixelOracle, s: &PerturbationStrategy, nec: bool) -> f64 {
        let field = s.field(img, 0);
        let p = |x: &RgbImage| oracle.predict_proba(x).unwrap();
        let clean = p(img);
        let class = if clean[1] > clean[0] { 1 } else { 0 };
        let mut best = f64::NEG_INFINITY;
        for t in (10..=90).step_by(10) {
            let mut ds = Vec::new();
            let mut i = 1;
            while i < t {
                let k = ((i * 64) as f64 / 100.0).ceil() as usize;
                let mut x = img.clone();
                for &q in &order[..k] {
                    x.put_pixel((q % 8) as u32, (q / 8) as u32, image::Rgb(field[q]));
                }
                ds.push((clean[class] - p(&x)[class]).abs());
                i += 2;
            }
            let m = ds.iter().sum::<f64>() / ds.len() as f64;
            best = best.max(if nec { 1.0 - (-m).exp() } else { (-m).exp() });
        }
        best
    }

    #[test]
    fn constant_oracle_is_exact() {
        let oracle = ConstantOracle::new(vec![0.2, 0.8]).unwrap();
        let sal = map((0..64).map(|v| v as f64).collect());
        let r = FaithfulnessReport::evaluate(&image(1), &sal, &oracle, &uniform(0), &ThresholdSet::default()).unwrap();
        assert_eq!(r.sufficiency, 1.0);
        assert_eq!(r.necessity, 0.0);
        assert_eq!(r.faithfulness, 0.0);
    }

    #[test]
    fn single_pixel_matches_enumeration() {
        for seed in 0..10 {
            let img = image(seed);
            let target = (seed as usize * 7) % 64;
            let oracle = SinglePixelOracle::new((target % 8) as u32, (target / 8) as u32);
            let mut values: Vec<f64> = (0..64).map(|v| v as f64 / 64.0).collect();
            values.swap(target, 63);
            let sal = map(values);
            let s = uniform(seed);
            let th = ThresholdSet::default();
            let asc = relevance_order(&sal, false).unwrap();
            let desc = relevance_order(&sal, true).unwrap();
            let suf = sufficiency(&img, &sal, &oracle, &s, &th).unwrap().value;
            let nec = necessity(&img, &sal, &oracle, &s, &th).unwrap().value;
            assert_eq!(suf, enumerate(&img, &asc, &oracle, &s, false));
            assert_eq!(nec, enumerate(&img, &desc, &oracle, &s, true));
            // The target is ranked last, so low-relevance prefixes never reach it.
            assert_eq!(suf, 1.0);
        }
    }

    #[test]
    fn wrong_ranking_lowers_sufficiency() {
        let img = image(3);
        let oracle = SinglePixelOracle::new(2, 5);
        let target = 5 * 8 + 2;
        let mut right: Vec<f64> = vec![0.1; 64];
        right[target] = 1.0;
        let mut wrong: Vec<f64> = vec![0.9; 64];
        wrong[target] = 0.0;
        let s = PerturbationStrategy::new(PerturbationKind::BlackPatch, 0);
        let th = ThresholdSet::default();
        let good = sufficiency(&img, &map(right), &oracle, &s, &th).unwrap().value;
        let bad = sufficiency(&img, &map(wrong), &oracle, &s, &th).unwrap().value;
        assert!(bad < good, "{bad} vs {good}");
    }

    #[test]
    fn flat_saliency_follows_row_major_order() {
        let img = image(9);
        let oracle = SinglePixelOracle::new(0, 0);
        let s = uniform(4);
        let th = ThresholdSet::default();
        let nec = necessity(&img, &map(vec![0.5; 64]), &oracle, &s, &th).unwrap().value;
        let row_major: Vec<usize> = (0..64).collect();
        assert_eq!(nec, enumerate(&img, &row_major, &oracle, &s, true));
        assert!(nec > 0.0);
    }

    #[test]
    fn dim_mismatch_is_reported() {
        let sal = SaliencyMap::new(4, 4, vec![0.0f64; 16]).unwrap();
        let oracle = ConstantOracle::new(vec![1.0]).unwrap();
        let err = sufficiency(&image(0), &sal, &oracle, &uniform(0), &ThresholdSet::default()).unwrap_err();
        assert!(matches!(err, XaiError::DimMismatch { .. }));
    }

    #[test]
    fn thresholds_are_checked() {
        assert!(ThresholdSet::new(vec![]).is_err());
        assert!(ThresholdSet::new(vec![1]).is_err());
        assert!(ThresholdSet::new(vec![100]).is_err());
        assert_eq!(ThresholdSet::steps(7).collect::<Vec<_>>(), vec![1, 3, 5]);
        assert_eq!(perturbed_count(1, 64), 1);
        assert_eq!(perturbed_count(89, 64), 57);
    }

    #[test]
    fn harmonic_mean_values() {
        assert_eq!(faithfulness(0.5, 0.5), 0.5);
        assert_eq!(faithfulness(0.7, 0.0), 0.0);
        assert_eq!(faithfulness(0.0, 0.0), 0.0);
        assert!((faithfulness(1.0, 0.5) - 2.0 / 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn harmonic_below_geometric_below_arithmetic(s in 0.0f64..=1.0, n in 0.0f64..1.0) {
            let h = faithfulness(s, n);
            let g = (s * n).sqrt();
            prop_assert!((0.0..=1.0).contains(&h));
            prop_assert!(h <= g + 1e-12);
            prop_assert!(g <= (s + n) / 2.0 + 1e-12);
        }
    }
}
