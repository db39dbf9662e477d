use serde::{Deserialize, Serialize};

use crate::data::{BoundingBox, SaliencyMap};
use crate::scalar::Scalar;

use super::XaiError;

/// Gini sparseness of the absolute attribution values, in `[0, 1)`.
///
/// With `a` sorted ascending and 1-based `i`: `sum((2i - n - 1) a_i) / (n sum(a))`.
pub fn sparseness_gini<T: Scalar>(attribution: &[T]) -> Result<T, XaiError> {
    if attribution.iter().any(|v| !v.is_finite()) {
        return Err(XaiError::NonFinite);
    }
    let mut a: Vec<T> = attribution.iter().map(|v| v.abs()).collect();
    a.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    let total: T = a.iter().copied().sum();
    if total == T::zero() {
        return Err(XaiError::ZeroMass);
    }
    let n = T::of_usize(a.len());
    let weighted: T = a
        .iter()
        .enumerate()
        .map(|(i, v)| (T::of_usize(2 * (i + 1)) - n - T::one()) * *v)
        .sum();
    Ok(weighted / (n * total))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaliencyStats<T> {
    pub sum_all: T,
    /// Mass inside the bounding box.
    pub sum_pos: T,
    /// Mass outside the bounding box.
    pub sum_neg: T,
    /// Shannon entropy (nats) of `|v| / sum(|v|)`.
    pub entropy: T,
}

pub fn saliency_stats<T: Scalar>(saliency: &SaliencyMap<T>, bbox: &BoundingBox) -> Result<SaliencyStats<T>, XaiError> {
    let values = saliency.values();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(XaiError::NonFinite);
    }
    let mut sum_all = T::zero();
    let mut sum_pos = T::zero();
    let mut sum_neg = T::zero();
    for y in 0..saliency.height() {
        for x in 0..saliency.width() {
            let v = saliency.get(x, y);
            sum_all += v;
            if bbox.contains(x, y) {
                sum_pos += v;
            } else {
                sum_neg += v;
            }
        }
    }
    let mass: T = values.iter().map(|v| v.abs()).sum();
    if mass == T::zero() {
        return Err(XaiError::ZeroMass);
    }
    let entropy = -values
        .iter()
        .map(|v| v.abs() / mass)
        .filter(|p| *p > T::zero())
        .map(|p| p * p.ln())
        .sum::<T>();
    Ok(SaliencyStats { sum_all, sum_pos, sum_neg, entropy })
}
