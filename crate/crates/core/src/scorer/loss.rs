use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::ScorerError;

/// Relative importance of the similarity, squared-error and ranking terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 0.001, gamma: 0.01 }
    }
}

impl LossWeights {
    pub fn check(&self) -> Result<(), ScorerError> {
        let w = [self.alpha, self.beta, self.gamma];
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(ScorerError::Config(format!("loss weights must be finite and non-negative, got {w:?}")));
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(ScorerError::Config("at least one loss weight must be positive".into()));
        }
        Ok(())
    }
}

/// The three loss terms evaluated on one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms<T> {
    pub similarity: T,
    pub mse: T,
    pub rank: T,
    pub total: T,
}

fn check_pair<T>(truth: &[T], pred: &[T]) -> Result<(), ScorerError> {
    if truth.len() != pred.len() {
        return Err(ScorerError::LengthMismatch(truth.len(), pred.len()));
    }
    if truth.is_empty() {
        return Err(ScorerError::EmptyBatch);
    }
    Ok(())
}

/// `1 - cos(pred, truth)` over the batch.
pub fn loss_similarity<T: Scalar>(truth: &[T], pred: &[T]) -> Result<T, ScorerError> {
    check_pair(truth, pred)?;
    Ok(similarity_parts(truth, pred)?.0)
}

// Returns (loss, dot, |p|, |m|).
fn similarity_parts<T: Scalar>(truth: &[T], pred: &[T]) -> Result<(T, T, T, T), ScorerError> {
    let dot: T = truth.iter().zip(pred).map(|(&m, &p)| m * p).sum();
    let np = pred.iter().map(|&p| p * p).sum::<T>().sqrt();
    let nm = truth.iter().map(|&m| m * m).sum::<T>().sqrt();
    if np <= T::zero() || nm <= T::zero() {
        return Err(ScorerError::ZeroNorm);
    }
    Ok((T::one() - dot / (np * nm), dot, np, nm))
}

pub fn loss_mse<T: Scalar>(truth: &[T], pred: &[T]) -> Result<T, ScorerError> {
    check_pair(truth, pred)?;
    let sum: T = truth.iter().zip(pred).map(|(&m, &p)| (p - m) * (p - m)).sum();
    Ok(sum / T::of_usize(truth.len()))
}

/// Mean hinge `max(0, -(p_i - p_j)(m_i - m_j))` over all unordered pairs.
/// A single-sample batch has no pairs and contributes zero.
pub fn loss_rank<T: Scalar>(truth: &[T], pred: &[T]) -> Result<T, ScorerError> {
    check_pair(truth, pred)?;
    let n = truth.len();
    let pairs = n * (n - 1) / 2;
    if pairs == 0 {
        return Ok(T::zero());
    }
    let mut sum = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            let v = -(pred[i] - pred[j]) * (truth[i] - truth[j]);
            if v > T::zero() {
                sum += v;
            }
        }
    }
    Ok(sum / T::of_usize(pairs))
}

pub fn loss_composite<T: Scalar>(truth: &[T], pred: &[T], weights: LossWeights) -> Result<LossTerms<T>, ScorerError> {
    check_pair(truth, pred)?;
    let (a, b, g) = (T::of(weights.alpha), T::of(weights.beta), T::of(weights.gamma));
    let similarity = if weights.alpha != 0.0 { loss_similarity(truth, pred)? } else { T::zero() };
    let mse = loss_mse(truth, pred)?;
    let rank = if weights.gamma != 0.0 { loss_rank(truth, pred)? } else { T::zero() };
    Ok(LossTerms { similarity, mse, rank, total: a * similarity + b * mse + g * rank })
}

/// Composite loss and its gradient with respect to each prediction.
pub fn composite_with_grad<T: Scalar>(
    truth: &[T],
    pred: &[T],
    weights: LossWeights,
) -> Result<(LossTerms<T>, Vec<T>), ScorerError> {
    let terms = loss_composite(truth, pred, weights)?;
    let n = pred.len();
    let mut grad = vec![T::zero(); n];

    if weights.alpha != 0.0 {
        let a = T::of(weights.alpha);
        let (_, dot, np, nm) = similarity_parts(truth, pred)?;
        // d/dp_k [-(p.m)/(|p||m|)] = -m_k/(|p||m|) + (p.m) p_k / (|p|^3 |m|)
        let inv = T::one() / (np * nm);
        let coef = dot / (np * np * np * nm);
        for k in 0..n {
            grad[k] += a * (coef * pred[k] - truth[k] * inv);
        }
    }

    let b = T::of(weights.beta);
    if weights.beta != 0.0 {
        let scale = b * T::of(2.0) / T::of_usize(n);
        for k in 0..n {
            grad[k] += scale * (pred[k] - truth[k]);
        }
    }

    let pairs = n * (n - 1) / 2;
    if weights.gamma != 0.0 && pairs > 0 {
        let scale = T::of(weights.gamma) / T::of_usize(pairs);
        for i in 0..n {
            for j in i + 1..n {
                let dm = truth[i] - truth[j];
                if -(pred[i] - pred[j]) * dm > T::zero() {
                    grad[i] -= scale * dm;
                    grad[j] += scale * dm;
                }
            }
        }
    }
    Ok((terms, grad))
}
