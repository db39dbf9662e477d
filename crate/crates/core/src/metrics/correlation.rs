use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;
use crate::scalar::Scalar;

use super::{same_len, MetricError, Stat, StatWarning};

/// 1-based fractional ranks; tied values share the average of their positions.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![T::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = T::of((start + 1 + end) as f64 / 2.0);
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation; zero variance in either input yields 0 with a warning.
pub fn pcc<T: Scalar>(x: &[T], y: &[T]) -> Result<Stat<T>, MetricError> {
    same_len(x, y)?;
    if x.len() < 2 {
        return Err(MetricError::TooShort { needed: 2, got: x.len() });
    }
    let n = T::of_usize(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= T::zero() || syy <= T::zero() {
        log::warn!("correlation of a constant vector; reporting 0");
        return Ok(Stat::flagged(T::zero(), StatWarning::ZeroVariance));
    }
    let joint = (sxx * syy).sqrt();
    let denom = if joint.is_finite() && joint > T::zero() { joint } else { sxx.sqrt() * syy.sqrt() };
    let r = sxy / denom;
    Ok(Stat::clean(r.max(-T::one()).min(T::one())))
}

/// Spearman correlation as the Pearson correlation of average ranks.
pub fn scc<T: Scalar>(x: &[T], y: &[T]) -> Result<Stat<T>, MetricError> {
    same_len(x, y)?;
    if x.len() < 2 {
        return Err(MetricError::TooShort { needed: 2, got: x.len() });
    }
    pcc(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationStat {
    Pcc,
    Scc,
}

impl CorrelationStat {
    pub fn compute<T: Scalar>(self, x: &[T], y: &[T]) -> Result<T, MetricError> {
        Ok(match self {
            Self::Pcc => pcc(x, y)?.value,
            Self::Scc => scc(x, y)?.value,
        })
    }
}

/// Two-sided permutation p-value with add-one smoothing:
/// `(#{|stat(x, perm(y))| >= |stat(x, y)|} + 1) / (n_perm + 1)`.
pub fn permutation_p_value<T: Scalar>(
    x: &[T],
    y: &[T],
    stat: CorrelationStat,
    n_perm: usize,
    seed: u64,
) -> Result<T, MetricError> {
    if n_perm == 0 {
        return Err(MetricError::Invalid("n_perm must be at least 1".into()));
    }
    let observed = stat.compute(x, y)?.abs();
    // Values within rounding of the observed statistic count as extreme.
    let slack = T::of(1e-12);
    let mut shuffled = y.to_vec();
    let mut rng = SeededRng::new(seed);
    let mut extreme = 0usize;
    for _ in 0..n_perm {
        rng.shuffle(&mut shuffled);
        if stat.compute(x, &shuffled)?.abs() >= observed - slack {
            extreme += 1;
        }
    }
    Ok(T::of_usize(extreme + 1) / T::of_usize(n_perm + 1))
}
