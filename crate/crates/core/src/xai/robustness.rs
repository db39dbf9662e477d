use image::RgbImage;

use crate::scalar::Scalar;

use super::perturb::PerturbationStrategy;
use super::XaiError;

pub const DEFAULT_SENSITIVITY_SAMPLES: usize = 10;

/// Largest Euclidean distance between the explanation of `image` and the
/// explanations of `n_samples` whole-image perturbations of it.
///
/// Sample `k` uses noise stream `k + 1` of the strategy seed, leaving stream 0 to
/// the faithfulness metrics.
pub fn max_sensitivity<T, F>(
    image: &RgbImage,
    explain: F,
    strategy: &PerturbationStrategy,
    n_samples: usize,
) -> Result<T, XaiError>
where
    T: Scalar,
    F: Fn(&RgbImage) -> Result<Vec<T>, XaiError>,
{
    if n_samples == 0 {
        return Err(XaiError::Invalid("max_sensitivity needs at least one sample".into()));
    }
    strategy.check()?;
    let base = explain(image)?;
    let mut worst = T::zero();
    for k in 0..n_samples {
        let other = explain(&strategy.perturb_all(image, k as u64 + 1))?;
        if other.len() != base.len() {
            return Err(XaiError::Invalid(format!(
                "explanation length changed from {} to {}",
                base.len(),
                other.len()
            )));
        }
        let dist = base.iter().zip(&other).map(|(a, b)| (*a - *b).powi(2)).sum::<T>().sqrt();
        if !dist.is_finite() {
            return Err(XaiError::NonFinite);
        }
        worst = worst.max(dist);
    }
    Ok(worst)
}
