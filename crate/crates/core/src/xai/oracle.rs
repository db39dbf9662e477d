use image::RgbImage;

use super::XaiError;

/// Tolerance on the sum of a returned probability vector.
const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// An image classifier queried as a black box.
///
/// Implementations are shared across threads by the batch runner, so they must
/// tolerate concurrent calls.
pub trait ModelOracle: Sync {
    fn num_classes(&self) -> usize;

    fn predict_proba(&self, image: &RgbImage) -> Result<Vec<f64>, XaiError>;
}

impl<O: ModelOracle + ?Sized> ModelOracle for &O {
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }

    fn predict_proba(&self, image: &RgbImage) -> Result<Vec<f64>, XaiError> {
        (**self).predict_proba(image)
    }
}

/// Queries `oracle` and checks the response is a distribution over its classes.
pub fn checked_proba<O: ModelOracle + ?Sized>(oracle: &O, image: &RgbImage) -> Result<Vec<f64>, XaiError> {
    let probs = oracle.predict_proba(image)?;
    if probs.len() != oracle.num_classes() {
        return Err(XaiError::InvalidDistribution(format!(
            "{} probabilities for {} classes",
            probs.len(),
            oracle.num_classes()
        )));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(XaiError::InvalidDistribution("negative or non-finite probability".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(XaiError::InvalidDistribution(format!("probabilities sum to {total}")));
    }
    Ok(probs)
}

/// Argmax of the oracle's output, lowest index on ties.
pub fn predicted_class<O: ModelOracle + ?Sized>(oracle: &O, image: &RgbImage) -> Result<usize, XaiError> {
    let probs = checked_proba(oracle, image)?;
    let mut best = 0;
    for (k, p) in probs.iter().enumerate() {
        if *p > probs[best] {
            best = k;
        }
    }
    Ok(best)
}

/// Returns the same distribution for every input.
#[derive(Debug, Clone)]
pub struct ConstantOracle {
    probs: Vec<f64>,
}

impl ConstantOracle {
    pub fn new(probs: Vec<f64>) -> Result<Self, XaiError> {
        if probs.is_empty() {
            return Err(XaiError::Invalid("constant oracle needs at least one class".into()));
        }
        Ok(Self { probs })
    }
}

impl ModelOracle for ConstantOracle {
    fn num_classes(&self) -> usize {
        self.probs.len()
    }

    fn predict_proba(&self, _image: &RgbImage) -> Result<Vec<f64>, XaiError> {
        Ok(self.probs.clone())
    }
}

/// Two-class oracle whose output depends only on the brightness of one pixel:
/// `p(class 0) = 0.1 + 0.8 * mean_channel / 255`.
#[derive(Debug, Clone, Copy)]
pub struct SinglePixelOracle {
    pub x: u32,
    pub y: u32,
}

impl SinglePixelOracle {
    pub fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    pub fn class0(px: [u8; 3]) -> f64 {
        let mean = (px[0] as f64 + px[1] as f64 + px[2] as f64) / 3.0;
        0.1 + 0.8 * mean / 255.0
    }
}

impl ModelOracle for SinglePixelOracle {
    fn num_classes(&self) -> usize {
        2
    }

    fn predict_proba(&self, image: &RgbImage) -> Result<Vec<f64>, XaiError> {
        if self.x >= image.width() || self.y >= image.height() {
            return Err(XaiError::Oracle(format!("pixel ({}, {}) outside the image", self.x, self.y)));
        }
        let p = Self::class0(image.get_pixel(self.x, self.y).0);
        Ok(vec![p, 1.0 - p])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Broken;

    impl ModelOracle for Broken {
        fn num_classes(&self) -> usize {
            2
        }

        fn predict_proba(&self, _image: &RgbImage) -> Result<Vec<f64>, XaiError> {
            Ok(vec![0.7, 0.7])
        }
    }

    #[test]
    fn rejects_non_simplex() {
        let img = RgbImage::new(2, 2);
        assert!(matches!(checked_proba(&Broken, &img), Err(XaiError::InvalidDistribution(_))));
    }

    #[test]
    fn single_pixel_reads_only_its_pixel() {
        let oracle = SinglePixelOracle::new(1, 0);
        let mut img = RgbImage::new(3, 3);
        let base = checked_proba(&oracle, &img).unwrap();
        img.put_pixel(0, 0, image::Rgb([255, 255, 255]));
        assert_eq!(checked_proba(&oracle, &img).unwrap(), base);
        img.put_pixel(1, 0, image::Rgb([255, 255, 255]));
        let lit = checked_proba(&oracle, &img).unwrap();
        assert!((lit[0] - 0.9).abs() < 1e-12);
        assert_eq!(predicted_class(&oracle, &img).unwrap(), 0);
    }

    #[test]
    fn argmax_ties_go_low() {
        let oracle = ConstantOracle::new(vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(predicted_class(&oracle, &RgbImage::new(1, 1)).unwrap(), 1);
        let flat = ConstantOracle::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(predicted_class(&flat, &RgbImage::new(1, 1)).unwrap(), 0);
    }
}
