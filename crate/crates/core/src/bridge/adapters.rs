use image::RgbImage;

use crate::apps::{AppError, PastaScorer};
use crate::data::SaliencyMap;
use crate::encoding::{assemble_input, encode_png, render, Rendering};
use crate::scalar::Scalar;
use crate::scorer::Mlp;
use crate::xai::{ModelOracle, XaiError};

use super::client::BridgeClient;

/// A bridge classifier seen as a model oracle.
pub struct BridgeOracle<'a> {
    pub client: &'a BridgeClient,
}

impl ModelOracle for BridgeOracle<'_> {
    fn num_classes(&self) -> usize {
        self.client.capabilities().num_classes
    }

    fn predict_proba(&self, image: &RgbImage) -> Result<Vec<f64>, XaiError> {
        let png = encode_png(image).map_err(|e| XaiError::Backend(Box::new(e)))?;
        self.client.classify(&png).map_err(|e| XaiError::Backend(Box::new(e)))
    }
}

/// Scores candidate maps by rendering them over the image, embedding the
/// rendering through the bridge and running the scorer network on it.
pub struct BridgeScorer<'a, T: Scalar> {
    pub client: &'a BridgeClient,
    pub net: &'a Mlp<T>,
    /// Class label appended to every scorer input.
    pub label: usize,
    pub num_labels: usize,
    pub rendering: Rendering,
    pub blend: f64,
}

impl<T: Scalar> PastaScorer for BridgeScorer<'_, T> {
    fn score_batch(&self, image: &RgbImage, candidates: &[SaliencyMap<f64>]) -> Result<Vec<f64>, AppError> {
        let pngs = candidates
            .iter()
            .map(|c| render(image, c, self.rendering, self.blend)?.to_png())
            .collect::<Result<Vec<_>, _>>()?;
        let embeddings = self.client.embed_images(&pngs).map_err(|e| AppError::Backend(Box::new(e)))?;
        embeddings
            .iter()
            .map(|e| {
                let e: Vec<T> = e.iter().map(|v| T::of(*v)).collect();
                let x = assemble_input(&e, self.label, self.num_labels)?;
                self.net.predict(&x).map(|s| s.as_f64()).map_err(|e| AppError::Backend(Box::new(e)))
            })
            .collect()
    }
}
