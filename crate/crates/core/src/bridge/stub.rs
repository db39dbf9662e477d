//! Deterministic stand-in for an encoder/classifier service.
//!
//! * features: the decoded RGB image is area-pooled into a 4x4 grid; pixel
//!   `(x, y)` falls in cell `(4x / w, 4y / h)` (integer division). Features are the
//!   cell means of `channel / 255`, ordered cell-row, cell-column, channel (48
//!   values). Empty cells (images narrower than 4 pixels) are 0.
//! * `embed_image` = `P f` with `P` 16x48 drawn `uniform(-1, 1)` row-major from
//!   `SeededRng::stream(STUB_SEED, 1)`, divided by `sqrt(48)`.
//! * `embed_text` = 16 draws of `uniform(-1, 1)` from `SeededRng::new(s)` where `s`
//!   is the first 8 bytes of `sha256(text)` read little-endian.
//! * `classify` = `softmax(Q f)` with `Q` 3x48 drawn `uniform(-1, 1)` row-major
//!   from `SeededRng::stream(STUB_SEED, 2)`; no bias, so a black image gives
//!   the uniform distribution.
//!
//! All sums run in index order in `f64`.

use sha2::{Digest, Sha256};

use crate::rng::SeededRng;

use super::protocol::{decode_payload, ErrorCode, RequestBody, ResponseBody, PROTOCOL_VERSION};
use super::server::BridgeService;

pub const STUB_EMBED_DIM: usize = 16;
pub const STUB_NUM_CLASSES: usize = 3;
pub const STUB_MODEL_TAG: &str = "pasta-stub-v1";
const STUB_SEED: u64 = 0x5EED_57AB;
const POOL: usize = 4;
const FEATURES: usize = POOL * POOL * 3;

#[derive(Debug, Clone)]
pub struct StubModel {
    projection: Vec<f64>,
    classifier: Vec<f64>,
}

impl Default for StubModel {
    fn default() -> Self {
        Self::new()
    }
}

fn matrix(stream: u64, rows: usize) -> Vec<f64> {
    let mut rng = SeededRng::stream(STUB_SEED, stream);
    (0..rows * FEATURES).map(|_| rng.uniform(-1.0, 1.0)).collect()
}

fn apply(matrix: &[f64], features: &[f64]) -> Vec<f64> {
    matrix.chunks(FEATURES).map(|row| row.iter().zip(features).map(|(a, b)| a * b).sum()).collect()
}

impl StubModel {
    pub fn new() -> Self {
        Self { projection: matrix(1, STUB_EMBED_DIM), classifier: matrix(2, STUB_NUM_CLASSES) }
    }

    pub fn features(png: &[u8]) -> Result<Vec<f64>, String> {
        let img = image::load_from_memory_with_format(png, image::ImageFormat::Png)
            .map_err(|e| format!("not a PNG image: {e}"))?
            .to_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let mut sums = vec![0.0f64; FEATURES];
        let mut counts = [0usize; POOL * POOL];
        for (x, y, px) in img.enumerate_pixels() {
            let cell = (y as usize * POOL / h) * POOL + x as usize * POOL / w;
            counts[cell] += 1;
            for c in 0..3 {
                sums[cell * 3 + c] += px.0[c] as f64 / 255.0;
            }
        }
        for (cell, n) in counts.iter().enumerate() {
            if *n > 0 {
                for c in 0..3 {
                    sums[cell * 3 + c] /= *n as f64;
                }
            }
        }
        Ok(sums)
    }

    pub fn embed_image(&self, png: &[u8]) -> Result<Vec<f64>, String> {
        let f = Self::features(png)?;
        let scale = (FEATURES as f64).sqrt();
        Ok(apply(&self.projection, &f).into_iter().map(|v| v / scale).collect())
    }

    pub fn embed_text(&self, text: &str) -> Vec<f64> {
        let digest = Sha256::digest(text.as_bytes());
        let seed = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        let mut rng = SeededRng::new(seed);
        (0..STUB_EMBED_DIM).map(|_| rng.uniform(-1.0, 1.0)).collect()
    }

    pub fn classify(&self, png: &[u8]) -> Result<Vec<f64>, String> {
        let logits = apply(&self.classifier, &Self::features(png)?);
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = exps.iter().sum();
        Ok(exps.into_iter().map(|e| e / total).collect())
    }
}

impl BridgeService for StubModel {
    fn handle(&self, request: RequestBody) -> ResponseBody {
        let payload_error = |m: String| ResponseBody::error(ErrorCode::MalformedPayload, m);
        match request {
            RequestBody::Hello => ResponseBody::Hello {
                protocol: PROTOCOL_VERSION,
                embed_dim: STUB_EMBED_DIM,
                num_classes: STUB_NUM_CLASSES,
                model_tag: STUB_MODEL_TAG.into(),
            },
            RequestBody::EmbedImage { png } => match decode_payload(&png) {
                Ok(bytes) => self.embed_image(&bytes).map_or_else(payload_error, |vector| ResponseBody::EmbedImage { vector }),
                Err(e) => e,
            },
            RequestBody::EmbedText { text } => ResponseBody::EmbedText { vector: self.embed_text(&text) },
            RequestBody::Classify { png } => match decode_payload(&png) {
                Ok(bytes) => self.classify(&bytes).map_or_else(payload_error, |probs| ResponseBody::Classify { probs }),
                Err(e) => e,
            },
        }
    }
}
