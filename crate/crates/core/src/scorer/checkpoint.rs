//! Checkpoint layout:
//!
//! ```text
//! PASTA-CKPT 1\n
//! <one-line JSON header>\n
//! <param_count little-endian f32 values, layer by layer: weights row-major, then bias>
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Question;
use crate::scalar::Scalar;

use super::config::ScorerConfig;
use super::mlp::Mlp;
use super::ScorerError;

pub const CHECKPOINT_MAGIC: &str = "PASTA-CKPT 1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub dims: Vec<usize>,
    pub param_count: usize,
    pub config: ScorerConfig,
    pub seed: u64,
    pub question: Option<Question>,
    pub split_digest: Option<String>,
    pub embed_dim: usize,
    pub num_labels: usize,
    pub blob_sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub header: CheckpointHeader,
    pub weights: Mlp<T>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn new(
        weights: Mlp<T>,
        config: ScorerConfig,
        question: Option<Question>,
        split_digest: Option<String>,
        num_labels: usize,
    ) -> Self {
        let blob = Self::blob(&weights);
        let header = CheckpointHeader {
            dims: weights.dims().to_vec(),
            param_count: weights.num_params(),
            seed: config.seed,
            config,
            question,
            split_digest,
            embed_dim: weights.input_dim().saturating_sub(num_labels),
            num_labels,
            blob_sha256: hex::encode(Sha256::digest(&blob)),
        };
        Self { header, weights }
    }

    fn blob(weights: &Mlp<T>) -> Vec<u8> {
        weights.params().iter().flat_map(|p| p.as_f32().to_le_bytes()).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC.as_bytes());
        out.push(b'\n');
        out.extend(serde_json::to_vec(&self.header).expect("header serializes"));
        out.push(b'\n');
        out.extend(Self::blob(&self.weights));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ScorerError> {
        let magic_end = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| ScorerError::Malformed("missing magic line".into()))?;
        if &bytes[..magic_end] != CHECKPOINT_MAGIC.as_bytes() {
            return Err(ScorerError::Malformed("bad magic line".into()));
        }
        let rest = &bytes[magic_end + 1..];
        let header_end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| ScorerError::Malformed("missing header line".into()))?;
        let header: CheckpointHeader = serde_json::from_slice(&rest[..header_end])
            .map_err(|e| ScorerError::Malformed(format!("header: {e}")))?;
        let blob = &rest[header_end + 1..];
        let expected = header.param_count * 4;
        if blob.len() != expected {
            return Err(ScorerError::Truncated { expected, found: blob.len() });
        }
        if hex::encode(Sha256::digest(blob)) != header.blob_sha256 {
            return Err(ScorerError::Malformed("weight digest mismatch".into()));
        }
        let params = blob
            .chunks_exact(4)
            .map(|c| T::of(f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))))
            .collect();
        let weights = Mlp::from_params(header.dims.clone(), Some(params))?;
        Ok(Self { header, weights })
    }

    pub fn save(&self, path: &Path) -> Result<(), ScorerError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ScorerError> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Hex SHA-256 of the full checkpoint file contents.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint<f32> {
        let net = Mlp::<f32>::new(7, &[5, 3], 11).unwrap();
        Checkpoint::new(net, ScorerConfig { seed: 11, ..Default::default() }, Some(Question::Q2), Some("abc".into()), 3)
    }

    #[test]
    fn roundtrip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.ckpt");
        let ckpt = sample();
        ckpt.save(&path).unwrap();
        let back = Checkpoint::<f32>::load(&path).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(back.header.embed_dim, 4);
        let bits = |c: &Checkpoint<f32>| c.weights.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&ckpt));
        assert_eq!(fs::read(&path).unwrap(), back.to_bytes());
        let x = vec![0.3f32; 7];
        assert_eq!(back.weights.predict(&x).unwrap(), ckpt.weights.predict(&x).unwrap());
    }

    #[test]
    fn truncated_and_corrupt_files_are_structured_errors() {
        let bytes = sample().to_bytes();
        match Checkpoint::<f32>::from_bytes(&bytes[..bytes.len() - 6]) {
            Err(ScorerError::Truncated { expected, found }) => assert_eq!(expected - found, 6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(Checkpoint::<f32>::from_bytes(b"nope\n{}\n"), Err(ScorerError::Malformed(_))));
        assert!(matches!(Checkpoint::<f32>::from_bytes(&bytes[..20]), Err(ScorerError::Malformed(_))));
        let mut flipped = bytes.clone();
        *flipped.last_mut().unwrap() ^= 1;
        assert!(matches!(Checkpoint::<f32>::from_bytes(&flipped), Err(ScorerError::Malformed(_))));
    }
}
