use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::DataError;

/// Row-major `height x width` relevance grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaliencyMeta {
    pub width: usize,
    pub height: usize,
}

impl<T: Scalar> SaliencyMap<T> {
    pub fn new(width: usize, height: usize, values: Vec<T>) -> Result<Self, DataError> {
        if width == 0 || height == 0 {
            return Err(DataError::Shape(format!("saliency map must be non-empty, got {width}x{height}")));
        }
        if values.len() != width * height {
            return Err(DataError::Shape(format!(
                "saliency map {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DataError::NonFinite);
        }
        Ok(Self { width, height, values })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Result<Self, DataError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[y * self.width + x]
    }

    /// Min-max rescaling to `[0, 1]`; a constant map becomes 0.5 everywhere.
    pub fn normalized(&self) -> Self {
        let (lo, hi) = self
            .values
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        let values = if span > T::zero() {
            self.values.iter().map(|&v| ((v - lo) / span).max(T::zero()).min(T::one())).collect()
        } else {
            vec![T::of(0.5); self.values.len()]
        };
        Self { width: self.width, height: self.height, values }
    }

    pub fn is_unit_range(&self) -> bool {
        self.values.iter().all(|&v| v >= T::zero() && v <= T::one())
    }

    pub fn cast<U: Scalar>(&self) -> SaliencyMap<U> {
        SaliencyMap {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }

    pub fn meta(&self) -> SaliencyMeta {
        SaliencyMeta { width: self.width, height: self.height }
    }

    /// Little-endian `f32` blob, row-major.
    pub fn to_f32_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.as_f32().to_le_bytes()).collect()
    }

    pub fn from_f32_bytes(meta: SaliencyMeta, bytes: &[u8]) -> Result<Self, DataError> {
        let expected = meta.width * meta.height * 4;
        if bytes.len() != expected {
            return Err(DataError::Shape(format!(
                "saliency blob for {}x{} must be {expected} bytes, got {}",
                meta.width,
                meta.height,
                bytes.len()
            )));
        }
        let values = bytes
            .chunks_exact(4)
            .map(|c| T::of(f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))))
            .collect();
        Self::new(meta.width, meta.height, values)
    }

    /// Writes `<stem>.f32` and `<stem>.meta`.
    pub fn write(&self, blob_path: &Path) -> Result<(), DataError> {
        fs::write(blob_path, self.to_f32_bytes())?;
        let meta = serde_json::to_string(&self.meta())?;
        fs::write(blob_path.with_extension("meta"), meta + "\n")?;
        Ok(())
    }

    pub fn read(blob_path: &Path) -> Result<Self, DataError> {
        let meta_path = blob_path.with_extension("meta");
        let meta: SaliencyMeta = serde_json::from_str(&fs::read_to_string(&meta_path).map_err(|e| {
            DataError::Missing(format!("{}: {e}", meta_path.display()))
        })?)?;
        let bytes = fs::read(blob_path).map_err(|e| DataError::Missing(format!("{}: {e}", blob_path.display())))?;
        Self::from_f32_bytes(meta, &bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptEntry {
    pub concept: String,
    pub activation: f64,
}

/// Concept-bottleneck explanation: one activation per named concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptActivation {
    pub entries: Vec<ConceptEntry>,
}

impl ConceptActivation {
    pub fn new<S: Into<String>>(entries: impl IntoIterator<Item = (S, f64)>) -> Result<Self, DataError> {
        let act = Self {
            entries: entries
                .into_iter()
                .map(|(c, a)| ConceptEntry { concept: c.into(), activation: a })
                .collect(),
        };
        act.check()?;
        Ok(act)
    }

    pub fn check(&self) -> Result<(), DataError> {
        if self.entries.is_empty() {
            return Err(DataError::Shape("concept table must contain at least one concept".into()));
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.concept.as_str()) {
                return Err(DataError::Parse(format!("duplicate concept `{}`", e.concept)));
            }
            if !e.activation.is_finite() {
                return Err(DataError::NonFinite);
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn activations(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.activation).collect()
    }

    pub fn read(path: &Path) -> Result<Self, DataError> {
        let text = fs::read_to_string(path).map_err(|e| DataError::Missing(format!("{}: {e}", path.display())))?;
        let act: Self = serde_json::from_str(&text)?;
        act.check()?;
        Ok(act)
    }

    pub fn write(&self, path: &Path) -> Result<(), DataError> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_handles_constant_maps() {
        let map = SaliencyMap::filled(3, 2, 7.0f64).unwrap();
        assert!(map.normalized().values().iter().all(|&v| v == 0.5));
        let map = SaliencyMap::new(2, 1, vec![-1.0f32, 3.0]).unwrap();
        assert_eq!(map.normalized().values(), &[0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(SaliencyMap::new(2, 2, vec![0.0f64; 3]).is_err());
        assert!(matches!(SaliencyMap::new(1, 1, vec![f64::NAN]), Err(DataError::NonFinite)));
    }

    #[test]
    fn blob_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("1_2.f32");
        let map = SaliencyMap::new(3, 2, vec![0.1f32, -2.5, 1e-7, 3.25, 0.0, 9.0]).unwrap();
        map.write(&path).unwrap();
        let back = SaliencyMap::<f32>::read(&path).unwrap();
        assert_eq!(map, back);
        let truncated = &map.to_f32_bytes()[..10];
        assert!(SaliencyMap::<f32>::from_f32_bytes(map.meta(), truncated).is_err());
    }

    #[test]
    fn concept_table_rejects_duplicates_and_empty() {
        assert!(ConceptActivation::new([("dog", 1.0), ("dog", 0.5)]).is_err());
        assert!(ConceptActivation::new(Vec::<(String, f64)>::new()).is_err());
        assert_eq!(ConceptActivation::new([("dog", 1.0)]).unwrap().len(), 1);
    }
}
