//! `embeddings.jsonl`: one `{"image_id", "xai_id", "vector"}` object per line, sorted by pair.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use pasta_core::data::PairKey;
use serde::{Deserialize, Serialize};

use crate::exit::invalid;

pub const EMBEDDINGS_FILE: &str = "embeddings.jsonl";

#[derive(Serialize, Deserialize)]
pub struct Line {
    pub image_id: u32,
    pub xai_id: u32,
    pub vector: Vec<f64>,
}

pub fn rows(map: &BTreeMap<PairKey, Vec<f64>>) -> impl Iterator<Item = Line> + '_ {
    map.iter().map(|(k, v)| Line { image_id: k.image_id, xai_id: k.xai_id, vector: v.clone() })
}

pub fn read(path: &Path) -> Result<BTreeMap<PairKey, Vec<f64>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = BTreeMap::new();
    let mut dim = None;
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row: Line = serde_json::from_str(line)
            .map_err(|e| invalid(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if *dim.get_or_insert(row.vector.len()) != row.vector.len() {
            return Err(invalid(format!("{}:{}: vector length differs from earlier lines", path.display(), i + 1)));
        }
        if row.vector.iter().any(|v| !v.is_finite()) {
            return Err(invalid(format!("{}:{}: non-finite embedding value", path.display(), i + 1)));
        }
        let key = PairKey { image_id: row.image_id, xai_id: row.xai_id };
        if out.insert(key, row.vector).is_some() {
            return Err(invalid(format!("{}:{}: duplicate pair ({}, {})", path.display(), i + 1, key.image_id, key.xai_id)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut map = BTreeMap::new();
        map.insert(PairKey { image_id: 2, xai_id: 1 }, vec![0.1, -1.0 / 3.0, 1e-300]);
        map.insert(PairKey { image_id: 1, xai_id: 5 }, vec![f64::MIN_POSITIVE, 2.5, -0.0]);
        let text: String = rows(&map).map(|r| serde_json::to_string(&r).unwrap() + "\n").collect();
        let path = dir.path().join(EMBEDDINGS_FILE);
        fs::write(&path, text).unwrap();
        let back = read(&path).unwrap();
        assert_eq!(back.len(), 2);
        for (k, v) in &map {
            let bits: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
            let got: Vec<u64> = back[k].iter().map(|x| x.to_bits()).collect();
            assert_eq!(bits, got);
        }
    }

    #[test]
    fn rejects_ragged_and_duplicate_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        fs::write(&path, "{\"image_id\":1,\"xai_id\":1,\"vector\":[1.0]}\n{\"image_id\":1,\"xai_id\":2,\"vector\":[1.0,2.0]}\n").unwrap();
        assert!(read(&path).is_err());
        fs::write(&path, "{\"image_id\":1,\"xai_id\":1,\"vector\":[1.0]}\n{\"image_id\":1,\"xai_id\":1,\"vector\":[2.0]}\n").unwrap();
        assert!(read(&path).is_err());
    }
}
