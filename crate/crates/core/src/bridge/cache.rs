use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::BridgeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheOp {
    EmbedImage,
    EmbedText,
}

impl CacheOp {
    pub fn name(self) -> &'static str {
        match self {
            Self::EmbedImage => "embed_image",
            Self::EmbedText => "embed_text",
        }
    }
}

/// Content-addressed store of embedding vectors.
///
/// Entry path: `<root>/<op>/<hex>.f64` where `hex = sha256(model_tag || 0x00 ||
/// op || 0x00 || sha256(payload))`; contents are the vector as little-endian
/// `f64`. Writes go through a temporary file and a rename, so readers never
/// observe a partial entry.
#[derive(Debug)]
pub struct EmbeddingCache {
    root: PathBuf,
    write_lock: Mutex<()>,
}

impl EmbeddingCache {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, BridgeError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| BridgeError::Cache(format!("{}: {e}", root.display())))?;
        Ok(Self { root, write_lock: Mutex::new(()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn key(model_tag: &str, op: CacheOp, payload: &[u8]) -> String {
        let mut h = Sha256::new();
        h.update(model_tag.as_bytes());
        h.update([0]);
        h.update(op.name().as_bytes());
        h.update([0]);
        h.update(Sha256::digest(payload));
        hex::encode(h.finalize())
    }

    fn path(&self, model_tag: &str, op: CacheOp, payload: &[u8]) -> PathBuf {
        self.root.join(op.name()).join(format!("{}.f64", Self::key(model_tag, op, payload)))
    }

    pub fn get(&self, model_tag: &str, op: CacheOp, payload: &[u8]) -> Result<Option<Vec<f64>>, BridgeError> {
        let path = self.path(model_tag, op, payload);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(BridgeError::Cache(format!("{}: {e}", path.display()))),
        };
        if bytes.len() % 8 != 0 {
            return Err(BridgeError::Cache(format!("{}: truncated entry", path.display())));
        }
        Ok(Some(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect()))
    }

    pub fn put(&self, model_tag: &str, op: CacheOp, payload: &[u8], vector: &[f64]) -> Result<(), BridgeError> {
        let path = self.path(model_tag, op, payload);
        let io = |e: std::io::Error| BridgeError::Cache(format!("{}: {e}", path.display()));
        let _guard = self.write_lock.lock().expect("cache write lock");
        let dir = path.parent().expect("entry has a parent");
        fs::create_dir_all(dir).map_err(io)?;
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp).map_err(io)?;
        for v in vector {
            f.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)
    }
}
