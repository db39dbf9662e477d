//! Output directory bookkeeping and the per-command run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pasta_core::bridge::BridgeClient;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const RUN_MANIFEST: &str = "run_manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct BridgeInfo {
    pub spec: String,
    pub protocol: u64,
    pub embed_dim: usize,
    pub num_classes: usize,
    pub model_tag: String,
}

impl BridgeInfo {
    pub fn of(spec: &str, client: &BridgeClient) -> Self {
        let c = client.capabilities();
        Self {
            spec: spec.to_string(),
            protocol: c.protocol,
            embed_dim: c.embed_dim,
            num_classes: c.num_classes,
            model_tag: c.model_tag.clone(),
        }
    }
}

#[derive(Serialize)]
struct RunManifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    config: &'a C,
    #[serde(skip_serializing_if = "Option::is_none")]
    bridge: Option<&'a BridgeInfo>,
    inputs: &'a BTreeMap<String, String>,
    outputs: &'a BTreeMap<String, String>,
}

/// Writes into one output directory and remembers the SHA-256 of every input
/// read and artifact produced.
pub struct Recorder {
    dir: PathBuf,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    bridge: Option<BridgeInfo>,
}

impl Recorder {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), inputs: BTreeMap::new(), outputs: BTreeMap::new(), bridge: None })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let digest = file_digest(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    /// Records the manifest and annotation files of a dataset.
    pub fn dataset(&mut self, manifest: &pasta_core::data::DatasetManifest) -> Result<()> {
        self.input(&manifest.root.join(pasta_core::data::MANIFEST_FILE))?;
        self.input(&manifest.root.join(&manifest.file.annotations))
    }

    pub fn bridge(&mut self, info: BridgeInfo) {
        self.bridge = Some(info);
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn write_jsonl<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let mut text = String::new();
        for row in rows {
            text.push_str(&serde_json::to_string(&row)?);
            text.push('\n');
        }
        self.write(name, text.as_bytes())
    }

    /// Registers a file some other writer already placed in the directory.
    pub fn produced(&mut self, name: &str) -> Result<()> {
        let digest = file_digest(&self.path(name))?;
        self.outputs.insert(name.to_string(), digest);
        Ok(())
    }

    pub fn digest(&self, name: &str) -> Option<&str> {
        self.outputs.get(name).map(String::as_str)
    }

    pub fn finish<C: Serialize>(self, command: &str, seed: Option<u64>, config: &C) -> Result<()> {
        let manifest = RunManifest {
            tool: "pasta",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config,
            bridge: self.bridge.as_ref(),
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join(RUN_MANIFEST);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
