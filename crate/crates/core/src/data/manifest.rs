use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::artifact::{ConceptActivation, SaliencyMap};
use super::votes::{check_votes, VOTES_PER_ITEM};
use super::DataError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const MAX_IMAGE_ID: u32 = 1000;
pub const MAX_XAI_ID: u32 = 46;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Question {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
    Q6,
}

impl Question {
    pub const ALL: [Question; 6] = [Self::Q1, Self::Q2, Self::Q3, Self::Q4, Self::Q5, Self::Q6];
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for Question {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|q| q.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| DataError::Parse(format!("unknown question `{s}` (expected Q1..Q6)")))
    }
}

/// (image, explainer) pair identifying one explanation artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairKey {
    pub image_id: u32,
    pub xai_id: u32,
}

/// Coordinates of one annotation record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RecordKey {
    pub image_id: u32,
    pub xai_id: u32,
    pub question: Question,
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.image_id, self.xai_id, self.question)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub image_id: u32,
    pub xai_id: u32,
    pub question: Question,
    pub votes: Vec<u8>,
    pub predicted_label: usize,
    #[serde(default)]
    pub dataset_name: String,
    #[serde(default)]
    pub backbone: String,
    #[serde(default)]
    pub explainer_name: String,
}

impl AnnotationRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey { image_id: self.image_id, xai_id: self.xai_id, question: self.question }
    }

    pub fn pair(&self) -> PairKey {
        PairKey { image_id: self.image_id, xai_id: self.xai_id }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplanationKind {
    Saliency,
    Concept,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationEntry {
    pub image_id: u32,
    pub xai_id: u32,
    pub kind: ExplanationKind,
    #[serde(default)]
    pub explainer_name: String,
    #[serde(default)]
    pub backbone: String,
    /// Method family used to group backbone reports (e.g. `activation_map`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
}

impl ExplanationEntry {
    pub fn pair(&self) -> PairKey {
        PairKey { image_id: self.image_id, xai_id: self.xai_id }
    }

    pub fn family(&self) -> String {
        self.family.clone().unwrap_or_else(|| match self.kind {
            ExplanationKind::Saliency => "saliency".to_string(),
            ExplanationKind::Concept => "concept".to_string(),
        })
    }
}

/// Box in pixel coordinates, `x1`/`y1` exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BoundingBox {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub image_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BoundingBox>,
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub labels: Vec<String>,
    pub images: Vec<ImageEntry>,
    pub explanations: Vec<ExplanationEntry>,
    #[serde(default = "default_annotations")]
    pub annotations: String,
}

fn default_annotations() -> String {
    ANNOTATIONS_FILE.to_string()
}

#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub file: ManifestFile,
    pub records: Vec<AnnotationRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    VoteCount,
    VoteRange,
    DuplicateRecord,
    IdOutOfRange,
    LabelOutOfVocabulary,
    DanglingReference,
    MissingFile,
    DuplicateExplanation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record: Option<RecordKey>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.record {
            Some(k) => write!(f, "{:?} at {k}: {}", self.kind, self.detail),
            None => write!(f, "{:?}: {}", self.kind, self.detail),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub records: usize,
    pub explanations: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl DatasetManifest {
    pub fn image_path(&self, image_id: u32) -> PathBuf {
        self.root.join("images").join(format!("{image_id}.png"))
    }

    pub fn saliency_path(&self, pair: PairKey) -> PathBuf {
        self.root.join("saliency").join(format!("{}_{}.f32", pair.image_id, pair.xai_id))
    }

    pub fn concept_path(&self, pair: PairKey) -> PathBuf {
        self.root.join("concepts").join(format!("{}_{}.json", pair.image_id, pair.xai_id))
    }

    pub fn num_labels(&self) -> usize {
        self.file.labels.len()
    }

    pub fn explanation(&self, pair: PairKey) -> Option<&ExplanationEntry> {
        self.file.explanations.iter().find(|e| e.pair() == pair)
    }

    pub fn explanation_index(&self) -> HashMap<PairKey, &ExplanationEntry> {
        self.file.explanations.iter().map(|e| (e.pair(), e)).collect()
    }

    pub fn image_entry(&self, image_id: u32) -> Option<&ImageEntry> {
        self.file.images.iter().find(|i| i.image_id == image_id)
    }

    pub fn records_for(&self, question: Question) -> impl Iterator<Item = &AnnotationRecord> {
        self.records.iter().filter(move |r| r.question == question)
    }

    /// Distinct (image, explainer) pairs that carry at least one annotation, sorted.
    pub fn annotated_pairs(&self) -> Vec<PairKey> {
        let set: HashSet<PairKey> = self.records.iter().map(|r| r.pair()).collect();
        let mut pairs: Vec<_> = set.into_iter().collect();
        pairs.sort();
        pairs
    }

    pub fn load_image(&self, image_id: u32) -> Result<RgbImage, DataError> {
        load_rgb(&self.image_path(image_id))
    }

    pub fn load_saliency<T: Scalar>(&self, pair: PairKey) -> Result<SaliencyMap<T>, DataError> {
        SaliencyMap::read(&self.saliency_path(pair))
    }

    pub fn load_concepts(&self, pair: PairKey) -> Result<ConceptActivation, DataError> {
        ConceptActivation::read(&self.concept_path(pair))
    }

    /// Writes `manifest.json` and the annotation file under `root`.
    pub fn write(&self) -> Result<(), DataError> {
        fs::create_dir_all(&self.root)?;
        fs::write(self.root.join(MANIFEST_FILE), serde_json::to_string_pretty(&self.file)? + "\n")?;
        let mut out = fs::File::create(self.root.join(&self.file.annotations))?;
        for r in &self.records {
            writeln!(out, "{}", serde_json::to_string(r)?)?;
        }
        Ok(())
    }

    /// Checks every invariant a manifest must satisfy and lists each violation.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n_labels = self.num_labels();

        let mut explanation_pairs = HashSet::new();
        for e in &self.file.explanations {
            if !explanation_pairs.insert(e.pair()) {
                violations.push(Violation {
                    kind: ViolationKind::DuplicateExplanation,
                    record: None,
                    detail: format!("explanation ({},{}) listed twice", e.image_id, e.xai_id),
                });
            }
            let path = match e.kind {
                ExplanationKind::Saliency => self.saliency_path(e.pair()),
                ExplanationKind::Concept => self.concept_path(e.pair()),
            };
            let mut missing = vec![];
            if !path.is_file() {
                missing.push(path.clone());
            }
            if e.kind == ExplanationKind::Saliency && !path.with_extension("meta").is_file() {
                missing.push(path.with_extension("meta"));
            }
            for p in missing {
                violations.push(Violation {
                    kind: ViolationKind::MissingFile,
                    record: None,
                    detail: format!("explanation ({},{}) file {} not found", e.image_id, e.xai_id, p.display()),
                });
            }
        }
        for img in &self.file.images {
            let path = self.image_path(img.image_id);
            if !path.is_file() {
                violations.push(Violation {
                    kind: ViolationKind::MissingFile,
                    record: None,
                    detail: format!("image {} file {} not found", img.image_id, path.display()),
                });
            }
        }

        let mut seen = HashSet::new();
        for r in &self.records {
            let key = r.key();
            let mut push = |kind, detail: String| violations.push(Violation { kind, record: Some(key), detail });
            if r.votes.len() != VOTES_PER_ITEM {
                push(ViolationKind::VoteCount, format!("expected {VOTES_PER_ITEM} votes, found {}", r.votes.len()));
            } else if check_votes(&r.votes).is_err() {
                push(ViolationKind::VoteRange, format!("votes {:?} outside 1..=5", r.votes));
            }
            if !seen.insert(key) {
                push(ViolationKind::DuplicateRecord, "record key appears more than once".into());
            }
            if !(1..=MAX_IMAGE_ID).contains(&r.image_id) || !(1..=MAX_XAI_ID).contains(&r.xai_id) {
                push(
                    ViolationKind::IdOutOfRange,
                    format!("image_id must be in 1..={MAX_IMAGE_ID} and xai_id in 1..={MAX_XAI_ID}"),
                );
            }
            if r.predicted_label >= n_labels {
                push(
                    ViolationKind::LabelOutOfVocabulary,
                    format!("predicted_label {} but vocabulary has {n_labels} entries", r.predicted_label),
                );
            }
            if !explanation_pairs.contains(&r.pair()) {
                push(ViolationKind::DanglingReference, "no explanation artifact for this (image, xai) pair".into());
            } else {
                let path = match self.explanation(r.pair()).map(|e| e.kind) {
                    Some(ExplanationKind::Concept) => self.concept_path(r.pair()),
                    _ => self.saliency_path(r.pair()),
                };
                if !path.is_file() {
                    push(ViolationKind::DanglingReference, format!("artifact {} does not exist", path.display()));
                }
            }
        }

        ValidationReport { records: self.records.len(), explanations: self.file.explanations.len(), violations }
    }

    /// Record count per question, useful for logging.
    pub fn question_counts(&self) -> BTreeMap<Question, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.question).or_insert(0) += 1;
        }
        counts
    }
}

/// Reads `manifest.json` and its annotation file from `root`.
/// Decodes an image file to 8-bit RGB.
pub fn load_rgb(path: &Path) -> Result<RgbImage, DataError> {
    let img = image::open(path).map_err(|e| DataError::Missing(format!("{}: {e}", path.display())))?;
    Ok(img.to_rgb8())
}

pub fn load_manifest(root: &Path) -> Result<DatasetManifest, DataError> {
    if !root.is_dir() {
        return Err(DataError::Missing(format!("dataset directory {} does not exist", root.display())));
    }
    let manifest_path = root.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| DataError::Missing(format!("{}: {e}", manifest_path.display())))?;
    let file: ManifestFile = serde_json::from_str(&text)
        .map_err(|e| DataError::Parse(format!("{}: {e}", manifest_path.display())))?;

    let ann_path = root.join(&file.annotations);
    let reader = BufReader::new(
        fs::File::open(&ann_path).map_err(|e| DataError::Missing(format!("{}: {e}", ann_path.display())))?,
    );
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: AnnotationRecord = serde_json::from_str(&line)
            .map_err(|e| DataError::Record { line: idx + 1, message: e.to_string() })?;
        records.push(record);
    }
    Ok(DatasetManifest { root: root.to_path_buf(), file, records })
}

pub fn validate_manifest(manifest: &DatasetManifest) -> ValidationReport {
    manifest.validate()
}
