use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use pasta_core::apps::{backbone_report, selection_report, Candidate, CandidateSet, ScoredSample};
use pasta_core::data::{load_manifest, PairKey};
use pasta_core::xai::XaiRecord;
use serde::Serialize;

use super::finish;
use crate::args::{EmbedArgs, Global};
use crate::exit::invalid;
use crate::run::Recorder;
use crate::scoring::{load_checkpoint, obtain_embeddings, score_explanations};

#[derive(Args, Debug, Serialize)]
pub struct ScoreInputs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Precomputed embeddings.jsonl; embeds through the bridge when absent
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[command(flatten)]
    pub embed: EmbedArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct SelectArgs {
    #[command(flatten)]
    pub inputs: ScoreInputs,
    /// xai_metrics.jsonl from `xai-metrics`, to compare faithfulness of the picks
    #[arg(long)]
    pub xai_metrics: Option<PathBuf>,
    /// Perturbation whose faithfulness is reported
    #[arg(long, default_value = "uniform_noise")]
    pub strategy: String,
}

#[derive(Serialize)]
struct ScoreRow<'a> {
    image_id: u32,
    xai_id: u32,
    explainer: &'a str,
    backbone: &'a str,
    family: String,
    score: f64,
}

fn read_faithfulness(path: &PathBuf, strategy: &str) -> Result<BTreeMap<PairKey, f64>> {
    let text = fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let r: XaiRecord = serde_json::from_str(line).map_err(|e| invalid(format!("{}:{}: {e}", path.display(), i + 1)))?;
        let f = r
            .faithfulness
            .get(strategy)
            .ok_or_else(|| invalid(format!("{}:{}: no `{strategy}` results", path.display(), i + 1)))?;
        out.insert(r.pair(), f.faithfulness);
    }
    Ok(out)
}

pub fn select(args: &SelectArgs, global: &Global) -> Result<()> {
    let inputs = &args.inputs;
    let manifest = load_manifest(&inputs.data)?;
    let mut rec = Recorder::create(&inputs.out)?;
    rec.dataset(&manifest)?;
    let checkpoint = load_checkpoint(&inputs.checkpoint, &mut rec)?;
    let embeddings = obtain_embeddings(global, &manifest, inputs.embeddings.as_deref(), &inputs.embed, &mut rec)?;
    let scores = score_explanations(&manifest, &embeddings, &checkpoint)?;
    let faithfulness = match &args.xai_metrics {
        Some(path) => {
            rec.input(path)?;
            read_faithfulness(path, &args.strategy)?
        }
        None => BTreeMap::new(),
    };

    let mut sets: BTreeMap<u32, CandidateSet> = BTreeMap::new();
    for entry in &manifest.file.explanations {
        let pair = entry.pair();
        sets.entry(pair.image_id)
            .or_insert_with(|| CandidateSet { image_id: pair.image_id, candidates: Vec::new() })
            .candidates
            .push(Candidate {
                explainer: entry.explainer_name.clone(),
                pasta_score: scores[&pair],
                faithfulness: faithfulness.get(&pair).copied(),
            });
    }
    let sets: Vec<CandidateSet> = sets.into_values().collect();
    let report = selection_report(&sets)?;

    let mut histogram = String::new();
    for (name, count) in &report.histogram {
        let _ = writeln!(histogram, "{name:<24} {count:>6}");
    }
    rec.write_json("selection.json", &report)?;
    rec.write("histogram.txt", histogram.as_bytes())?;
    rec.write_jsonl(
        "scores.jsonl",
        manifest.file.explanations.iter().map(|e| ScoreRow {
            image_id: e.image_id,
            xai_id: e.xai_id,
            explainer: &e.explainer_name,
            backbone: &e.backbone,
            family: e.family(),
            score: scores[&e.pair()],
        }),
    )?;
    print!("{histogram}");
    if let (Some(sel), Some(pool)) = (report.selected_faithfulness, report.pool_faithfulness) {
        println!("faithfulness: selected {sel:.4}, all candidates {pool:.4}");
    }
    finish(rec, "select", None, global, args)
}

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    #[command(flatten)]
    pub inputs: ScoreInputs,
}

pub fn report(args: &ReportArgs, global: &Global) -> Result<()> {
    let inputs = &args.inputs;
    let manifest = load_manifest(&inputs.data)?;
    let mut rec = Recorder::create(&inputs.out)?;
    rec.dataset(&manifest)?;
    let checkpoint = load_checkpoint(&inputs.checkpoint, &mut rec)?;
    let embeddings = obtain_embeddings(global, &manifest, inputs.embeddings.as_deref(), &inputs.embed, &mut rec)?;
    let scores = score_explanations(&manifest, &embeddings, &checkpoint)?;

    let samples: Vec<ScoredSample> = manifest
        .file
        .explanations
        .iter()
        .map(|e| ScoredSample { backbone: e.backbone.clone(), family: e.family(), score: scores[&e.pair()] })
        .collect();
    let backbones: BTreeSet<&String> = samples.iter().map(|s| &s.backbone).collect();
    let families: BTreeSet<&String> = samples.iter().map(|s| &s.family).collect();
    let expected: Vec<(String, String)> =
        backbones.iter().flat_map(|b| families.iter().map(|f| ((*b).clone(), (*f).clone()))).collect();
    let table = backbone_report(&samples, &expected)?;
    for (b, f) in &table.missing {
        log::warn!("no explanations for backbone {b}, family {f}");
    }

    let mut text = format!("{:<16} {:<16} {:>6} {:>8}\n", "backbone", "family", "n", "mean");
    for row in &table.rows {
        let _ = writeln!(text, "{:<16} {:<16} {:>6} {:>8.4}", row.backbone, row.family, row.n, row.mean);
    }
    rec.write_json("backbone_report.json", &table)?;
    rec.write("backbone_report.txt", text.as_bytes())?;
    print!("{text}");
    finish(rec, "report", None, global, args)
}
