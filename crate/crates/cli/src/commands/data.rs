use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use pasta_core::data::{load_manifest, ExplanationEntry, PairKey, Question, MANIFEST_FILE};
use pasta_core::pipeline::embed_explanations;
use pasta_core::synth::{synth_dataset, SynthConfig};
use serde::Serialize;

use super::finish;
use crate::args::{EmbedArgs, Global};
use crate::embeddings::{self, EMBEDDINGS_FILE};
use crate::exit::invalid;
use crate::run::{BridgeInfo, Recorder};

#[derive(Args, Debug, Serialize)]
pub struct ValidateArgs {
    /// Dataset root holding manifest.json
    #[arg(long)]
    pub data: PathBuf,
    /// Also write validation.json and a run manifest here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn validate(args: &ValidateArgs, global: &Global) -> Result<()> {
    let manifest = load_manifest(&args.data)?;
    let report = manifest.validate();
    if let Some(out) = &args.out {
        let mut rec = Recorder::create(out)?;
        rec.dataset(&manifest)?;
        rec.write_json("validation.json", &report)?;
        finish(rec, "validate", None, global, args)?;
    }
    println!("{} records, {} explanations, {} violations", report.records, report.explanations, report.violations.len());
    for v in &report.violations {
        eprintln!("  {v}");
    }
    match report.violations.first() {
        None => Ok(()),
        Some(first) => Err(invalid(format!("{} violations, first: {first}", report.violations.len()))),
    }
}

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    /// Dataset root to create
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 60)]
    pub images: usize,
    /// Saliency explainers per image
    #[arg(long, default_value_t = 8)]
    pub saliency: usize,
    /// Concept explainers per image
    #[arg(long, default_value_t = 2)]
    pub concept: usize,
    /// Image side in pixels
    #[arg(long, default_value_t = 32)]
    pub size: u32,
    /// Standard deviation of each vote around its target
    #[arg(long, default_value_t = 0.4)]
    pub vote_noise: f64,
    #[arg(long, value_delimiter = ',', default_value = "Q1,Q2,Q3,Q4,Q5,Q6")]
    pub questions: Vec<Question>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub embed: EmbedArgs,
}

pub fn synth(args: &SynthArgs, global: &Global) -> Result<()> {
    let config = SynthConfig {
        n_images: args.images,
        n_saliency: args.saliency,
        n_concept: args.concept,
        image_size: args.size,
        seed: args.seed,
        vote_noise: args.vote_noise,
        questions: args.questions.clone(),
    };
    let manifest = synth_dataset(&args.out, &config, &args.embed.options())?;
    let mut rec = Recorder::create(&args.out)?;
    rec.produced(MANIFEST_FILE)?;
    rec.produced(&manifest.file.annotations)?;
    println!(
        "wrote {} images, {} explanations, {} records to {}",
        manifest.file.images.len(),
        manifest.file.explanations.len(),
        manifest.records.len(),
        args.out.display()
    );
    finish(rec, "synth", Some(args.seed), global, args)
}

#[derive(Args, Debug, Serialize)]
pub struct EmbedCmd {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Only explanations that carry annotations
    #[arg(long)]
    pub annotated_only: bool,
    #[command(flatten)]
    pub embed: EmbedArgs,
}

pub fn embed(args: &EmbedCmd, global: &Global) -> Result<()> {
    let manifest = load_manifest(&args.data)?;
    let mut rec = Recorder::create(&args.out)?;
    rec.dataset(&manifest)?;
    let pairs: Vec<PairKey> = if args.annotated_only {
        manifest.annotated_pairs()
    } else {
        let mut p: Vec<PairKey> = manifest.file.explanations.iter().map(ExplanationEntry::pair).collect();
        p.sort();
        p
    };
    let client = global.connect()?;
    rec.bridge(BridgeInfo::of(&global.bridge, &client));
    let map = embed_explanations(&manifest, &pairs, &client, &args.embed.options())?;
    rec.write_jsonl(EMBEDDINGS_FILE, embeddings::rows(&map))?;
    println!("embedded {} explanations into {}", map.len(), rec.path(EMBEDDINGS_FILE).display());
    finish(rec, "embed", None, global, args)
}
