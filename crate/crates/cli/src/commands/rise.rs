use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use pasta_core::apps::{rise_pasta, rise_saliency, SteerConfig};
use pasta_core::bridge::{BridgeOracle, BridgeScorer};
use pasta_core::data::{load_rgb, Question, SaliencyMap};
use pasta_core::encoding::{render, Rendering, DEFAULT_BLEND};
use pasta_core::RgbImage;
use pasta_core::xai::{predicted_class, FaithfulnessReport, PerturbationKind, PerturbationStrategy, ThresholdSet};
use serde::Serialize;

use super::finish;
use crate::args::{EmbedArgs, Global, RiseArgs};
use crate::exit::invalid;
use crate::run::{BridgeInfo, Recorder};
use crate::scoring::load_checkpoint;

pub const SALIENCY_FILE: &str = "saliency.f32";

#[derive(Args, Debug, Serialize)]
pub struct RiseCmd {
    /// Image to explain
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Seeds the masks
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub rise: RiseArgs,
}

/// `saliency.f32` + `saliency.meta` and a heatmap preview.
fn write_map(rec: &mut Recorder, image: &RgbImage, saliency: &SaliencyMap<f64>) -> Result<()> {
    saliency.write(&rec.path(SALIENCY_FILE))?;
    rec.produced(SALIENCY_FILE)?;
    rec.produced("saliency.meta")?;
    let png = render(image, saliency, Rendering::HeatmapOverlay, DEFAULT_BLEND)?.to_png()?;
    rec.write("saliency.png", &png)
}

pub fn rise(args: &RiseCmd, global: &Global) -> Result<()> {
    let mut rec = Recorder::create(&args.out)?;
    rec.input(&args.image)?;
    let image = load_rgb(&args.image)?;
    let client = global.connect()?;
    rec.bridge(BridgeInfo::of(&global.bridge, &client));
    let saliency = rise_saliency(&image, &BridgeOracle { client: &client }, &args.rise.config(args.seed))?;
    write_map(&mut rec, &image, &saliency)?;
    println!("wrote {}", rec.path(SALIENCY_FILE).display());
    finish(rec, "rise", Some(args.seed), global, args)
}

#[derive(Args, Debug, Serialize)]
pub struct SteerCmd {
    /// Image to explain
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Scorer checkpoint, normally trained on Q1
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Weight of the scorer against the class probability
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// Blend the raw 1..5 score instead of mapping it to [0, 1]
    #[arg(long)]
    pub raw_score: bool,
    /// Class index given to the scorer [default: the classifier's prediction]
    #[arg(long)]
    pub label: Option<usize>,
    /// Seeds the masks and the perturbation noise
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Perturbation used for the reported faithfulness
    #[arg(long, default_value = "uniform")]
    pub perturbation: PerturbationKind,
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50,60,70,80,90")]
    pub thresholds: Vec<u32>,
    #[command(flatten)]
    pub rise: RiseArgs,
    #[command(flatten)]
    pub embed: EmbedArgs,
}

#[derive(Serialize)]
struct SteerSidecar {
    lambda: f64,
    normalize_score: bool,
    label: usize,
    faithfulness: FaithfulnessReport,
    pasta_score: f64,
}

pub fn steer(args: &SteerCmd, global: &Global) -> Result<()> {
    let mut rec = Recorder::create(&args.out)?;
    rec.input(&args.image)?;
    let image = load_rgb(&args.image)?;
    let checkpoint = load_checkpoint(&args.checkpoint, &mut rec)?;
    if checkpoint.header.question != Some(Question::Q1) {
        log::warn!("checkpoint was trained on {:?}, not Q1", checkpoint.header.question);
    }
    let client = global.connect()?;
    rec.bridge(BridgeInfo::of(&global.bridge, &client));
    let oracle = BridgeOracle { client: &client };
    let num_labels = checkpoint.header.num_labels;
    let label = match args.label {
        Some(l) => l,
        None => predicted_class(&oracle, &image)?,
    };
    if label >= num_labels {
        return Err(invalid(format!("label {label} outside the scorer's {num_labels} classes")));
    }
    let scorer = BridgeScorer {
        client: &client,
        net: &checkpoint.weights,
        label,
        num_labels,
        rendering: args.embed.rendering,
        blend: args.embed.blend,
    };
    let steer = SteerConfig { lambda: args.lambda, normalize_pasta: !args.raw_score };
    let strategy = PerturbationStrategy::new(args.perturbation, args.seed);
    let thresholds = ThresholdSet::new(args.thresholds.clone())?;
    let result = rise_pasta(&image, &oracle, &scorer, &args.rise.config(args.seed), steer, &strategy, &thresholds)?;
    write_map(&mut rec, &image, &result.saliency)?;
    let sidecar = SteerSidecar {
        lambda: args.lambda,
        normalize_score: !args.raw_score,
        label,
        faithfulness: result.faithfulness,
        pasta_score: result.pasta_score,
    };
    rec.write_json("steer.json", &sidecar)?;
    println!(
        "F = {:.4}, P = {:.3}; wrote {}",
        result.faithfulness.faithfulness,
        result.pasta_score,
        rec.path(SALIENCY_FILE).display()
    );
    finish(rec, "steer", Some(args.seed), global, args)
}
