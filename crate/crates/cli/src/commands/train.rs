use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use pasta_core::data::{load_manifest, DatasetManifest, PairKey, Question, SplitAssignment, SplitConfig};
use pasta_core::pipeline::build_samples;
use pasta_core::scorer::{train as fit, TrainingData};
use pasta_core::{Sample, ScorerCheckpoint};
use serde::Serialize;

use super::finish;
use crate::args::{EmbedArgs, Global, HyperArgs, SplitArgs};
use crate::exit::invalid;
use crate::run::Recorder;
use crate::scoring::obtain_embeddings;

pub const CHECKPOINT_FILE: &str = "checkpoint.ckpt";

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "Q1")]
    pub question: Question,
    /// Seeds the split, the initialization and the batch order
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Precomputed embeddings.jsonl; embeds through the bridge when absent
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub embed: EmbedArgs,
}

/// Split over the pairs annotated for `question`.
pub fn question_split(manifest: &DatasetManifest, question: Question, seed: u64, config: SplitConfig) -> Result<SplitAssignment> {
    let mut pairs: Vec<PairKey> = manifest.records_for(question).map(|r| r.pair()).collect();
    if pairs.is_empty() {
        return Err(invalid(format!("no annotations for {question}")));
    }
    pairs.sort();
    pairs.dedup();
    Ok(SplitAssignment::build(&pairs, seed, config)?)
}

/// Train, validation and test samples in that order.
pub fn partition(samples: Vec<Sample>, split: &SplitAssignment) -> [Vec<Sample>; 3] {
    let mut parts: [Vec<Sample>; 3] = Default::default();
    for s in samples {
        let slot = if split.train.contains(s.pair) {
            0
        } else if split.val.contains(s.pair) {
            1
        } else if split.test.contains(s.pair) {
            2
        } else {
            continue;
        };
        parts[slot].push(s);
    }
    parts
}

pub fn train(args: &TrainArgs, global: &Global) -> Result<()> {
    let manifest = load_manifest(&args.data)?;
    let mut rec = Recorder::create(&args.out)?;
    rec.dataset(&manifest)?;
    let embeddings = obtain_embeddings(global, &manifest, args.embeddings.as_deref(), &args.embed, &mut rec)?;
    let split = question_split(&manifest, args.question, args.seed, args.split.config())?;
    let samples = build_samples::<f32>(&manifest, &embeddings, args.question, args.hyper.aggregation)?;
    let [train_set, val_set, test_set] = partition(samples, &split);
    for (name, part) in [("train", &train_set), ("validation", &val_set), ("test", &test_set)] {
        if part.is_empty() {
            return Err(invalid(format!("{name} split is empty; the dataset is too small for these fractions")));
        }
    }
    let data = TrainingData::from_samples(&train_set, &val_set, &test_set)?;
    let config = args.hyper.config(args.seed);
    let (net, report) = fit(&data, &config)?;
    let checkpoint: ScorerCheckpoint =
        ScorerCheckpoint::new(net, config, Some(args.question), Some(split.digest()), manifest.num_labels());

    rec.write(CHECKPOINT_FILE, &checkpoint.to_bytes())?;
    rec.write_json("train_report.json", &report)?;
    rec.write_json("split.json", &split)?;
    println!(
        "{}: train {} / val {} / test {}; best epoch {}; test MSE {:.4} QWK {:.4} SCC {:.4}",
        args.question,
        train_set.len(),
        val_set.len(),
        test_set.len(),
        report.best_epoch,
        report.test.mse,
        report.test.qwk,
        report.test.scc
    );
    println!("checkpoint {} sha256 {}", rec.path(CHECKPOINT_FILE).display(), rec.digest(CHECKPOINT_FILE).unwrap_or(""));
    finish(rec, "train", Some(args.seed), global, args)
}
