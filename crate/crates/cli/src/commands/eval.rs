use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use pasta_core::data::{load_manifest, AnnotationRecord, Question, VOTES_PER_ITEM};
use pasta_core::metrics::{inter_annotator_agreement, AgreementMetric, QuestionTable, RunSummary};
use pasta_core::pipeline::build_samples;
use pasta_core::scorer::{evaluate, TestMetrics};
use serde::Serialize;

use super::finish;
use super::train::{partition, question_split};
use crate::args::{EmbedArgs, Global, SplitArgs};
use crate::exit::invalid;
use crate::run::Recorder;
use crate::scoring::{load_checkpoint, obtain_embeddings};

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Checkpoints to evaluate; several for one question count as repeated runs
    #[arg(long = "checkpoint", required = true, num_args = 1..)]
    pub checkpoints: Vec<PathBuf>,
    /// Row label for the scorer
    #[arg(long, default_value = "pasta")]
    pub model: String,
    /// Reference table (report.json layout) to compare against
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub embed: EmbedArgs,
}

#[derive(Serialize)]
struct RunRow {
    checkpoint: String,
    question: Question,
    seed: u64,
    metrics: TestMetrics,
}

const METRICS: [(&str, AgreementMetric); 3] =
    [("MSE", AgreementMetric::Mse), ("QWK", AgreementMetric::Qwk), ("SCC", AgreementMetric::Scc)];

fn metric_value(m: &TestMetrics, which: AgreementMetric) -> f64 {
    match which {
        AgreementMetric::Mse => m.mse,
        AgreementMetric::Qwk => m.qwk,
        AgreementMetric::Scc => m.scc,
    }
}

pub fn eval(args: &EvalArgs, global: &Global) -> Result<()> {
    let manifest = load_manifest(&args.data)?;
    let mut rec = Recorder::create(&args.out)?;
    rec.dataset(&manifest)?;
    let embeddings = obtain_embeddings(global, &manifest, args.embeddings.as_deref(), &args.embed, &mut rec)?;

    let mut runs = Vec::new();
    let mut by_question: BTreeMap<Question, Vec<TestMetrics>> = BTreeMap::new();
    for path in &args.checkpoints {
        let checkpoint = load_checkpoint(path, &mut rec)?;
        let header = &checkpoint.header;
        let question = header.question.ok_or_else(|| invalid(format!("{} names no question", path.display())))?;
        let split = question_split(&manifest, question, header.seed, args.split.config())?;
        if header.split_digest.as_deref().is_some_and(|d| d != split.digest()) {
            return Err(invalid(format!(
                "{}: split differs from the one used in training; pass the same --train-fraction/--val-fraction",
                path.display()
            )));
        }
        let samples = build_samples::<f32>(&manifest, &embeddings, question, header.config.aggregation)?;
        let [_, _, test] = partition(samples, &split);
        if test.is_empty() {
            return Err(invalid(format!("{}: empty test split", path.display())));
        }
        let xs = test.iter().map(|s| s.input()).collect::<Result<Vec<_>, _>>()?;
        let ys: Vec<f32> = test.iter().map(|s| s.target).collect();
        let metrics = evaluate(&checkpoint.weights, &xs, &ys).with_context(|| format!("evaluating {}", path.display()))?;
        by_question.entry(question).or_default().push(metrics);
        runs.push(RunRow { checkpoint: path.display().to_string(), question, seed: header.seed, metrics });
    }

    let mut table = QuestionTable::default();
    for (question, list) in &by_question {
        for (name, which) in METRICS {
            let values: Vec<f64> = list.iter().map(|m| metric_value(m, which)).collect();
            if let Some(summary) = RunSummary::from_runs(&values) {
                table.set(name, &args.model, *question, summary);
            }
        }
        let records: Vec<AnnotationRecord> = manifest.records_for(*question).cloned().collect();
        for (name, which) in METRICS {
            match inter_annotator_agreement::<f64>(&records, which) {
                Ok((mean, std)) => table.set(name, "human", *question, RunSummary { mean, std, runs: VOTES_PER_ITEM }),
                Err(e) => log::warn!("{question} human {name}: {e}"),
            }
        }
    }

    rec.write_json("report.json", &table)?;
    let text = table.render_text();
    rec.write("report.txt", text.as_bytes())?;
    rec.write_jsonl("runs.jsonl", &runs)?;
    print!("{text}");
    if let Some(reference) = &args.reference {
        rec.input(reference)?;
        let bytes = fs::read(reference)?;
        let reference_table: QuestionTable =
            serde_json::from_slice(&bytes).map_err(|e| invalid(format!("{}: {e}", reference.display())))?;
        let divergences = table.divergences(&reference_table);
        for d in &divergences {
            println!(
                "divergence: {} {} {}: {:.4} vs {:.4} ± {:.4}",
                d.metric, d.model, d.question, d.achieved, d.reference.mean, d.reference.std
            );
        }
        rec.write_json("divergences.json", &divergences)?;
    }
    finish(rec, "eval", None, global, args)
}
