use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use pasta_core::data::{aggregate_votes, load_manifest, Aggregation, PairKey, Question};
use pasta_core::xai::{aggregate_by_explainer, correlate_with_human, run_batch, BatchConfig, CorrelationReport, XaiRecord};
use pasta_core::bridge::BridgeOracle;
use serde::Serialize;

use super::finish;
use crate::args::{FaithArgs, Global};
use crate::run::{BridgeInfo, Recorder};

#[derive(Args, Debug, Serialize)]
pub struct XaiArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Seeds the perturbation noise and the permutation tests
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Permutations per correlation p-value
    #[arg(long, default_value_t = 1000)]
    pub permutations: usize,
    #[command(flatten)]
    pub faith: FaithArgs,
}

#[derive(Serialize)]
struct CorrelationRow {
    metric: String,
    question: Question,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<CorrelationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Extracts one per-explanation statistic, labelled for the correlation table.
type MetricFn = Box<dyn Fn(&XaiRecord) -> f64>;

fn summary_table(records: &[XaiRecord]) -> String {
    let summary = aggregate_by_explainer(records);
    let strategies: Vec<String> = summary.first().map(|s| s.faithfulness.keys().cloned().collect()).unwrap_or_default();
    let mut out = format!("{:<24} {:>5}", "explainer", "n");
    for s in &strategies {
        let _ = write!(out, " {s:>15}");
    }
    out.push_str(&format!(" {:>8}\n", "gini"));
    for row in &summary {
        let _ = write!(out, "{:<24} {:>5}", row.explainer, row.n);
        for s in &strategies {
            let _ = write!(out, " {:>15.4}", row.faithfulness.get(s).copied().unwrap_or(f64::NAN));
        }
        let _ = writeln!(out, " {:>8.4}", row.gini);
    }
    out
}

pub fn xai_metrics(args: &XaiArgs, global: &Global) -> Result<()> {
    let manifest = load_manifest(&args.data)?;
    let mut rec = Recorder::create(&args.out)?;
    rec.dataset(&manifest)?;
    let client = global.connect()?;
    rec.bridge(BridgeInfo::of(&global.bridge, &client));
    let config = BatchConfig { strategies: args.faith.strategies(args.seed), thresholds: args.faith.threshold_set()? };
    let records = run_batch(&manifest, &BridgeOracle { client: &client }, &config)?;

    // Human score of a pair: mean vote of its record for each question.
    let mut human: BTreeMap<Question, BTreeMap<PairKey, f64>> = BTreeMap::new();
    for r in &manifest.records {
        human.entry(r.question).or_default().insert(r.pair(), aggregate_votes(&r.votes, Aggregation::Mean)?);
    }
    let mut metrics: Vec<(String, MetricFn)> = config
        .strategies
        .iter()
        .map(|s| {
            let name = s.kind.name().to_string();
            let key = name.clone();
            (format!("faithfulness/{name}"), Box::new(move |r: &XaiRecord| r.faithfulness[&key].faithfulness) as Box<_>)
        })
        .collect();
    metrics.push(("gini".into(), Box::new(|r: &XaiRecord| r.gini)));

    let mut correlations = Vec::new();
    for (question, scores) in &human {
        let matched: Vec<(&XaiRecord, f64)> =
            records.iter().filter_map(|r| scores.get(&r.pair()).map(|h| (r, *h))).collect();
        let h: Vec<f64> = matched.iter().map(|(_, h)| *h).collect();
        for (name, value) in &metrics {
            let m: Vec<f64> = matched.iter().map(|(r, _)| value(r)).collect();
            let (result, error) = match correlate_with_human(&m, &h, args.permutations, args.seed) {
                Ok(c) => (Some(c), None),
                Err(e) => (None, Some(e.to_string())),
            };
            correlations.push(CorrelationRow { metric: name.clone(), question: *question, result, error });
        }
    }

    rec.write_jsonl("xai_metrics.jsonl", &records)?;
    rec.write_json("explainer_summary.json", &aggregate_by_explainer(&records))?;
    let table = summary_table(&records);
    rec.write("explainer_summary.txt", table.as_bytes())?;
    rec.write_json("correlations.json", &correlations)?;
    print!("{table}");
    finish(rec, "xai-metrics", Some(args.seed), global, args)
}
