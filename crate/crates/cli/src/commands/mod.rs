mod data;
mod eval;
mod rise;
mod score;
mod serve;
mod train;
mod xai;

use anyhow::Result;
use clap::Subcommand;
use serde::Serialize;

use crate::args::Global;
use crate::run::Recorder;

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a dataset for malformed votes, duplicates, bad ids and missing files
    Validate(data::ValidateArgs),
    /// Generate a seeded synthetic dataset (always embedded with the built-in stub)
    Synth(data::SynthArgs),
    /// Encode every explanation through the bridge into embeddings.jsonl
    Embed(data::EmbedCmd),
    /// Train a scorer for one question on a leakage-free split
    Train(train::TrainArgs),
    /// Evaluate checkpoints on their test split as an MSE/QWK/SCC table
    Eval(eval::EvalArgs),
    /// Faithfulness, sparseness and saliency statistics per explanation
    XaiMetrics(xai::XaiArgs),
    /// Pick the highest-scoring explainer for every image
    Select(score::SelectArgs),
    /// Mean score per classifier backbone and method family
    Report(score::ReportArgs),
    /// RISE saliency map for one image
    Rise(rise::RiseCmd),
    /// RISE with mask weights blended from the scorer and the classifier
    Steer(rise::SteerCmd),
    /// Serve the stub model over stdio or TCP
    #[command(hide = true)]
    StubServe(serve::StubServeArgs),
}

pub fn run(command: &Command, global: &Global) -> Result<()> {
    match command {
        Command::Validate(a) => data::validate(a, global),
        Command::Synth(a) => data::synth(a, global),
        Command::Embed(a) => data::embed(a, global),
        Command::Train(a) => train::train(a, global),
        Command::Eval(a) => eval::eval(a, global),
        Command::XaiMetrics(a) => xai::xai_metrics(a, global),
        Command::Select(a) => score::select(a, global),
        Command::Report(a) => score::report(a, global),
        Command::Rise(a) => rise::rise(a, global),
        Command::Steer(a) => rise::steer(a, global),
        Command::StubServe(a) => serve::stub_serve(a),
    }
}

#[derive(Serialize)]
struct Echo<'a, A: Serialize> {
    global: &'a Global,
    args: &'a A,
}

/// Writes the run manifest with the full configuration echoed.
fn finish<A: Serialize>(rec: Recorder, command: &str, seed: Option<u64>, global: &Global, args: &A) -> Result<()> {
    rec.finish(command, seed, &Echo { global, args })
}
