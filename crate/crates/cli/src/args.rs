//! Argument groups shared between commands.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{ArgAction, Args};
use pasta_core::bridge::{BridgeClient, BridgeSpec, EmbeddingCache};
use pasta_core::data::{Aggregation, SplitConfig};
use pasta_core::encoding::Rendering;
use pasta_core::pipeline::EmbedOptions;
use pasta_core::scorer::ScorerConfig;
use pasta_core::xai::{PerturbationKind, PerturbationStrategy, ThresholdSet};
use serde::Serialize;

#[derive(Args, Debug, Clone, Serialize)]
pub struct Global {
    /// Bridge endpoint: `stub`, `exec:<command> [args..]` or `tcp:<host>:<port>`
    #[arg(long, global = true, default_value = "stub")]
    pub bridge: String,
    /// Seconds to wait for each bridge response
    #[arg(long, global = true, default_value_t = 30)]
    pub timeout: u64,
    /// Directory of the content-addressed embedding cache
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Worker threads for parallel stages [default: all cores]
    #[arg(long, global = true)]
    #[serde(skip)]
    pub jobs: Option<usize>,
    /// More log output (repeatable)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    #[serde(skip)]
    pub verbose: u8,
}

impl Global {
    pub fn connect(&self) -> Result<BridgeClient> {
        let spec: BridgeSpec = self.bridge.parse()?;
        let mut client = BridgeClient::connect(&spec, Duration::from_secs(self.timeout))
            .with_context(|| format!("connecting to bridge `{}`", self.bridge))?;
        if let Some(dir) = &self.cache {
            client = client.with_cache(Arc::new(EmbeddingCache::open(dir.clone())?));
        }
        Ok(client)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EmbedArgs {
    /// How a saliency map is drawn before encoding (heatmap|blur)
    #[arg(long, default_value = "heatmap")]
    pub rendering: Rendering,
    /// Heatmap opacity over the image
    #[arg(long, default_value_t = 0.5)]
    pub blend: f64,
    /// Concepts kept in the sentence for concept explanations
    #[arg(long, default_value_t = 15)]
    pub n_top: usize,
    /// Sentence prefix for concept explanations (empty: built-in wording)
    #[arg(long, default_value = "")]
    pub template: String,
}

impl EmbedArgs {
    pub fn options(&self) -> EmbedOptions {
        EmbedOptions { rendering: self.rendering, blend: self.blend, n_top: self.n_top, template: self.template.clone() }
    }
}

/// Scorer hyperparameters.
#[derive(Args, Debug, Clone, Serialize)]
pub struct HyperArgs {
    /// Hidden layer widths
    #[arg(long, value_delimiter = ',', default_value = "512,64")]
    pub hidden: Vec<usize>,
    /// AdamW learning rate
    #[arg(long = "lr", default_value_t = 2e-6)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 600)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub weight_decay: f64,
    /// Weight of the cosine-similarity loss
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Weight of the squared-error loss
    #[arg(long, default_value_t = 0.001)]
    pub beta: f64,
    /// Weight of the pairwise ranking loss
    #[arg(long, default_value_t = 0.01)]
    pub gamma: f64,
    /// How five votes become one target (mode|mean|median)
    #[arg(long, default_value = "mode")]
    pub aggregation: Aggregation,
}

impl HyperArgs {
    pub fn config(&self, seed: u64) -> ScorerConfig {
        ScorerConfig {
            hidden: self.hidden.clone(),
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            weight_decay: self.weight_decay,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            seed,
            aggregation: self.aggregation,
            ..ScorerConfig::default()
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SplitArgs {
    /// Share of image ids and of xai ids drawn for training
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,
    /// Share of the remaining ids drawn for validation
    #[arg(long, default_value_t = 0.5)]
    pub val_fraction: f64,
}

impl SplitArgs {
    pub fn config(&self) -> SplitConfig {
        SplitConfig { train_fraction: self.train_fraction, val_fraction: self.val_fraction }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FaithArgs {
    /// Perturbations for sufficiency/necessity (uniform|gaussian|black)
    #[arg(long = "perturbation", value_delimiter = ',', default_value = "uniform,gaussian,black")]
    pub perturbations: Vec<PerturbationKind>,
    /// Thresholds in percent of pixels
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50,60,70,80,90")]
    pub thresholds: Vec<u32>,
}

impl FaithArgs {
    pub fn strategies(&self, seed: u64) -> Vec<PerturbationStrategy> {
        self.perturbations.iter().map(|k| PerturbationStrategy::new(*k, seed)).collect()
    }

    pub fn threshold_set(&self) -> Result<ThresholdSet> {
        Ok(ThresholdSet::new(self.thresholds.clone())?)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RiseArgs {
    /// Number of random masks
    #[arg(long, default_value_t = 2000)]
    pub masks: usize,
    /// Mask grid cells per side
    #[arg(long, default_value_t = 7)]
    pub grid: usize,
    /// Probability that a grid cell is kept
    #[arg(long, default_value_t = 0.5)]
    pub keep_prob: f64,
    /// Masks generated and evaluated together
    #[arg(long, default_value_t = 64)]
    pub chunk: usize,
}

impl RiseArgs {
    pub fn config(&self, seed: u64) -> pasta_core::apps::RiseConfig {
        pasta_core::apps::RiseConfig {
            n_masks: self.masks,
            grid: self.grid,
            keep_prob: self.keep_prob,
            seed,
            chunk: self.chunk,
        }
    }
}
