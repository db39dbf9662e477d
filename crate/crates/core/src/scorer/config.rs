use serde::{Deserialize, Serialize};

use crate::data::Aggregation;

use super::loss::LossWeights;
use super::ScorerError;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub weight_decay: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    pub aggregation: Aggregation,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            hidden: vec![512, 64],
            learning_rate: 2e-6,
            batch_size: 256,
            epochs: 600,
            weight_decay: 1e-6,
            alpha: 1.0,
            beta: 0.001,
            gamma: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            aggregation: Aggregation::Mode,
        }
    }
}

impl ScorerConfig {
    pub fn loss_weights(&self) -> LossWeights {
        LossWeights { alpha: self.alpha, beta: self.beta, gamma: self.gamma }
    }

    pub fn check(&self) -> Result<(), ScorerError> {
        let bad = |m: String| Err(ScorerError::Config(m));
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return bad(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch_size and epochs must be positive".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive".into());
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || self.adam_eps.is_nan() || self.adam_eps <= 0.0 {
            return bad("Adam moments must lie in [0, 1) and eps must be positive".into());
        }
        self.loss_weights().check()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ScorerConfig::default();
        assert_eq!(c.hidden, vec![512, 64]);
        assert_eq!((c.batch_size, c.epochs), (256, 600));
        assert_eq!((c.alpha, c.beta, c.gamma), (1.0, 0.001, 0.01));
        assert_eq!((c.learning_rate, c.weight_decay), (2e-6, 1e-6));
        c.check().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ScorerConfig { learning_rate: 0.0, ..Default::default() }.check().is_err());
        assert!(ScorerConfig { alpha: 0.0, beta: 0.0, gamma: 0.0, ..Default::default() }.check().is_err());
        assert!(ScorerConfig { gamma: -1.0, ..Default::default() }.check().is_err());
        assert!(ScorerConfig { hidden: vec![4, 0], ..Default::default() }.check().is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: ScorerConfig = serde_json::from_str(r#"{"epochs": 3, "seed": 9}"#).unwrap();
        assert_eq!(c.epochs, 3);
        assert_eq!(c.seed, 9);
        assert_eq!(c.batch_size, 256);
    }
}
