use serde::{Deserialize, Serialize};

use crate::encoding::EmbeddedSample;
use crate::metrics::{discretize, mse, qwk, scc, LIKERT_CATEGORIES};
use crate::rng::SeededRng;
use crate::scalar::Scalar;

use super::adam::AdamW;
use super::config::ScorerConfig;
use super::loss::{loss_composite, LossWeights};
use super::mlp::{backward, Mlp};
use super::ScorerError;

/// Inputs (`embedding || onehot(label)`) and targets for each split.
#[derive(Debug, Clone, Default)]
pub struct TrainingData<T> {
    pub train: (Vec<Vec<T>>, Vec<T>),
    pub val: (Vec<Vec<T>>, Vec<T>),
    pub test: (Vec<Vec<T>>, Vec<T>),
}

fn unzip_samples<T: Scalar>(samples: &[EmbeddedSample<T>]) -> Result<(Vec<Vec<T>>, Vec<T>), ScorerError> {
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    for s in samples {
        xs.push(s.input().map_err(|e| ScorerError::Config(e.to_string()))?);
        ys.push(s.target);
    }
    Ok((xs, ys))
}

impl<T: Scalar> TrainingData<T> {
    pub fn from_samples(
        train: &[EmbeddedSample<T>],
        val: &[EmbeddedSample<T>],
        test: &[EmbeddedSample<T>],
    ) -> Result<Self, ScorerError> {
        Ok(Self { train: unzip_samples(train)?, val: unzip_samples(val)?, test: unzip_samples(test)? })
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.train.0.first().map(Vec::len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestMetrics {
    pub n: usize,
    pub mse: f64,
    pub qwk: f64,
    pub scc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochLoss>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub test: TestMetrics,
}

fn full_loss<T: Scalar>(net: &Mlp<T>, xs: &[Vec<T>], ys: &[T], weights: LossWeights) -> Result<T, ScorerError> {
    let preds = net.forward_batch(xs)?;
    Ok(loss_composite(ys, &preds, weights)?.total)
}

/// MSE, QWK and SCC of clamped predictions against targets. QWK compares
/// discretized predictions with discretized targets.
pub fn evaluate<T: Scalar>(net: &Mlp<T>, xs: &[Vec<T>], ys: &[T]) -> Result<TestMetrics, ScorerError> {
    let preds = net.predict_batch(xs)?;
    let kappa = qwk::<f64>(&discretize(ys), &discretize(&preds), LIKERT_CATEGORIES)?;
    let rank = scc(ys, &preds)?;
    Ok(TestMetrics { n: xs.len(), mse: mse(ys, &preds)?.as_f64(), qwk: kappa.value, scc: rank.value.as_f64() })
}

/// Minibatch AdamW on the composite loss. The weights with the lowest
/// validation loss are returned. Single-threaded apart from evaluation, and
/// bit-reproducible for a given seed.
pub fn train<T: Scalar>(data: &TrainingData<T>, config: &ScorerConfig) -> Result<(Mlp<T>, TrainReport), ScorerError> {
    config.check()?;
    let (train_x, train_y) = &data.train;
    let (val_x, val_y) = &data.val;
    let (test_x, test_y) = &data.test;
    for (name, len) in [("train", train_x.len()), ("validation", val_x.len()), ("test", test_x.len())] {
        if len == 0 {
            return Err(ScorerError::EmptySplit(name));
        }
    }
    let input_dim = train_x[0].len();
    let weights = config.loss_weights();
    let mut net = Mlp::<T>::new(input_dim, &config.hidden, config.seed)?;
    let mut opt = AdamW::<T>::new(
        net.num_params(),
        config.learning_rate,
        config.adam_beta1,
        config.adam_beta2,
        config.adam_eps,
        config.weight_decay,
    );

    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut best = net.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut history = Vec::with_capacity(config.epochs);
    let mut batch_x = Vec::with_capacity(config.batch_size);
    let mut batch_y = Vec::with_capacity(config.batch_size);

    for epoch in 1..=config.epochs {
        SeededRng::stream(config.seed, epoch as u64).shuffle(&mut order);
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            batch_x.clear();
            batch_y.clear();
            batch_x.extend(chunk.iter().map(|&i| train_x[i].clone()));
            batch_y.extend(chunk.iter().map(|&i| train_y[i]));
            let (terms, grad) = match backward(&net, &batch_x, &batch_y, weights) {
                Ok(v) => v,
                Err(ScorerError::NonFiniteForward | ScorerError::ZeroNorm) => {
                    return Err(ScorerError::NonFiniteLoss { epoch, batch: b })
                }
                Err(e) => return Err(e),
            };
            if !terms.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(ScorerError::NonFiniteLoss { epoch, batch: b });
            }
            opt.update(net.params_mut(), &grad);
        }
        let train_loss = full_loss(&net, train_x, train_y, weights)?.as_f64();
        let val_loss = full_loss(&net, val_x, val_y, weights)?.as_f64();
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(ScorerError::NonFiniteLoss { epoch, batch: order.len().div_ceil(config.batch_size) });
        }
        history.push(EpochLoss { epoch, train_loss, val_loss });
        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best.clone_from(&net);
        }
        log::debug!("epoch {epoch}: train {train_loss:.6} val {val_loss:.6}");
    }

    let test = evaluate(&best, test_x, test_y)?;
    Ok((best, TrainReport { epochs: history, best_epoch, best_val_loss: best_val, test }))
}
