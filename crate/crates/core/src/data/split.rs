use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::rng::SeededRng;

use super::manifest::PairKey;
use super::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Share of image ids and of xai ids selected for training.
    pub train_fraction: f64,
    /// Share of the ids left after training selection that go to validation.
    pub val_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train_fraction: 0.7, val_fraction: 0.5 }
    }
}

impl SplitConfig {
    pub fn check(&self) -> Result<(), DataError> {
        for (name, f) in [("train_fraction", self.train_fraction), ("val_fraction", self.val_fraction)] {
            if !(f > 0.0 && f < 1.0) {
                return Err(DataError::Config(format!("{name} must lie in (0, 1), got {f}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPart {
    pub image_ids: BTreeSet<u32>,
    pub xai_ids: BTreeSet<u32>,
    pub pairs: Vec<PairKey>,
}

impl SplitPart {
    /// Membership requires both ids to have been selected for this part.
    pub fn admits(&self, pair: PairKey) -> bool {
        self.image_ids.contains(&pair.image_id) && self.xai_ids.contains(&pair.xai_id)
    }

    pub fn contains(&self, pair: PairKey) -> bool {
        self.pairs.binary_search(&pair).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub config: SplitConfig,
    pub train: SplitPart,
    pub val: SplitPart,
    pub test: SplitPart,
    pub discarded: usize,
}

fn take_share(ids: &[u32], fraction: f64) -> usize {
    ((ids.len() as f64) * fraction).round().clamp(0.0, ids.len() as f64) as usize
}

impl SplitAssignment {
    /// Leakage-free split: ids are partitioned first (train, then val/test from
    /// the remainder), and a pair lands in a part only when both of its ids
    /// were drawn for that part. Everything else is discarded.
    pub fn build(pairs: &[PairKey], seed: u64, config: SplitConfig) -> Result<Self, DataError> {
        config.check()?;
        if pairs.is_empty() {
            return Err(DataError::Config("cannot split an empty manifest".into()));
        }
        let mut images: Vec<u32> = pairs.iter().map(|p| p.image_id).collect::<BTreeSet<_>>().into_iter().collect();
        let mut xais: Vec<u32> = pairs.iter().map(|p| p.xai_id).collect::<BTreeSet<_>>().into_iter().collect();

        let mut rng = SeededRng::new(seed);
        rng.shuffle(&mut images);
        rng.shuffle(&mut xais);

        let (train_img, rest_img) = images.split_at(take_share(&images, config.train_fraction));
        let (train_xai, rest_xai) = xais.split_at(take_share(&xais, config.train_fraction));
        let (val_img, test_img) = rest_img.split_at(take_share(rest_img, config.val_fraction));
        let (val_xai, test_xai) = rest_xai.split_at(take_share(rest_xai, config.val_fraction));

        let part = |img: &[u32], xai: &[u32]| SplitPart {
            image_ids: img.iter().copied().collect(),
            xai_ids: xai.iter().copied().collect(),
            pairs: Vec::new(),
        };
        let mut train = part(train_img, train_xai);
        let mut val = part(val_img, val_xai);
        let mut test = part(test_img, test_xai);

        let mut unique: Vec<PairKey> = pairs.to_vec();
        unique.sort();
        unique.dedup();
        let mut discarded = 0;
        for pair in unique {
            if train.admits(pair) {
                train.pairs.push(pair);
            } else if val.admits(pair) {
                val.pairs.push(pair);
            } else if test.admits(pair) {
                test.pairs.push(pair);
            } else {
                discarded += 1;
            }
        }
        log::info!(
            "split seed {seed}: train {} / val {} / test {} pairs, {discarded} discarded",
            train.pairs.len(),
            val.pairs.len(),
            test.pairs.len()
        );
        Ok(Self { seed, config, train, val, test, discarded })
    }

    /// Hex SHA-256 over the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("split serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
