use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::DataError;

pub const VOTES_PER_ITEM: usize = 5;
pub const LIKERT_MIN: u8 = 1;
pub const LIKERT_MAX: u8 = 5;

/// How the five annotator votes collapse into one training target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mode,
    Mean,
    Median,
}

impl std::str::FromStr for Aggregation {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mode" => Ok(Self::Mode),
            "mean" => Ok(Self::Mean),
            "median" => Ok(Self::Median),
            other => Err(DataError::Parse(format!("unknown aggregation `{other}`"))),
        }
    }
}

pub fn check_votes(votes: &[u8]) -> Result<(), DataError> {
    if votes.len() != VOTES_PER_ITEM {
        return Err(DataError::VoteCount(votes.len()));
    }
    if let Some(&bad) = votes.iter().find(|v| !(LIKERT_MIN..=LIKERT_MAX).contains(*v)) {
        return Err(DataError::VoteRange(bad));
    }
    Ok(())
}

/// Collapse five Likert votes into a scalar target.
///
/// Tied modes resolve to the candidate nearest the vote mean, then to the
/// lower value.
pub fn aggregate_votes<T: Scalar>(votes: &[u8], method: Aggregation) -> Result<T, DataError> {
    check_votes(votes)?;
    let mean = votes.iter().map(|&v| f64::from(v)).sum::<f64>() / votes.len() as f64;
    let value = match method {
        Aggregation::Mean => mean,
        Aggregation::Median => {
            let mut sorted = votes.to_vec();
            sorted.sort_unstable();
            f64::from(sorted[sorted.len() / 2])
        }
        Aggregation::Mode => {
            let mut counts = [0usize; LIKERT_MAX as usize + 1];
            for &v in votes {
                counts[v as usize] += 1;
            }
            let top = *counts.iter().max().unwrap_or(&0);
            // Ascending scan with strict improvement keeps the lower value on equal distance.
            let mut best: Option<u8> = None;
            for v in LIKERT_MIN..=LIKERT_MAX {
                if counts[v as usize] != top {
                    continue;
                }
                match best {
                    Some(b) if (f64::from(b) - mean).abs() <= (f64::from(v) - mean).abs() => {}
                    _ => best = Some(v),
                }
            }
            f64::from(best.expect("five votes always have a mode"))
        }
    };
    Ok(T::of(value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unique_majority_mode() {
        assert_eq!(aggregate_votes::<f64>(&[4, 4, 2, 5, 4], Aggregation::Mode).unwrap(), 4.0);
    }

    #[test]
    fn symmetric_mean() {
        assert_eq!(aggregate_votes::<f64>(&[1, 2, 3, 4, 5], Aggregation::Mean).unwrap(), 3.0);
    }

    #[test]
    fn tied_mode_prefers_value_near_mean() {
        // modes {2, 5}, mean 3.4: |2-3.4| = 1.4 < |5-3.4| = 1.6
        assert_eq!(aggregate_votes::<f64>(&[2, 2, 5, 5, 3], Aggregation::Mode).unwrap(), 2.0);
        // modes {2, 4} equidistant from mean 3 -> lower
        assert_eq!(aggregate_votes::<f64>(&[2, 2, 4, 4, 3], Aggregation::Mode).unwrap(), 2.0);
        // modes {1,2,3,4,5} all once, mean 3 -> 3
        assert_eq!(aggregate_votes::<f64>(&[5, 4, 3, 2, 1], Aggregation::Mode).unwrap(), 3.0);
        // modes {4, 5}, mean 4.2 -> 4
        assert_eq!(aggregate_votes::<f64>(&[5, 5, 4, 4, 3], Aggregation::Mode).unwrap(), 4.0);
    }

    #[test]
    fn median_is_third_order_statistic() {
        assert_eq!(aggregate_votes::<f32>(&[5, 1, 4, 1, 2], Aggregation::Median).unwrap(), 2.0);
    }

    #[test]
    fn invalid_votes_are_rejected() {
        assert!(matches!(aggregate_votes::<f64>(&[], Aggregation::Mode), Err(DataError::VoteCount(0))));
        assert!(matches!(aggregate_votes::<f64>(&[1, 2, 3, 4], Aggregation::Mean), Err(DataError::VoteCount(4))));
        assert!(matches!(aggregate_votes::<f64>(&[1, 2, 3, 4, 6], Aggregation::Mean), Err(DataError::VoteRange(6))));
        assert!(matches!(aggregate_votes::<f64>(&[0, 2, 3, 4, 5], Aggregation::Mode), Err(DataError::VoteRange(0))));
    }

    proptest! {
        #[test]
        fn aggregates_stay_within_votes(votes in proptest::collection::vec(1u8..=5, 5)) {
            let mode: f64 = aggregate_votes(&votes, Aggregation::Mode).unwrap();
            prop_assert!(votes.contains(&(mode as u8)));
            let mean: f64 = aggregate_votes(&votes, Aggregation::Mean).unwrap();
            let lo = *votes.iter().min().unwrap() as f64;
            let hi = *votes.iter().max().unwrap() as f64;
            prop_assert!(mean >= lo && mean <= hi);
            let mut sorted = votes.clone();
            sorted.sort();
            let median: f64 = aggregate_votes(&votes, Aggregation::Median).unwrap();
            prop_assert_eq!(median, sorted[2] as f64);
        }
    }
}
