//! Agreement and correlation metrics between predicted and reference scores.

mod agreement;
mod correlation;
mod report;

pub use agreement::{agreement_slots, discretize, inter_annotator_agreement, mse, qwk, AgreementMetric, LIKERT_CATEGORIES};
pub use correlation::{average_ranks, pcc, permutation_p_value, scc, CorrelationStat};
pub use report::{Divergence, MetricRow, QuestionTable, RunSummary};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("category {value} outside 1..={categories}")]
    Category { value: u8, categories: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// Condition under which a statistic fell back to its conventional value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatWarning {
    /// Chance agreement is total, so kappa's denominator vanished.
    DegenerateKappa,
    /// One of the inputs has no spread.
    ZeroVariance,
}

/// A statistic together with an optional degeneracy flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat<T> {
    pub value: T,
    pub warning: Option<StatWarning>,
}

impl<T> Stat<T> {
    pub fn clean(value: T) -> Self {
        Self { value, warning: None }
    }

    pub fn flagged(value: T, warning: StatWarning) -> Self {
        Self { value, warning: Some(warning) }
    }
}

fn same_len<A, B>(a: &[A], b: &[B]) -> Result<(), MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}
