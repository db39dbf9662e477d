use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AppError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub explainer: String,
    pub pasta_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faithfulness: Option<f64>,
}

/// The explainers available for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub image_id: u32,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub image_id: u32,
    pub index: usize,
    pub explainer: String,
    pub pasta_score: f64,
}

/// Highest-scoring candidate; ties go to the lexicographically first name.
pub fn mixture_select(set: &CandidateSet) -> Result<Selection, AppError> {
    if set.candidates.is_empty() {
        return Err(AppError::Invalid(format!("image {} has no candidates", set.image_id)));
    }
    if let Some(c) = set.candidates.iter().find(|c| !c.pasta_score.is_finite()) {
        return Err(AppError::Invalid(format!("non-finite score for {}", c.explainer)));
    }
    let mut best = 0;
    for (i, c) in set.candidates.iter().enumerate().skip(1) {
        let b = &set.candidates[best];
        if c.pasta_score > b.pasta_score || (c.pasta_score == b.pasta_score && c.explainer < b.explainer) {
            best = i;
        }
    }
    let c = &set.candidates[best];
    Ok(Selection { image_id: set.image_id, index: best, explainer: c.explainer.clone(), pasta_score: c.pasta_score })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub selections: Vec<Selection>,
    /// How often each explainer was chosen.
    pub histogram: BTreeMap<String, usize>,
    /// Mean faithfulness of the chosen candidates, when every one has a value.
    pub selected_faithfulness: Option<f64>,
    /// Mean faithfulness over every candidate that has a value.
    pub pool_faithfulness: Option<f64>,
}

pub fn selection_report(sets: &[CandidateSet]) -> Result<SelectionReport, AppError> {
    let selections = sets.iter().map(mixture_select).collect::<Result<Vec<_>, _>>()?;
    let mut histogram = BTreeMap::new();
    for s in &selections {
        *histogram.entry(s.explainer.clone()).or_insert(0) += 1;
    }
    let chosen: Option<Vec<f64>> =
        sets.iter().zip(&selections).map(|(set, s)| set.candidates[s.index].faithfulness).collect();
    let pool: Vec<f64> = sets.iter().flat_map(|s| s.candidates.iter().filter_map(|c| c.faithfulness)).collect();
    Ok(SelectionReport {
        selected_faithfulness: chosen.and_then(|v| crate::scalar::mean(&v)),
        pool_faithfulness: crate::scalar::mean(&pool),
        selections,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(scores: &[(&str, f64)]) -> CandidateSet {
        CandidateSet {
            image_id: 1,
            candidates: scores
                .iter()
                .map(|(n, s)| Candidate { explainer: n.to_string(), pasta_score: *s, faithfulness: None })
                .collect(),
        }
    }

    #[test]
    fn argmax_and_ties() {
        assert_eq!(mixture_select(&set(&[("a", 3.1), ("b", 4.0), ("c", 2.2)])).unwrap().index, 1);
        assert_eq!(mixture_select(&set(&[("only", 1.0)])).unwrap().explainer, "only");
        assert_eq!(mixture_select(&set(&[("zeta", 4.0), ("alpha", 4.0)])).unwrap().explainer, "alpha");
        assert!(mixture_select(&set(&[])).is_err());
        assert!(mixture_select(&set(&[("a", f64::NAN)])).is_err());
    }

    #[test]
    fn report_counts_and_faithfulness() {
        let mut a = set(&[("gradcam", 4.0), ("lime", 2.0)]);
        a.candidates[0].faithfulness = Some(0.2);
        a.candidates[1].faithfulness = Some(0.1);
        let mut b = set(&[("gradcam", 1.0), ("lime", 2.0)]);
        b.image_id = 2;
        b.candidates[0].faithfulness = Some(0.3);
        b.candidates[1].faithfulness = Some(0.5);
        let r = selection_report(&[a, b]).unwrap();
        assert_eq!(r.histogram["gradcam"], 1);
        assert_eq!(r.histogram["lime"], 1);
        assert!((r.selected_faithfulness.unwrap() - 0.35).abs() < 1e-12);
        assert!((r.pool_faithfulness.unwrap() - 0.275).abs() < 1e-12);
        for s in &r.selections {
            assert!(s.pasta_score >= 2.0);
        }
    }
}
