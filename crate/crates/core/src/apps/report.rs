use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AppError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub backbone: String,
    pub family: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackboneRow {
    pub backbone: String,
    pub family: String,
    pub n: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackboneReport {
    pub rows: Vec<BackboneRow>,
    /// Requested groups that had no samples.
    pub missing: Vec<(String, String)>,
}

/// Mean score per `(backbone, family)`, sorted by key. Groups listed in
/// `expected` but absent from `samples` are omitted and reported as missing.
pub fn backbone_report(samples: &[ScoredSample], expected: &[(String, String)]) -> Result<BackboneReport, AppError> {
    let mut groups: BTreeMap<(&str, &str), (usize, f64)> = BTreeMap::new();
    for s in samples {
        if !s.score.is_finite() {
            return Err(AppError::Invalid(format!("non-finite score in {}/{}", s.backbone, s.family)));
        }
        let g = groups.entry((&s.backbone, &s.family)).or_insert((0, 0.0));
        g.0 += 1;
        g.1 += s.score;
    }
    let missing: Vec<(String, String)> = expected
        .iter()
        .filter(|(b, f)| !groups.contains_key(&(b.as_str(), f.as_str())))
        .cloned()
        .collect();
    for (b, f) in &missing {
        log::warn!("no scored samples for backbone {b}, family {f}");
    }
    let rows = groups
        .into_iter()
        .map(|((b, f), (n, total))| BackboneRow { backbone: b.into(), family: f.into(), n, mean: total / n as f64 })
        .collect();
    Ok(BackboneReport { rows, missing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn sample(b: &str, f: &str, score: f64) -> ScoredSample {
        ScoredSample { backbone: b.into(), family: f.into(), score }
    }

    #[test]
    fn single_group_mean() {
        let r = backbone_report(&[sample("vit_b", "saliency", 2.0), sample("vit_b", "saliency", 4.0)], &[]).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].mean, 3.0);
        assert_eq!(r.rows[0].n, 2);
    }

    #[test]
    fn empty_group_is_reported_missing() {
        let expected = vec![("vit_b".to_string(), "concept".to_string())];
        let r = backbone_report(&[sample("vit_b", "saliency", 2.0)], &expected).unwrap();
        assert_eq!(r.missing, expected);
        assert!(r.rows.iter().all(|row| row.family != "concept"));
    }

    #[test]
    fn matches_brute_force_group_by() {
        let mut rng = SeededRng::new(8);
        let backbones = ["resnet50", "vit_b", "vit_l"];
        let families = ["saliency", "concept"];
        let samples: Vec<ScoredSample> = (0..500)
            .map(|_| sample(backbones[rng.below(3)], families[rng.below(2)], rng.uniform(1.0, 5.0)))
            .collect();
        let r = backbone_report(&samples, &[]).unwrap();
        for row in &r.rows {
            let hits: Vec<f64> = samples
                .iter()
                .filter(|s| s.backbone == row.backbone && s.family == row.family)
                .map(|s| s.score)
                .collect();
            assert_eq!(hits.len(), row.n);
            assert!((hits.iter().sum::<f64>() / hits.len() as f64 - row.mean).abs() < 1e-12);
        }
        assert_eq!(r.rows.iter().map(|r| r.n).sum::<usize>(), 500);
    }
}
