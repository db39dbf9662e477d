use serde::{Deserialize, Serialize};

use crate::metrics::{pcc, permutation_p_value, scc, CorrelationStat, StatWarning};

use super::XaiError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub n: usize,
    pub pcc: f64,
    pub pcc_p: f64,
    pub scc: f64,
    pub scc_p: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<StatWarning>,
}

/// Pearson and Spearman correlation between a metric and human scores, with
/// permutation p-values drawn from `seed`.
pub fn correlate_with_human(
    metric: &[f64],
    human: &[f64],
    n_perm: usize,
    seed: u64,
) -> Result<CorrelationReport, XaiError> {
    let p = pcc(metric, human)?;
    let s = scc(metric, human)?;
    let warnings = [p.warning, s.warning].into_iter().flatten().collect();
    Ok(CorrelationReport {
        n: metric.len(),
        pcc: p.value,
        pcc_p: permutation_p_value(metric, human, CorrelationStat::Pcc, n_perm, seed)?,
        scc: s.value,
        scc_p: permutation_p_value(metric, human, CorrelationStat::Scc, n_perm, seed)?,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    #[test]
    fn identical_and_reversed() {
        let h: Vec<f64> = (0..30).map(|i| (i % 5 + 1) as f64 + i as f64 * 0.01).collect();
        let same = correlate_with_human(&h, &h, 200, 1).unwrap();
        assert!((same.pcc - 1.0).abs() < 1e-12 && (same.scc - 1.0).abs() < 1e-12);
        assert!(same.pcc_p < 0.01);
        let neg: Vec<f64> = h.iter().map(|v| -v).collect();
        let anti = correlate_with_human(&neg, &h, 200, 1).unwrap();
        assert!((anti.pcc + 1.0).abs() < 1e-12 && (anti.scc + 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_noise_is_weak() {
        let mut rng = SeededRng::new(21);
        let a: Vec<f64> = (0..400).map(|_| rng.normal()).collect();
        let b: Vec<f64> = (0..400).map(|_| rng.normal()).collect();
        let r = correlate_with_human(&a, &b, 200, 2).unwrap();
        assert!(r.pcc.abs() < 0.15 && r.scc.abs() < 0.15, "{r:?}");
    }
}
