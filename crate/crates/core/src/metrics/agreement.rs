use serde::{Deserialize, Serialize};

use crate::data::{aggregate_votes, AnnotationRecord, Aggregation, VOTES_PER_ITEM};
use crate::scalar::{mean_std, Scalar};

use super::correlation::scc;
use super::{same_len, MetricError, Stat, StatWarning};

pub const LIKERT_CATEGORIES: usize = 5;

pub fn mse<T: Scalar>(truth: &[T], pred: &[T]) -> Result<T, MetricError> {
    same_len(truth, pred)?;
    if truth.is_empty() {
        return Err(MetricError::TooShort { needed: 1, got: 0 });
    }
    let sum: T = truth.iter().zip(pred).map(|(&t, &p)| (t - p) * (t - p)).sum();
    Ok(sum / T::of_usize(truth.len()))
}

/// Clamp to `[1, 5]` and round half away from zero.
pub fn discretize<T: Scalar>(values: &[T]) -> Vec<u8> {
    values
        .iter()
        .map(|&v| {
            let v = v.as_f64();
            let v = if v.is_nan() { 1.0 } else { v.clamp(1.0, LIKERT_CATEGORIES as f64) };
            v.round() as u8
        })
        .collect()
}

/// Quadratic weighted kappa over categories `1..=categories`.
///
/// When chance agreement is already total (`1 - sum(w E) < 1e-12`) the value
/// is 1 if observed equals expected and 0 otherwise, flagged as degenerate.
pub fn qwk<T: Scalar>(truth: &[u8], pred: &[u8], categories: usize) -> Result<Stat<T>, MetricError> {
    same_len(truth, pred)?;
    if truth.is_empty() {
        return Err(MetricError::TooShort { needed: 1, got: 0 });
    }
    if categories < 2 {
        return Err(MetricError::Invalid("kappa needs at least two categories".into()));
    }
    let k = categories;
    for &v in truth.iter().chain(pred) {
        if v == 0 || v as usize > k {
            return Err(MetricError::Category { value: v, categories: k });
        }
    }
    let n = truth.len() as f64;
    let mut observed = vec![0.0f64; k * k];
    let mut hist_t = vec![0.0f64; k];
    let mut hist_p = vec![0.0f64; k];
    for (&a, &b) in truth.iter().zip(pred) {
        let (a, b) = (a as usize - 1, b as usize - 1);
        observed[a * k + b] += 1.0;
        hist_t[a] += 1.0;
        hist_p[b] += 1.0;
    }
    let denom_w = ((k - 1) * (k - 1)) as f64;
    let (mut wo, mut we) = (0.0, 0.0);
    let mut same = true;
    for i in 0..k {
        for j in 0..k {
            let w = 1.0 - ((i as f64 - j as f64).powi(2)) / denom_w;
            let o = observed[i * k + j] / n;
            let e = hist_t[i] * hist_p[j] / (n * n);
            wo += w * o;
            we += w * e;
            if (o - e).abs() > 1e-12 {
                same = false;
            }
        }
    }
    let denom = 1.0 - we;
    if denom < 1e-12 {
        let value = if same { 1.0 } else { 0.0 };
        return Ok(Stat::flagged(T::of(value), StatWarning::DegenerateKappa));
    }
    Ok(Stat::clean(T::of((wo - we) / denom)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgreementMetric {
    Mse,
    Qwk,
    Scc,
}

impl std::str::FromStr for AgreementMetric {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(Self::Mse),
            "qwk" => Ok(Self::Qwk),
            "scc" => Ok(Self::Scc),
            other => Err(MetricError::Invalid(format!("unknown metric `{other}`"))),
        }
    }
}

/// Expected agreement between a random annotator and the mode: the mean and
/// population standard deviation of [`agreement_slots`].
pub fn inter_annotator_agreement<T: Scalar>(
    records: &[AnnotationRecord],
    metric: AgreementMetric,
) -> Result<(T, T), MetricError> {
    Ok(mean_std(&agreement_slots::<T>(records, metric)?).expect("five slots"))
}

/// Each vote slot compared against the per-record mode over all records.
pub fn agreement_slots<T: Scalar>(
    records: &[AnnotationRecord],
    metric: AgreementMetric,
) -> Result<Vec<T>, MetricError> {
    if records.len() < 2 {
        return Err(MetricError::TooShort { needed: 2, got: records.len() });
    }
    let modes: Vec<T> = records
        .iter()
        .map(|r| aggregate_votes::<T>(&r.votes, Aggregation::Mode))
        .collect::<Result<_, _>>()
        .map_err(|e| MetricError::Invalid(e.to_string()))?;
    let mode_cats: Vec<u8> = modes.iter().map(|m| m.as_f64() as u8).collect();
    let mut per_slot = Vec::with_capacity(VOTES_PER_ITEM);
    for slot in 0..VOTES_PER_ITEM {
        let cats: Vec<u8> = records.iter().map(|r| r.votes[slot]).collect();
        let slot_values: Vec<T> = cats.iter().map(|&v| T::of(f64::from(v))).collect();
        let value = match metric {
            AgreementMetric::Mse => mse(&slot_values, &modes)?,
            AgreementMetric::Qwk => qwk::<T>(&cats, &mode_cats, LIKERT_CATEGORIES)?.value,
            AgreementMetric::Scc => scc(&slot_values, &modes)?.value,
        };
        per_slot.push(value);
    }
    Ok(per_slot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Question;
    use proptest::prelude::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0f64, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0f64, 2.0], &[2.0, 2.0]).unwrap(), 0.5);
        assert_eq!(mse(&[1.0f32, 5.0], &[5.0, 1.0]).unwrap(), 16.0);
        assert_eq!(mse(&[1.0f64], &[1.0, 2.0]), Err(MetricError::LengthMismatch(1, 2)));
    }

    #[test]
    fn qwk_identity_and_degenerate() {
        let x = [1u8, 2, 3, 4, 5, 3];
        let s = qwk::<f64>(&x, &x, 5).unwrap();
        assert!((s.value - 1.0).abs() < 1e-15);
        assert!(s.warning.is_none());
        let c = [3u8; 6];
        let s = qwk::<f64>(&c, &c, 5).unwrap();
        assert_eq!(s.value, 1.0);
        assert_eq!(s.warning, Some(StatWarning::DegenerateKappa));
        assert!(matches!(qwk::<f64>(&[6], &[1], 5), Err(MetricError::Category { value: 6, .. })));
    }

    #[test]
    fn qwk_hand_value() {
        // truth [1,2], pred [2,1] with k=5: O off-diagonal 1/2 each, E all 1/4 on the
        // 2x2 block. w(1,2) = 1 - 1/16. sum wO = 15/16, sum wE = (2 + 2*15/16)/4 = 31/32.
        let s = qwk::<f64>(&[1, 2], &[2, 1], 5).unwrap();
        let expected = (15.0 / 16.0 - 31.0 / 32.0) / (1.0 - 31.0 / 32.0);
        assert!((s.value - expected).abs() < 1e-12);
        assert!((s.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn discretize_clamps_and_rounds() {
        assert_eq!(discretize(&[0.2f64, 1.5, 2.49, 4.5, 9.0, f64::NAN]), vec![1, 2, 2, 5, 5, 1]);
    }

    fn rec(votes: [u8; 5]) -> AnnotationRecord {
        AnnotationRecord {
            image_id: 1,
            xai_id: 1,
            question: Question::Q1,
            votes: votes.to_vec(),
            predicted_label: 0,
            dataset_name: String::new(),
            backbone: String::new(),
            explainer_name: String::new(),
        }
    }

    #[test]
    fn unanimous_annotators_agree_perfectly() {
        let records = vec![rec([3; 5]), rec([4; 5]), rec([1; 5])];
        let (m, s) = inter_annotator_agreement::<f64>(&records, AgreementMetric::Mse).unwrap();
        assert_eq!((m, s), (0.0, 0.0));
        let (m, _) = inter_annotator_agreement::<f64>(&records, AgreementMetric::Qwk).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_dissenter_on_one_record() {
        // record 1 mode 4, slot 2 votes 2: squared error 4 over two records = 2 for that slot.
        let records = vec![rec([4, 4, 2, 4, 4]), rec([3; 5])];
        let (m, s) = inter_annotator_agreement::<f64>(&records, AgreementMetric::Mse).unwrap();
        assert!((m - 0.4).abs() < 1e-15);
        // slots [0,0,2,0,0]: population variance (4*0.16 + 2.56)/5 = 0.64
        assert!((s - 0.8).abs() < 1e-15);
        assert!(inter_annotator_agreement::<f64>(&records[..1], AgreementMetric::Mse).is_err());
    }

    proptest! {
        #[test]
        fn qwk_and_mse_are_symmetric(
            a in proptest::collection::vec(1u8..=5, 2..60),
            seed in any::<u64>(),
        ) {
            let mut rng = crate::rng::SeededRng::new(seed);
            let b: Vec<u8> = a.iter().map(|_| 1 + rng.below(5) as u8).collect();
            let ab = qwk::<f64>(&a, &b, 5).unwrap().value;
            let ba = qwk::<f64>(&b, &a, 5).unwrap().value;
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab <= 1.0 + 1e-12);
            let fa: Vec<f64> = a.iter().map(|&v| v as f64).collect();
            let fb: Vec<f64> = b.iter().map(|&v| v as f64).collect();
            prop_assert_eq!(mse(&fa, &fb).unwrap(), mse(&fb, &fa).unwrap());
        }

        #[test]
        fn mse_is_shift_invariant(
            a in proptest::collection::vec(-10.0f64..10.0, 1..40),
            c in -100.0f64..100.0,
        ) {
            let b: Vec<f64> = a.iter().map(|v| v * 0.5 + 1.0).collect();
            let sa: Vec<f64> = a.iter().map(|v| v + c).collect();
            let sb: Vec<f64> = b.iter().map(|v| v + c).collect();
            let base = mse(&a, &b).unwrap();
            prop_assert!((mse(&sa, &sb).unwrap() - base).abs() <= 1e-9 * (1.0 + base));
        }

        #[test]
        fn qwk_self_agreement_is_one(a in proptest::collection::vec(1u8..=5, 2..60)) {
            prop_assume!(a.iter().any(|&v| v != a[0]));
            let s = qwk::<f64>(&a, &a, 5).unwrap();
            prop_assert!((s.value - 1.0).abs() < 1e-12);
        }
    }
}
