use serde::{Deserialize, Serialize};

use crate::data::{ConceptActivation, PairKey, Question};
use crate::scalar::Scalar;

use super::EncodingError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptSentence {
    pub text: String,
    pub n_top: usize,
    pub template: String,
}

/// Comma-joined names of the `n_top` most activated concepts, optionally
/// prefixed by `template`. Equal activations order alphabetically.
pub fn concept_sentence(
    activation: &ConceptActivation,
    n_top: usize,
    template: &str,
) -> Result<ConceptSentence, EncodingError> {
    if activation.is_empty() {
        return Err(EncodingError::EmptyConcepts);
    }
    if n_top == 0 {
        return Err(EncodingError::NTop);
    }
    let mut entries: Vec<_> = activation.entries.iter().collect();
    entries.sort_by(|a, b| {
        b.activation
            .partial_cmp(&a.activation)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.concept.cmp(&b.concept))
    });
    let names: Vec<&str> = entries.iter().take(n_top).map(|e| e.concept.as_str()).collect();
    let joined = names.join(", ");
    let text = if template.is_empty() { joined } else { format!("{template} {joined}") };
    Ok(ConceptSentence { text, n_top, template: template.to_string() })
}

/// `(1 / ||e||) * sum_k e[k] * v_k` for activations `e` and per-concept vectors `v`.
pub fn weighted_concept_embedding<T: Scalar>(activations: &[T], vectors: &[Vec<T>]) -> Result<Vec<T>, EncodingError> {
    if activations.is_empty() {
        return Err(EncodingError::EmptyConcepts);
    }
    if vectors.len() != activations.len() {
        return Err(EncodingError::ConceptVectors { expected: activations.len(), got: vectors.len() });
    }
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(EncodingError::ConceptVectors { expected: activations.len(), got: vectors.len() });
    }
    let norm = activations.iter().map(|&a| a * a).sum::<T>().sqrt();
    if norm <= T::zero() {
        return Err(EncodingError::ZeroNorm);
    }
    let mut out = vec![T::zero(); dim];
    for (&a, v) in activations.iter().zip(vectors) {
        let w = a / norm;
        for (o, &x) in out.iter_mut().zip(v) {
            *o += w * x;
        }
    }
    Ok(out)
}

/// `[embedding || onehot(label)]`, length `D + classes`.
pub fn assemble_input<T: Scalar>(embedding: &[T], label: usize, classes: usize) -> Result<Vec<T>, EncodingError> {
    if label >= classes {
        return Err(EncodingError::Label { label, classes });
    }
    let mut out = Vec::with_capacity(embedding.len() + classes);
    out.extend_from_slice(embedding);
    out.extend((0..classes).map(|c| if c == label { T::one() } else { T::zero() }));
    Ok(out)
}

/// Scorer input for one annotated explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedSample<T> {
    pub pair: PairKey,
    pub question: Question,
    pub embedding: Vec<T>,
    pub label: usize,
    pub num_labels: usize,
    pub target: T,
}

impl<T: Scalar> EmbeddedSample<T> {
    pub fn input(&self) -> Result<Vec<T>, EncodingError> {
        assemble_input(&self.embedding, self.label, self.num_labels)
    }
}
