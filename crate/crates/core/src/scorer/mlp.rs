use rayon::prelude::*;

use crate::rng::SeededRng;
use crate::scalar::Scalar;

use super::loss::{composite_with_grad, LossTerms, LossWeights};
use super::ScorerError;

pub const SCORE_MIN: f64 = 1.0;
pub const SCORE_MAX: f64 = 5.0;

/// Location of one affine layer inside the flat parameter vector.
/// Weights are `outputs x inputs` row-major, followed by the bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpan {
    pub inputs: usize,
    pub outputs: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

/// Affine layers with rectified hidden units and a single linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    dims: Vec<usize>,
    layout: Vec<LayerSpan>,
    params: Vec<T>,
}

fn layout_for(dims: &[usize]) -> (Vec<LayerSpan>, usize) {
    let mut offset = 0;
    let mut layout = Vec::with_capacity(dims.len() - 1);
    for w in dims.windows(2) {
        let (inputs, outputs) = (w[0], w[1]);
        let weight_offset = offset;
        let bias_offset = offset + inputs * outputs;
        offset = bias_offset + outputs;
        layout.push(LayerSpan { inputs, outputs, weight_offset, bias_offset });
    }
    (layout, offset)
}

impl<T: Scalar> Mlp<T> {
    /// Uniform fan-in initialization: every weight and bias of a layer with
    /// `n` inputs is drawn from `U(-1/sqrt(n), 1/sqrt(n))`, layer by layer in
    /// storage order.
    pub fn new(input_dim: usize, hidden: &[usize], seed: u64) -> Result<Self, ScorerError> {
        let mut net = Self::zeros(input_dim, hidden)?;
        let mut rng = SeededRng::new(seed);
        for span in net.layout.clone() {
            let bound = 1.0 / (span.inputs as f64).sqrt();
            let end = span.bias_offset + span.outputs;
            for p in &mut net.params[span.weight_offset..end] {
                *p = T::of(rng.uniform(-bound, bound));
            }
        }
        Ok(net)
    }

    pub fn zeros(input_dim: usize, hidden: &[usize]) -> Result<Self, ScorerError> {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(input_dim);
        dims.extend_from_slice(hidden);
        dims.push(1);
        Self::from_params(dims, None)
    }

    /// Builds a network from layer sizes (input first, `1` last) and an
    /// optional flat parameter vector.
    pub fn from_params(dims: Vec<usize>, params: Option<Vec<T>>) -> Result<Self, ScorerError> {
        if dims.len() < 2 || dims.contains(&0) || *dims.last().unwrap() != 1 {
            return Err(ScorerError::Config(format!("invalid layer sizes {dims:?}")));
        }
        let (layout, count) = layout_for(&dims);
        let params = match params {
            Some(p) if p.len() != count => {
                return Err(ScorerError::Malformed(format!("expected {count} parameters, got {}", p.len())))
            }
            Some(p) => p,
            None => vec![T::zero(); count],
        };
        if params.iter().any(|p| !p.is_finite()) {
            return Err(ScorerError::Malformed("non-finite parameter".into()));
        }
        Ok(Self { dims, layout, params })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn layout(&self) -> &[LayerSpan] {
        &self.layout
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn check_input(&self, x: &[T]) -> Result<(), ScorerError> {
        if x.len() != self.input_dim() {
            return Err(ScorerError::Dim { expected: self.input_dim(), got: x.len() });
        }
        Ok(())
    }

    fn affine(&self, span: &LayerSpan, input: &[T], out: &mut Vec<T>) {
        out.clear();
        let w = &self.params[span.weight_offset..span.bias_offset];
        let b = &self.params[span.bias_offset..span.bias_offset + span.outputs];
        for (row, &bias) in w.chunks_exact(span.inputs).zip(b) {
            let mut acc = bias;
            for (&wi, &xi) in row.iter().zip(input) {
                acc += wi * xi;
            }
            out.push(acc);
        }
    }

    /// Raw network output, unclamped. Used by the loss.
    pub fn forward(&self, x: &[T]) -> Result<T, ScorerError> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layout.len() - 1;
        for (l, span) in self.layout.iter().enumerate() {
            self.affine(span, &cur, &mut next);
            if l != last {
                next.iter_mut().for_each(|v| *v = v.max(T::zero()));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        let out = cur[0];
        if !out.is_finite() {
            return Err(ScorerError::NonFiniteForward);
        }
        Ok(out)
    }

    pub fn forward_batch(&self, inputs: &[Vec<T>]) -> Result<Vec<T>, ScorerError> {
        inputs.par_iter().map(|x| self.forward(x)).collect()
    }

    /// Inference score, clamped to the Likert range.
    pub fn predict(&self, x: &[T]) -> Result<T, ScorerError> {
        Ok(self.forward(x)?.max(T::of(SCORE_MIN)).min(T::of(SCORE_MAX)))
    }

    pub fn predict_batch(&self, inputs: &[Vec<T>]) -> Result<Vec<T>, ScorerError> {
        inputs.par_iter().map(|x| self.predict(x)).collect()
    }

    // Post-activation values per layer, input included.
    fn trace(&self, x: &[T]) -> Vec<Vec<T>> {
        let last = self.layout.len() - 1;
        let mut acts = Vec::with_capacity(self.layout.len() + 1);
        acts.push(x.to_vec());
        for (l, span) in self.layout.iter().enumerate() {
            let mut out = Vec::new();
            self.affine(span, &acts[l], &mut out);
            if l != last {
                out.iter_mut().for_each(|v| *v = v.max(T::zero()));
            }
            acts.push(out);
        }
        acts
    }

    // Adds d(out)/d(params) * upstream into `grad`.
    fn accumulate(&self, acts: &[Vec<T>], upstream: T, grad: &mut [T]) {
        let mut delta = vec![upstream];
        for l in (0..self.layout.len()).rev() {
            let span = self.layout[l];
            let input = &acts[l];
            for (o, &d) in delta.iter().enumerate() {
                if d == T::zero() {
                    continue;
                }
                let row = span.weight_offset + o * span.inputs;
                for (g, &a) in grad[row..row + span.inputs].iter_mut().zip(input) {
                    *g += d * a;
                }
                grad[span.bias_offset + o] += d;
            }
            if l == 0 {
                break;
            }
            let mut prev = vec![T::zero(); span.inputs];
            for (o, &d) in delta.iter().enumerate() {
                if d == T::zero() {
                    continue;
                }
                let row = &self.params[span.weight_offset + o * span.inputs..span.weight_offset + (o + 1) * span.inputs];
                for (p, &w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            // rectifier derivative, zero at the origin
            for (p, &a) in prev.iter_mut().zip(input) {
                if a <= T::zero() {
                    *p = T::zero();
                }
            }
            delta = prev;
        }
    }
}

/// Composite loss over a batch and its gradient with respect to every parameter.
pub fn backward<T: Scalar>(
    net: &Mlp<T>,
    inputs: &[Vec<T>],
    truth: &[T],
    weights: LossWeights,
) -> Result<(LossTerms<T>, Vec<T>), ScorerError> {
    if inputs.len() != truth.len() {
        return Err(ScorerError::LengthMismatch(truth.len(), inputs.len()));
    }
    if inputs.is_empty() {
        return Err(ScorerError::EmptyBatch);
    }
    let mut traces = Vec::with_capacity(inputs.len());
    let mut preds = Vec::with_capacity(inputs.len());
    for x in inputs {
        net.check_input(x)?;
        let acts = net.trace(x);
        let out = acts.last().unwrap()[0];
        if !out.is_finite() {
            return Err(ScorerError::NonFiniteForward);
        }
        preds.push(out);
        traces.push(acts);
    }
    let (terms, dpred) = composite_with_grad(truth, &preds, weights)?;
    let mut grad = vec![T::zero(); net.num_params()];
    for (acts, &d) in traces.iter().zip(&dpred) {
        net.accumulate(acts, d, &mut grad);
    }
    Ok((terms, grad))
}
