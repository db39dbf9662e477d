use crate::scalar::Scalar;

/// Adam with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamW<T> {
    lr: T,
    beta1: T,
    beta2: T,
    eps: T,
    weight_decay: T,
    step: i32,
    m: Vec<T>,
    v: Vec<T>,
}

impl<T: Scalar> AdamW<T> {
    pub fn new(num_params: usize, lr: f64, beta1: f64, beta2: f64, eps: f64, weight_decay: f64) -> Self {
        Self {
            lr: T::of(lr),
            beta1: T::of(beta1),
            beta2: T::of(beta2),
            eps: T::of(eps),
            weight_decay: T::of(weight_decay),
            step: 0,
            m: vec![T::zero(); num_params],
            v: vec![T::zero(); num_params],
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    /// `p -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)`
    pub fn update(&mut self, params: &mut [T], grads: &[T]) {
        debug_assert_eq!(params.len(), grads.len());
        self.step += 1;
        let one = T::one();
        let bc1 = one - self.beta1.powi(self.step);
        let bc2 = one - self.beta2.powi(self.step);
        for ((p, &g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (one - self.beta1) * g;
            *v = self.beta2 * *v + (one - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * (m_hat / (v_hat.sqrt() + self.eps) + self.weight_decay * *p);
        }
    }
}
