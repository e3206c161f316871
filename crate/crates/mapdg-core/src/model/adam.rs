//! Adaptive moment estimation with classic L2 regularization folded into
//! the gradient.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamHyper {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Self { lr, weight_decay, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment buffers for one parameter group. The step count
/// is per group, so groups that update on different schedules keep correct
/// bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    t: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn for_tensors(tensors: &[&[T]]) -> Self {
        Self {
            m: tensors.iter().map(|t| vec![T::zero(); t.len()]).collect(),
            v: tensors.iter().map(|t| vec![T::zero(); t.len()]).collect(),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, hp: &AdamHyper, mut params: Vec<&mut [T]>, grads: Vec<&[T]>) {
        assert_eq!(params.len(), self.m.len(), "parameter group shape");
        assert_eq!(grads.len(), self.m.len(), "gradient group shape");
        self.t += 1;
        let b1 = T::c(hp.beta1);
        let b2 = T::c(hp.beta2);
        let lr = T::c(hp.lr);
        let wd = T::c(hp.weight_decay);
        let eps = T::c(hp.eps);
        let bc1 = T::one() - T::c(hp.beta1.powi(self.t as i32));
        let bc2 = T::one() - T::c(hp.beta2.powi(self.t as i32));
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(&grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            assert_eq!(p.len(), m.len(), "tensor length");
            for i in 0..p.len() {
                let grad = g[i] + wd * p[i];
                m[i] = b1 * m[i] + (T::one() - b1) * grad;
                v[i] = b2 * v[i] + (T::one() - b2) * grad * grad;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] = p[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }

    pub fn moments(&self) -> (&[Vec<T>], &[Vec<T>]) {
        (&self.m, &self.v)
    }

    pub fn restore(m: Vec<Vec<T>>, v: Vec<Vec<T>>, t: u64) -> Self {
        Self { m, v, t }
    }
}
