//! Linear layers and the two-layer tanh perceptron, with hand-written
//! backward passes.

use rand::Rng;

use crate::dense::Mat;
use crate::scalar::Scalar;

/// Fully connected layer `y = x W + b` with `W: (fan_in, fan_out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T> {
    pub w: Mat<T>,
    pub b: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct LinearGrads<T> {
    pub dw: Mat<T>,
    pub db: Vec<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn glorot(rng: &mut impl Rng, fan_in: usize, fan_out: usize) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut w = Mat::zeros(fan_in, fan_out);
        for v in w.data_mut() {
            *v = T::c((rng.random::<f64>() * 2.0 - 1.0) * limit);
        }
        Self { w, b: vec![T::zero(); fan_out] }
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { w: Mat::zeros(fan_in, fan_out), b: vec![T::zero(); fan_out] }
    }

    pub fn forward(&self, x: &Mat<T>) -> Mat<T> {
        let mut y = x.matmul(&self.w);
        for r in 0..y.rows() {
            let row = y.row_mut(r);
            for (v, &b) in row.iter_mut().zip(&self.b) {
                *v += b;
            }
        }
        y
    }

    pub fn backward(&self, x: &Mat<T>, dy: &Mat<T>) -> (LinearGrads<T>, Mat<T>) {
        let dw = x.t_matmul(dy);
        let mut db = vec![T::zero(); self.b.len()];
        for r in 0..dy.rows() {
            for (acc, &g) in db.iter_mut().zip(dy.row(r)) {
                *acc += g;
            }
        }
        let dx = dy.matmul_t(&self.w);
        (LinearGrads { dw, db }, dx)
    }

    /// Parameter tensors in a fixed order, for the optimizer and
    /// serialization.
    pub fn tensors(&self) -> Vec<&[T]> {
        vec![self.w.data(), &self.b]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        vec![self.w.data_mut(), &mut self.b]
    }
}

impl<T: Scalar> LinearGrads<T> {
    pub fn tensors(&self) -> Vec<&[T]> {
        vec![self.dw.data(), &self.db]
    }
}

/// Two-layer perceptron with a tanh hidden layer and linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub l1: Linear<T>,
    pub l2: Linear<T>,
}

/// Post-activation hidden block kept for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache<T> {
    pub hidden: Mat<T>,
}

#[derive(Debug, Clone)]
pub struct MlpGrads<T> {
    pub l1: LinearGrads<T>,
    pub l2: LinearGrads<T>,
}

impl<T: Scalar> Mlp<T> {
    /// Random hidden layer; `zero_output` starts the output layer at zero,
    /// which pins the initial output to the activation's midpoint.
    pub fn new(
        rng: &mut impl Rng,
        fan_in: usize,
        hidden: usize,
        fan_out: usize,
        zero_output: bool,
    ) -> Self {
        let l1 = Linear::glorot(rng, fan_in, hidden);
        let l2 = if zero_output {
            Linear::zeros(hidden, fan_out)
        } else {
            Linear::glorot(rng, hidden, fan_out)
        };
        Self { l1, l2 }
    }

    pub fn forward(&self, x: &Mat<T>) -> (Mat<T>, MlpCache<T>) {
        let hidden = self.l1.forward(x).map(|v| v.tanh());
        let y = self.l2.forward(&hidden);
        (y, MlpCache { hidden })
    }

    pub fn backward(&self, x: &Mat<T>, cache: &MlpCache<T>, dy: &Mat<T>) -> (MlpGrads<T>, Mat<T>) {
        let (g2, dhidden) = self.l2.backward(&cache.hidden, dy);
        // tanh'(z) = 1 - tanh(z)^2, and the cache holds tanh(z)
        let mut dpre = dhidden;
        for (d, &h) in dpre.data_mut().iter_mut().zip(cache.hidden.data()) {
            *d *= T::one() - h * h;
        }
        let (g1, dx) = self.l1.backward(x, &dpre);
        (MlpGrads { l1: g1, l2: g2 }, dx)
    }

    pub fn tensors(&self) -> Vec<&[T]> {
        let mut t = self.l1.tensors();
        t.extend(self.l2.tensors());
        t
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let (a, b) = (&mut self.l1, &mut self.l2);
        let mut t = a.tensors_mut();
        t.extend(b.tensors_mut());
        t
    }
}

impl<T: Scalar> MlpGrads<T> {
    pub fn tensors(&self) -> Vec<&[T]> {
        let mut t = self.l1.tensors();
        t.extend(self.l2.tensors());
        t
    }
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    (T::one() + (-x).exp()).recip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_forward_applies_bias() {
        let mut l = Linear::<f64>::zeros(2, 1);
        l.w.set(0, 0, 2.0);
        l.w.set(1, 0, -1.0);
        l.b[0] = 0.5;
        let x = Mat::from_rows(&[vec![3.0, 4.0]]).unwrap();
        let y = l.forward(&x);
        assert_eq!(y.get(0, 0), 2.0 * 3.0 - 4.0 + 0.5);
    }

    #[test]
    fn zero_output_mlp_emits_zeros() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mlp = Mlp::<f64>::new(&mut rng, 2, 8, 1, true);
        let x = Mat::from_rows(&[vec![0.3, -0.7], vec![1.0, 1.0]]).unwrap();
        let (y, _) = mlp.forward(&x);
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mlp_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut mlp = Mlp::<f64>::new(&mut rng, 3, 4, 2, false);
        let x = Mat::from_rows(&[vec![0.2, -0.4, 0.9], vec![-1.0, 0.5, 0.1]]).unwrap();
        // loss = sum of squares of outputs
        let loss = |m: &Mlp<f64>| -> f64 {
            let (y, _) = m.forward(&x);
            y.data().iter().map(|&v| v * v).sum()
        };
        let (y, cache) = mlp.forward(&x);
        let dy = y.map(|v| 2.0 * v);
        let (grads, _) = mlp.backward(&x, &cache, &dy);
        let analytic: Vec<f64> = grads
            .tensors()
            .into_iter()
            .flatten()
            .copied()
            .collect();
        let h = 1e-6;
        let mut idx = 0;
        let n_tensors = mlp.tensors().len();
        for t in 0..n_tensors {
            let len = mlp.tensors()[t].len();
            for i in 0..len {
                let orig = mlp.tensors()[t][i];
                mlp.tensors_mut()[t][i] = orig + h;
                let up = loss(&mlp);
                mlp.tensors_mut()[t][i] = orig - h;
                let down = loss(&mlp);
                mlp.tensors_mut()[t][i] = orig;
                let fd = (up - down) / (2.0 * h);
                let a = analytic[idx];
                assert!(
                    (a - fd).abs() <= 1e-6 * (1.0 + fd.abs()),
                    "tensor {t} elem {i}: analytic {a} vs fd {fd}"
                );
                idx += 1;
            }
        }
    }
}
