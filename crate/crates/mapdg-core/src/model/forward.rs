//! Forward passes and hand-written reverse passes.
//!
//! The propagation operator is Hermitian, so in split real/imaginary form
//! its Jacobian transpose equals the operator itself: with real part P and
//! imaginary part Q, Pᵀ = P and Qᵀ = -Q make [[P, -Q], [Q, P]] symmetric.
//! Backpropagation through a propagation step is therefore one more forward
//! `spmm`, which keeps the reverse pass as cheap as the forward one.

use crate::dense::{CMat, Mat};
use crate::error::{Error, Result};
use crate::magnetic::{ComplexCsr, EdgePhaseAssignment, PropagationStack};
use crate::model::mlp::{sigmoid, Mlp, MlpCache, MlpGrads};
use crate::scalar::Scalar;

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Rows of all propagation steps side by side:
/// `[re_0 | im_0 | re_1 | im_1 | ... | re_K | im_K]`, shape n x (K+1)*2f.
pub fn concat_steps<T: Scalar>(stack: &PropagationStack<T>) -> Mat<T> {
    let (n, f) = (stack.n(), stack.f());
    let width = (stack.k() + 1) * 2 * f;
    let mut c = Mat::zeros(n, width);
    for (l, step) in stack.steps().iter().enumerate() {
        for u in 0..n {
            let row = c.row_mut(u);
            row[l * 2 * f..l * 2 * f + f].copy_from_slice(step.re.row(u));
            row[l * 2 * f + f..(l + 1) * 2 * f].copy_from_slice(step.im.row(u));
        }
    }
    c
}

/// Numerically stable row softmax.
pub fn softmax_rows<T: Scalar>(x: &Mat<T>) -> Mat<T> {
    let mut out = x.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct AttCache<T> {
    pub concat: Mat<T>,
    pub mlp: MlpCache<T>,
    /// Sigmoid-squashed step scores, n x (K+1).
    pub scores: Mat<T>,
    /// Row-softmax of `scores`, n x (K+1).
    pub weights: Mat<T>,
}

/// Per-node convex combination of propagation steps.
///
/// Step scores come from an MLP over the concatenated stack; softmax turns
/// them into mixing weights, and the output packs the mixed step as
/// `[re | im]`, shape n x 2f.
pub fn attention_forward<T: Scalar>(
    att: &Mlp<T>,
    stack: &PropagationStack<T>,
) -> (Mat<T>, AttCache<T>) {
    let (n, f) = (stack.n(), stack.f());
    let concat = concat_steps(stack);
    let (raw, mlp) = att.forward(&concat);
    let scores = raw.map(sigmoid);
    let weights = softmax_rows(&scores);
    let mut h = Mat::zeros(n, 2 * f);
    for u in 0..n {
        let out = h.row_mut(u);
        for (l, step) in stack.steps().iter().enumerate() {
            let w = weights.get(u, l);
            for (o, &x) in out[..f].iter_mut().zip(step.re.row(u)) {
                *o += w * x;
            }
            for (o, &x) in out[f..].iter_mut().zip(step.im.row(u)) {
                *o += w * x;
            }
        }
    }
    (h, AttCache { concat, mlp, scores, weights })
}

/// Gradients of the attention mix: scorer parameter grads plus the gradient
/// flowing into every propagation step (both through the mixing weights and
/// through the scorer input).
pub fn attention_backward<T: Scalar>(
    att: &Mlp<T>,
    stack: &PropagationStack<T>,
    cache: &AttCache<T>,
    dh: &Mat<T>,
) -> (MlpGrads<T>, Vec<CMat<T>>) {
    let (n, f) = (stack.n(), stack.f());
    let kp1 = stack.k() + 1;
    let mut dsteps: Vec<CMat<T>> = (0..kp1).map(|_| CMat::zeros(n, f)).collect();
    let mut dweights = Mat::zeros(n, kp1);
    for u in 0..n {
        let dre = &dh.row(u)[..f];
        let dim = &dh.row(u)[f..];
        for (l, step) in stack.steps().iter().enumerate() {
            dweights.set(u, l, dot(dre, step.re.row(u)) + dot(dim, step.im.row(u)));
            let w = cache.weights.get(u, l);
            for (o, &g) in dsteps[l].re.row_mut(u).iter_mut().zip(dre) {
                *o += w * g;
            }
            for (o, &g) in dsteps[l].im.row_mut(u).iter_mut().zip(dim) {
                *o += w * g;
            }
        }
    }
    // softmax rows: dS_l = W_l (dW_l - sum_j W_j dW_j)
    let mut dscores = Mat::zeros(n, kp1);
    for u in 0..n {
        let inner = dot(cache.weights.row(u), dweights.row(u));
        for l in 0..kp1 {
            let w = cache.weights.get(u, l);
            dscores.set(u, l, w * (dweights.get(u, l) - inner));
        }
    }
    // sigmoid: dE = dS * s * (1 - s)
    let mut draw = dscores;
    for (g, &s) in draw.data_mut().iter_mut().zip(cache.scores.data()) {
        *g *= s * (T::one() - s);
    }
    let (grads, dconcat) = att.backward(&cache.concat, &cache.mlp, &draw);
    for u in 0..n {
        let row = dconcat.row(u);
        for (l, ds) in dsteps.iter_mut().enumerate() {
            for (o, &g) in ds.re.row_mut(u).iter_mut().zip(&row[l * 2 * f..l * 2 * f + f]) {
                *o += g;
            }
            for (o, &g) in ds.im.row_mut(u).iter_mut().zip(&row[l * 2 * f + f..(l + 1) * 2 * f]) {
                *o += g;
            }
        }
    }
    (grads, dsteps)
}

/// Mean cross-entropy over `mask` rows, with the matching logit gradient
/// (softmax minus one-hot, scaled by 1/|mask|; zero on unmasked rows).
pub fn cross_entropy_masked<T: Scalar>(
    logits: &Mat<T>,
    labels: &[usize],
    mask: &[usize],
) -> Result<(T, Mat<T>)> {
    if mask.is_empty() {
        return Err(Error::Evaluation("loss mask is empty".into()));
    }
    let classes = logits.cols();
    let inv = T::c(1.0 / mask.len() as f64);
    let mut dlogits = Mat::zeros(logits.rows(), classes);
    let mut loss = T::zero();
    for &r in mask {
        let y = labels[r];
        if y >= classes {
            return Err(Error::Shape(format!("label {y} out of range for {classes} classes")));
        }
        let row = logits.row(r);
        let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
        let sum_exp: T = row.iter().map(|&v| (v - max).exp()).sum();
        let lse = max + sum_exp.ln();
        loss += lse - row[y];
        let drow = dlogits.row_mut(r);
        for (c, &v) in row.iter().enumerate() {
            let p = (v - lse).exp();
            drow[c] = (p - if c == y { T::one() } else { T::zero() }) * inv;
        }
    }
    Ok((loss * inv, dlogits))
}

/// Per-entry operator gradients from per-step output gradients.
///
/// Walks the recursion X_k = M X_{k-1} backwards: the adjoint of a step is
/// `spmm` with the same operator (see module docs), and each level deposits
/// d/d(re), d/d(im) for every stored entry. `dsteps[0]` is absorbed into
/// nothing here because step 0 is the raw feature matrix.
pub fn propagation_backward<T: Scalar>(
    mgo: &ComplexCsr<T>,
    stack: &PropagationStack<T>,
    dsteps: &[CMat<T>],
) -> (Vec<T>, Vec<T>) {
    let k = stack.k();
    assert_eq!(dsteps.len(), k + 1, "one gradient per step");
    let nnz = mgo.nnz();
    let mut d_re = vec![T::zero(); nnz];
    let mut d_im = vec![T::zero(); nnz];
    if k == 0 {
        return (d_re, d_im);
    }
    let mut acc = dsteps[k].clone();
    for level in (1..=k).rev() {
        let prev = stack.step(level - 1);
        for u in 0..mgo.dim() {
            let (cols, _, _) = mgo.row(u);
            let base = mgo.row_range(u).start;
            for (off, &v) in cols.iter().enumerate() {
                let e = base + off;
                d_re[e] += dot(acc.re.row(u), prev.re.row(v)) + dot(acc.im.row(u), prev.im.row(v));
                d_im[e] +=
                    -dot(acc.re.row(u), prev.im.row(v)) + dot(acc.im.row(u), prev.re.row(v));
            }
        }
        let mut next = mgo.spmm(&acc);
        next.re.add_assign(&dsteps[level - 1].re);
        next.im.add_assign(&dsteps[level - 1].im);
        acc = next;
    }
    (d_re, d_im)
}

/// Chains per-entry operator gradients through the phase map to per-pair
/// potential gradients.
///
/// Each off-diagonal entry is w*(cos θ, sin θ) with θ = ±2πq for one-way
/// pairs, so dθ = -im*d(re) + re*d(im) evaluated at the stored entry, and a
/// pair collects 2π*sign*(dθ_forward - dθ_reverse). Bidirected and diagonal
/// entries carry no phase and contribute nothing.
pub fn q_pair_gradient<T: Scalar>(
    mgo: &ComplexCsr<T>,
    phases: &EdgePhaseAssignment<T>,
    d_re: &[T],
    d_im: &[T],
) -> Vec<T> {
    let two_pi = T::PI() * T::c(2.0);
    let (re, im) = mgo.values();
    let dtheta = |e: usize| -im[e] * d_re[e] + re[e] * d_im[e];
    phases
        .pairs()
        .iter()
        .zip(phases.dir_signs())
        .map(|(&(u, v), &s)| {
            if s == 0 {
                return T::zero();
            }
            let fwd = mgo.entry_index(u, v).expect("pair entry present");
            let rev = mgo.entry_index(v, u).expect("pair entry present");
            two_pi * T::c(s as f64) * (dtheta(fwd) - dtheta(rev))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EdgeQCache<T> {
    pub mlp: MlpCache<T>,
    /// Raw scorer outputs, n_pairs x 1.
    pub raw: Mat<T>,
}

/// Learned per-pair potentials: q = 0.25 * sigmoid(scorer(inputs)).
pub fn edge_q_forward<T: Scalar>(
    scorer: &Mlp<T>,
    inputs: &Mat<T>,
) -> (Vec<T>, EdgeQCache<T>) {
    let (raw, mlp) = scorer.forward(inputs);
    let q = raw.data().iter().map(|&y| T::c(0.25) * sigmoid(y)).collect();
    (q, EdgeQCache { mlp, raw })
}

pub fn edge_q_backward<T: Scalar>(
    scorer: &Mlp<T>,
    inputs: &Mat<T>,
    cache: &EdgeQCache<T>,
    dq: &[T],
) -> MlpGrads<T> {
    let mut draw = Mat::zeros(dq.len(), 1);
    for (i, &g) in dq.iter().enumerate() {
        let s = sigmoid(cache.raw.get(i, 0));
        draw.set(i, 0, g * T::c(0.25) * s * (T::one() - s));
    }
    let (grads, _) = scorer.backward(inputs, &cache.mlp, &draw);
    grads
}

/// Stacks `[h[a] | h[b]]` per evaluation pair.
pub fn gather_pair_rows<T: Scalar>(h: &Mat<T>, pairs: &[(usize, usize)]) -> Mat<T> {
    let f = h.cols();
    let mut out = Mat::zeros(pairs.len(), 2 * f);
    for (i, &(a, b)) in pairs.iter().enumerate() {
        let row = out.row_mut(i);
        row[..f].copy_from_slice(h.row(a));
        row[f..].copy_from_slice(h.row(b));
    }
    out
}

/// Adjoint of [`gather_pair_rows`]: accumulates pair-row gradients back onto
/// node rows (nodes appearing in several pairs sum their contributions).
pub fn scatter_pair_rows<T: Scalar>(dpairs: &Mat<T>, pairs: &[(usize, usize)], n: usize) -> Mat<T> {
    let f = dpairs.cols() / 2;
    let mut out = Mat::zeros(n, f);
    for (i, &(a, b)) in pairs.iter().enumerate() {
        let row = dpairs.row(i);
        for (o, &g) in out.row_mut(a).iter_mut().zip(&row[..f]) {
            *o += g;
        }
        for (o, &g) in out.row_mut(b).iter_mut().zip(&row[f..]) {
            *o += g;
        }
    }
    out
}
