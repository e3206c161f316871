//! Symmetric normalization and per-pair magnetic phases.
//!
//! The normalized operator is `D~^(-1/2) A~ D~^(-1/2)` built from
//! `A~ = (A + A^T)/2 + I`; the phase of entry `(u, v)` is
//! `2*pi*q(u,v) * (A(u,v) - A(v,u))`, so bidirected pairs and the diagonal
//! stay real and the phase matrix is exactly skew-symmetric.

use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::magnetic::ComplexCsr;
use crate::scalar::Scalar;

/// Per-unordered-pair magnetic potential together with edge direction.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePhaseAssignment<T> {
    n: usize,
    /// Canonical pairs `(u, v)` with `u < v`, sorted.
    pairs: Vec<(usize, usize)>,
    /// `A(u,v) - A(v,u)` for the canonical orientation: 1, -1, or 0.
    dir_sign: Vec<i8>,
    /// Potential per pair, in `[0, 1/4]`.
    q: Vec<T>,
}

impl<T: Scalar> EdgePhaseAssignment<T> {
    /// Builds from a graph and one q value per canonical pair, in the order
    /// returned by [`Digraph::undirected_pairs`].
    pub fn new(g: &Digraph<T>, q: Vec<T>) -> Result<Self> {
        let pairs_signed = g.undirected_pairs();
        if q.len() != pairs_signed.len() {
            return Err(Error::Shape(format!(
                "{} q values for {} pairs",
                q.len(),
                pairs_signed.len()
            )));
        }
        validate_q_range(&q)?;
        let mut pairs = Vec::with_capacity(pairs_signed.len());
        let mut dir_sign = Vec::with_capacity(pairs_signed.len());
        for (u, v, s) in pairs_signed {
            pairs.push((u, v));
            dir_sign.push(s);
        }
        Ok(Self { n: g.n(), pairs, dir_sign, q })
    }

    /// Uniform scalar potential on every pair.
    pub fn uniform(g: &Digraph<T>, q: T) -> Result<Self> {
        let count = g.undirected_pairs().len();
        Self::new(g, vec![q; count])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn dir_signs(&self) -> &[i8] {
        &self.dir_sign
    }

    pub fn q(&self) -> &[T] {
        &self.q
    }

    /// Phase of the canonical entry `(u, v)` of pair `i`; the mirrored entry
    /// carries the exact negation.
    pub fn theta(&self, i: usize) -> T {
        T::c(2.0) * T::PI() * self.q[i] * T::c(self.dir_sign[i] as f64)
    }

    /// Phase for an arbitrary ordered entry; zero off the pair support and
    /// on the diagonal.
    pub fn theta_entry(&self, u: usize, v: usize) -> T {
        if u == v {
            return T::zero();
        }
        let (a, b, flip) = if u < v { (u, v, false) } else { (v, u, true) };
        match self.pairs.binary_search(&(a, b)) {
            Ok(i) => {
                let t = self.theta(i);
                if flip {
                    -t
                } else {
                    t
                }
            }
            Err(_) => T::zero(),
        }
    }
}

fn validate_q_range<T: Scalar>(q: &[T]) -> Result<()> {
    let quarter = T::c(0.25);
    for (i, &v) in q.iter().enumerate() {
        if !(v >= T::zero() && v <= quarter) {
            return Err(Error::Range(format!(
                "q[{i}] = {v} outside [0, 0.25]"
            )));
        }
    }
    Ok(())
}

/// Symmetrically normalized magnetic magnitude matrix: real entries,
/// structurally symmetric, spectral radius at most one.
pub fn build_symmetric_norm<T: Scalar>(g: &Digraph<T>) -> ComplexCsr<T> {
    let n = g.n();
    let deg = g.compute_degrees();
    let half = T::c(0.5);
    // D~(v) = 1 + (d_in + d_out)/2 counts the self-loop and half of every
    // incident direction.
    let inv_sqrt: Vec<T> = (0..n)
        .map(|v| (T::one() + half * T::c(deg.total(v) as f64)).sqrt().recip())
        .collect();
    let mut entries: Vec<(usize, usize, T, T)> = Vec::with_capacity(2 * g.m() + n);
    for r in 0..n {
        let out = g.out_neighbors(r);
        let inn = g.in_neighbors(r);
        let mut diag_written = false;
        let push = |c: usize, entries: &mut Vec<(usize, usize, T, T)>| {
            let w = half
                * T::c((g.has_edge(r, c) as u8 + g.has_edge(c, r) as u8) as f64)
                * inv_sqrt[r]
                * inv_sqrt[c];
            entries.push((r, c, w, T::zero()));
        };
        // merge the two sorted neighbor lists, inserting the diagonal in order
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let next = match (out.get(i), inn.get(j)) {
                (Some(&a), Some(&b)) => {
                    if a == b {
                        i += 1;
                        j += 1;
                        a
                    } else if a < b {
                        i += 1;
                        a
                    } else {
                        j += 1;
                        b
                    }
                }
                (Some(&a), None) => {
                    i += 1;
                    a
                }
                (None, Some(&b)) => {
                    j += 1;
                    b
                }
                (None, None) => break,
            };
            if !diag_written && next > r {
                entries.push((r, r, inv_sqrt[r] * inv_sqrt[r], T::zero()));
                diag_written = true;
            }
            push(next, &mut entries);
        }
        if !diag_written {
            entries.push((r, r, inv_sqrt[r] * inv_sqrt[r], T::zero()));
        }
    }
    ComplexCsr::from_entries(n, &entries).expect("normalized entries are sorted by construction")
}

/// Applies per-pair phases to the normalized magnitudes, producing the
/// magnetic graph operator. Hermitian by construction: both entries of a
/// pair share one `(cos, sin)` evaluation with the sine negated on the
/// mirrored side.
pub fn assemble_star_mgo<T: Scalar>(
    norm: &ComplexCsr<T>,
    phases: &EdgePhaseAssignment<T>,
) -> Result<ComplexCsr<T>> {
    if norm.dim() != phases.n() {
        return Err(Error::Shape("normalization and phases disagree on n".into()));
    }
    validate_q_range(phases.q())?;
    let mut mgo = norm.clone();
    for i in 0..phases.pairs().len() {
        let (u, v) = phases.pairs()[i];
        let theta = phases.theta(i);
        let (sin, cos) = theta.sin_cos();
        let fwd = mgo
            .entry_index(u, v)
            .ok_or_else(|| Error::Shape(format!("pair ({u}, {v}) missing from pattern")))?;
        let rev = mgo
            .entry_index(v, u)
            .ok_or_else(|| Error::Shape(format!("pair ({v}, {u}) missing from pattern")))?;
        let (re, im) = mgo.values_mut();
        let w = re[fwd];
        re[fwd] = w * cos;
        im[fwd] = w * sin;
        re[rev] = w * cos;
        im[rev] = w * -sin;
    }
    Ok(mgo)
}
