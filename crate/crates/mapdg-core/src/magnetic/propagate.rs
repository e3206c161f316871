//! Feature propagation through the magnetic operator.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dense::{CMat, Mat};
use crate::error::{Error, Result};
use crate::io;
use crate::magnetic::ComplexCsr;
use crate::scalar::Scalar;

/// All propagation steps `X, A X, ..., A^k X` on split complex planes.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationStack<T> {
    steps: Vec<CMat<T>>,
}

impl<T: Scalar> PropagationStack<T> {
    pub fn k(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn n(&self) -> usize {
        self.steps[0].rows()
    }

    pub fn f(&self) -> usize {
        self.steps[0].cols()
    }

    pub fn step(&self, i: usize) -> &CMat<T> {
        &self.steps[i]
    }

    pub fn steps(&self) -> &[CMat<T>] {
        &self.steps
    }

    pub fn steps_mut(&mut self) -> &mut [CMat<T>] {
        &mut self.steps
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.steps.len(), other.steps.len());
        self.steps
            .iter()
            .zip(&other.steps)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(T::zero(), T::max)
    }
}

/// Repeatedly applies the operator to the feature block. Step 0 is the raw
/// features with a zero imaginary plane; `k = 0` yields only that step.
pub fn propagate<T: Scalar>(
    mgo: &ComplexCsr<T>,
    features: &Mat<T>,
    k: usize,
) -> Result<PropagationStack<T>> {
    if features.rows() != mgo.dim() {
        return Err(Error::Shape(format!(
            "{} feature rows for a {}-node operator",
            features.rows(),
            mgo.dim()
        )));
    }
    let mut steps = Vec::with_capacity(k + 1);
    steps.push(CMat::from_real(features.clone()));
    for _ in 0..k {
        let next = mgo.spmm(steps.last().expect("non-empty"));
        steps.push(next);
    }
    Ok(PropagationStack { steps })
}

/// Summary statistics of a q vector, carried in stack manifests and
/// training logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl QStats {
    pub fn from_values<T: Scalar>(q: &[T]) -> Self {
        if q.is_empty() {
            return Self { min: 0.0, mean: 0.0, max: 0.0 };
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &v in q {
            let v = v.f64();
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        Self { min, mean: sum / q.len() as f64, max }
    }
}

#[derive(Serialize, Deserialize)]
struct StackMeta {
    k: usize,
    n: usize,
    f: usize,
    q_stats: QStats,
    steps: Vec<String>,
}

/// Writes one f64 container per step (real plane columns then imaginary)
/// plus a `stack.json` manifest.
pub fn save_stack<T: Scalar>(dir: &Path, stack: &PropagationStack<T>, q_stats: QStats) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let (n, f) = (stack.n(), stack.f());
    let mut files = Vec::new();
    for (i, step) in stack.steps().iter().enumerate() {
        let name = format!("step_{i}.bin");
        let mut flat = Mat::<T>::zeros(n, 2 * f);
        for r in 0..n {
            flat.row_mut(r)[..f].copy_from_slice(step.re.row(r));
            flat.row_mut(r)[f..].copy_from_slice(step.im.row(r));
        }
        io::write_mat_f64(&dir.join(&name), &flat)?;
        files.push(name);
    }
    let meta = StackMeta { k: stack.k(), n, f, q_stats, steps: files };
    std::fs::write(dir.join("stack.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Loads a stack written by [`save_stack`].
pub fn load_stack<T: Scalar>(dir: &Path) -> Result<(PropagationStack<T>, QStats)> {
    let meta: StackMeta =
        serde_json::from_str(&std::fs::read_to_string(dir.join("stack.json"))?)?;
    let mut steps = Vec::with_capacity(meta.steps.len());
    for name in &meta.steps {
        let flat: Mat<T> = io::read_mat(&dir.join(name))?;
        if flat.rows() != meta.n || flat.cols() != 2 * meta.f {
            return Err(Error::Shape(format!("step file {name} has wrong shape")));
        }
        let mut step = CMat::zeros(meta.n, meta.f);
        for r in 0..meta.n {
            step.re.row_mut(r).copy_from_slice(&flat.row(r)[..meta.f]);
            step.im.row_mut(r).copy_from_slice(&flat.row(r)[meta.f..]);
        }
        steps.push(step);
    }
    if steps.len() != meta.k + 1 {
        return Err(Error::Shape("stack.json step count mismatch".into()));
    }
    Ok((PropagationStack { steps }, meta.q_stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Digraph;
    use crate::magnetic::{assemble_star_mgo, build_symmetric_norm, EdgePhaseAssignment};

    fn stack_for_cycle() -> PropagationStack<f64> {
        let feat = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let (g, _) = Digraph::new(&[(0, 1), (1, 2), (2, 0)], feat).unwrap();
        let norm = build_symmetric_norm(&g);
        let phases = EdgePhaseAssignment::uniform(&g, 0.2).unwrap();
        let mgo = assemble_star_mgo(&norm, &phases).unwrap();
        propagate(&mgo, g.features(), 3).unwrap()
    }

    #[test]
    fn step_zero_is_raw_features_with_zero_imaginary() {
        let stack = stack_for_cycle();
        assert_eq!(stack.k(), 3);
        assert_eq!(stack.step(0).re.get(2, 1), 1.0);
        assert!(stack.step(0).im.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn frobenius_norm_never_expands() {
        let stack = stack_for_cycle();
        for i in 1..=stack.k() {
            let prev = stack.step(i - 1).frobenius_norm();
            let cur = stack.step(i).frobenius_norm();
            assert!(cur <= prev * (1.0 + 1e-9), "step {i}: {cur} > {prev}");
        }
    }

    #[test]
    fn save_load_is_bitwise() {
        let stack = stack_for_cycle();
        let dir = tempfile::tempdir().unwrap();
        let stats = QStats::from_values(&[0.2f64, 0.2, 0.2]);
        save_stack(dir.path(), &stack, stats).unwrap();
        let (back, meta_stats) = load_stack::<f64>(dir.path()).unwrap();
        assert_eq!(back, stack);
        assert_eq!(meta_stats, stats);
    }

    #[test]
    fn k_zero_keeps_only_features() {
        let feat = Mat::from_rows(&[vec![2.0], vec![3.0]]).unwrap();
        let (g, _) = Digraph::new(&[(0, 1)], feat).unwrap();
        let mgo = build_symmetric_norm(&g);
        let stack = propagate(&mgo, g.features(), 0).unwrap();
        assert_eq!(stack.k(), 0);
        assert_eq!(stack.step(0).re.get(1, 0), 3.0);
    }
}
