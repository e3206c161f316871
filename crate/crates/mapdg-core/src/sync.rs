//! Attribute synchronization: recovering per-node angles from noisy
//! pairwise offsets through the top eigenvector of a Hermitian matrix.
//!
//! A problem plants angles w and an offset matrix Θ that is exactly
//! skew-symmetric. Reliable pairs carry the consistent offset w_i - w_j;
//! unreliable pairs carry uniform noise (antisymmetrized, so H = exp(iΘ)
//! stays Hermitian). With no noise H = z z* is rank one with top eigenvalue
//! n, and the top eigenvector recovers z up to a global rotation.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{CMat, Mat};
use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::magnetic::{power_iteration, DenseHermitian, EdgePhaseAssignment};
use crate::scalar::Scalar;

/// A planted synchronization instance.
#[derive(Debug, Clone)]
pub struct SyncProblem<T> {
    pub n: usize,
    /// Planted angles in [0, 2π).
    pub true_attrs: Vec<T>,
    /// Dense skew-symmetric offset matrix.
    pub offsets: Mat<T>,
    /// Reliability of the (i, j) offset; symmetric across the diagonal.
    pub good_mask: Vec<bool>,
    /// Fraction of pairs carrying noise instead of consistent offsets.
    pub noise_p: f64,
}

impl<T: Scalar> SyncProblem<T> {
    pub fn good(&self, i: usize, j: usize) -> bool {
        self.good_mask[i * self.n + j]
    }

    /// The Hermitian measurement matrix H = exp(iΘ), unit diagonal.
    pub fn measurement_matrix(&self) -> CMat<T> {
        let n = self.n;
        let mut h = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let theta = self.offsets.get(i, j);
                h.re.set(i, j, theta.cos());
                h.im.set(i, j, theta.sin());
            }
            h.re.set(i, i, T::one());
            h.im.set(i, i, T::zero());
        }
        h
    }
}

/// Complete-topology instance: every unordered pair is reliable with
/// probability `1 - noise_p`; reliable offsets are w_i - w_j exactly,
/// unreliable ones uniform in [0, 2π), both antisymmetrized.
pub fn make_sync_problem<T: Scalar>(n: usize, noise_p: f64, seed: u64) -> Result<SyncProblem<T>> {
    if n < 2 {
        return Err(Error::Parameter(format!("synchronization needs n >= 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&noise_p) {
        return Err(Error::Range(format!("noise_p {noise_p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let two_pi = 2.0 * std::f64::consts::PI;
    let true_attrs: Vec<T> = (0..n).map(|_| T::c(rng.random::<f64>() * two_pi)).collect();
    let mut offsets = Mat::zeros(n, n);
    let mut good_mask = vec![false; n * n];
    for i in 0..n {
        good_mask[i * n + i] = true;
        for j in (i + 1)..n {
            let good = rng.random::<f64>() >= noise_p;
            let theta = if good {
                true_attrs[i] - true_attrs[j]
            } else {
                T::c(rng.random::<f64>() * two_pi)
            };
            offsets.set(i, j, theta);
            offsets.set(j, i, -theta);
            good_mask[i * n + j] = good;
            good_mask[j * n + i] = good;
        }
    }
    Ok(SyncProblem { n, true_attrs, offsets, good_mask, noise_p })
}

/// Instance whose reliable offsets are the literal phases of a potential
/// assignment: one-way pairs with q > 0 contribute Θ(u, v) = ±2πq, and
/// every other pair (bidirected, zero-potential, or off-support) is treated
/// as noise. Planted attributes are still drawn at random, so the
/// correlation of a solution is a diagnostic, not a recovery guarantee.
pub fn sync_problem_from_digraph<T: Scalar>(
    g: &Digraph<T>,
    phases: &EdgePhaseAssignment<T>,
    seed: u64,
) -> Result<SyncProblem<T>> {
    let n = g.n();
    if n < 2 {
        return Err(Error::Parameter(format!("synchronization needs n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let two_pi = 2.0 * std::f64::consts::PI;
    let true_attrs: Vec<T> = (0..n).map(|_| T::c(rng.random::<f64>() * two_pi)).collect();
    let mut offsets = Mat::zeros(n, n);
    let mut good_mask = vec![false; n * n];
    for i in 0..n {
        good_mask[i * n + i] = true;
        for j in (i + 1)..n {
            let theta = T::c(rng.random::<f64>() * two_pi);
            offsets.set(i, j, theta);
            offsets.set(j, i, -theta);
        }
    }
    let mut good_pairs = 0usize;
    for (idx, (&(u, v), &s)) in phases.pairs().iter().zip(phases.dir_signs()).enumerate() {
        if s == 0 || phases.q()[idx] == T::zero() {
            continue;
        }
        let theta = phases.theta(idx);
        offsets.set(u, v, theta);
        offsets.set(v, u, -theta);
        good_mask[u * n + v] = true;
        good_mask[v * n + u] = true;
        good_pairs += 1;
    }
    let total_pairs = n * (n - 1) / 2;
    let noise_p = 1.0 - good_pairs as f64 / total_pairs as f64;
    Ok(SyncProblem { n, true_attrs, offsets, good_mask, noise_p })
}

/// Recovered attributes and their agreement with the planted ones.
#[derive(Debug, Clone)]
pub struct SyncResult<T> {
    /// Top eigenvalue of H.
    pub eigenvalue: T,
    /// Top eigenvector, squared norm n.
    pub vec_re: Vec<T>,
    pub vec_im: Vec<T>,
    /// Unit-modulus attribute estimates v_i / |v_i|.
    pub est_re: Vec<T>,
    pub est_im: Vec<T>,
    /// |<v, z>| / n in [0, 1]; invariant under global rotation of either
    /// side.
    pub correlation: T,
    /// (1 - c²) / c², the squared tangent of the angle between v and z.
    pub tan2_alpha: T,
    pub iterations: usize,
    pub degenerate: bool,
}

/// Solves by shifted power iteration on the dense measurement matrix.
pub fn solve_sync<T: Scalar>(
    problem: &SyncProblem<T>,
    tol: T,
    max_iter: usize,
) -> Result<SyncResult<T>> {
    let h = DenseHermitian::new(problem.measurement_matrix())?;
    let eig = power_iteration(&h, tol, max_iter)?;
    let n = problem.n;
    let mut est_re = Vec::with_capacity(n);
    let mut est_im = Vec::with_capacity(n);
    for i in 0..n {
        let (r, m) = (eig.vec_re[i], eig.vec_im[i]);
        let norm = (r * r + m * m).sqrt();
        if norm > T::zero() {
            est_re.push(r / norm);
            est_im.push(m / norm);
        } else {
            // a zero component carries no angle; pin it to 1
            est_re.push(T::one());
            est_im.push(T::zero());
        }
    }
    // <v, z> with z_j = exp(i w_j); both squared norms are n
    let mut ip_re = T::zero();
    let mut ip_im = T::zero();
    for i in 0..n {
        let (zr, zi) = (problem.true_attrs[i].cos(), problem.true_attrs[i].sin());
        ip_re += eig.vec_re[i] * zr + eig.vec_im[i] * zi;
        ip_im += eig.vec_re[i] * zi - eig.vec_im[i] * zr;
    }
    let correlation = (ip_re * ip_re + ip_im * ip_im).sqrt() / T::c(n as f64);
    let c2 = correlation * correlation;
    let tan2_alpha = if c2 > T::zero() { (T::one() - c2) / c2 } else { T::infinity() };
    Ok(SyncResult {
        eigenvalue: eig.eigenvalue,
        vec_re: eig.vec_re,
        vec_im: eig.vec_im,
        est_re,
        est_im,
        correlation,
        tan2_alpha,
        iterations: eig.iterations,
        degenerate: eig.degenerate,
    })
}

/// One aggregated sweep cell: seed-mean agreement at a given size and
/// reliable-pair fraction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    /// Fraction of reliable pairs (the problem is built with noise 1 - p).
    pub p: f64,
    pub seeds: usize,
    pub mean_correlation: f64,
    pub mean_tan2_alpha: f64,
}

fn mix_seed(base: u64, n: usize, p_idx: usize) -> u64 {
    let mut z = base ^ ((n as u64) << 32) ^ (p_idx as u64);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// One solved problem instance inside a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyncSeedRow {
    pub n: usize,
    /// Fraction of reliable pairs (the problem is built with noise 1 - p).
    pub p: f64,
    pub seed: u64,
    pub correlation: f64,
    pub tan2_alpha: f64,
}

/// Per-seed sweep over problem sizes and reliable-pair fractions.
///
/// Rows come out in (n, p, seed) order; seeds run in parallel but are
/// reduced in index order, so the table is deterministic.
pub fn sync_seed_runs<T: Scalar>(
    n_list: &[usize],
    p_list: &[f64],
    seeds: &[u64],
    tol: T,
    max_iter: usize,
) -> Result<Vec<SyncSeedRow>> {
    if n_list.is_empty() || p_list.is_empty() || seeds.is_empty() {
        return Err(Error::Parameter("sweep lists must be nonempty".into()));
    }
    let mut rows = Vec::with_capacity(n_list.len() * p_list.len() * seeds.len());
    for &n in n_list {
        for (p_idx, &p) in p_list.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Range(format!("reliable fraction {p} outside [0, 1]")));
            }
            let cells: Result<Vec<SyncSeedRow>> = seeds
                .par_iter()
                .map(|&s| {
                    let problem = make_sync_problem::<T>(n, 1.0 - p, mix_seed(s, n, p_idx))?;
                    let sol = solve_sync(&problem, tol, max_iter)?;
                    Ok(SyncSeedRow {
                        n,
                        p,
                        seed: s,
                        correlation: sol.correlation.f64(),
                        tan2_alpha: sol.tan2_alpha.f64(),
                    })
                })
                .collect();
            rows.extend(cells?);
        }
    }
    Ok(rows)
}

/// Monte-Carlo sweep aggregated to one row per (n, p) combination.
pub fn sync_noise_sweep<T: Scalar>(
    n_list: &[usize],
    p_list: &[f64],
    seeds: &[u64],
    tol: T,
    max_iter: usize,
) -> Result<Vec<SweepRow>> {
    let runs = sync_seed_runs::<T>(n_list, p_list, seeds, tol, max_iter)?;
    let k = seeds.len();
    let rows = runs
        .chunks(k)
        .map(|cell| SweepRow {
            n: cell[0].n,
            p: cell[0].p,
            seeds: k,
            mean_correlation: cell.iter().map(|c| c.correlation).sum::<f64>() / k as f64,
            mean_tan2_alpha: cell.iter().map(|c| c.tan2_alpha).sum::<f64>() / k as f64,
        })
        .collect();
    Ok(rows)
}

/// Writes aggregated sweep rows as CSV with a fixed header.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    std::fs::write(path, sweep_csv_text(rows))?;
    Ok(())
}

pub fn sweep_csv_text(rows: &[SweepRow]) -> String {
    let mut text = String::from("n,p,seeds,mean_correlation,mean_tan2_alpha\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{:.12},{:.12}\n",
            r.n, r.p, r.seeds, r.mean_correlation, r.mean_tan2_alpha
        ));
    }
    text
}

/// Writes per-seed rows as CSV with a fixed header.
pub fn write_seed_csv(path: &Path, rows: &[SyncSeedRow]) -> Result<()> {
    std::fs::write(path, seed_csv_text(rows))?;
    Ok(())
}

pub fn seed_csv_text(rows: &[SyncSeedRow]) -> String {
    let mut text = String::from("n,p,seed,correlation,tan2_alpha\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{:.12},{:.12}\n",
            r.n, r.p, r.seed, r.correlation, r.tan2_alpha
        ));
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_are_exactly_skew_and_h_is_hermitian() {
        let p = make_sync_problem::<f64>(24, 0.5, 9).unwrap();
        for i in 0..p.n {
            for j in 0..p.n {
                // f64 == is bit-exact for nonzero values and treats +-0 alike
                assert_eq!(p.offsets.get(i, j), -p.offsets.get(j, i));
            }
        }
        let h = p.measurement_matrix();
        for i in 0..p.n {
            for j in 0..p.n {
                assert!((h.re.get(i, j) - h.re.get(j, i)).abs() < 1e-12);
                assert!((h.im.get(i, j) + h.im.get(j, i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noise_free_problem_is_rank_one_with_eigenvalue_n() {
        let p = make_sync_problem::<f64>(12, 0.0, 4).unwrap();
        assert!(p.good_mask.iter().all(|&g| g));
        let sol = solve_sync(&p, 1e-12, 5000).unwrap();
        assert!((sol.eigenvalue - 12.0).abs() < 1e-9, "lambda = {}", sol.eigenvalue);
        assert!(sol.correlation >= 1.0 - 1e-9);
        assert!(sol.tan2_alpha <= 1e-8);
    }

    #[test]
    fn two_node_closed_form_recovers_exactly() {
        let p = make_sync_problem::<f64>(2, 0.0, 77).unwrap();
        let sol = solve_sync(&p, 1e-13, 1000).unwrap();
        assert!(sol.correlation >= 1.0 - 1e-10);
        // estimated attributes match planted ones up to one global rotation
        // g = est_0 * conj(z_0), then est_1 must equal g * z_1
        let rot = (
            sol.est_re[0] * p.true_attrs[0].cos() + sol.est_im[0] * p.true_attrs[0].sin(),
            sol.est_im[0] * p.true_attrs[0].cos() - sol.est_re[0] * p.true_attrs[0].sin(),
        );
        let (zr, zi) = (p.true_attrs[1].cos(), p.true_attrs[1].sin());
        let rotated = (rot.0 * zr - rot.1 * zi, rot.0 * zi + rot.1 * zr);
        assert!((rotated.0 - sol.est_re[1]).abs() < 1e-8);
        assert!((rotated.1 - sol.est_im[1]).abs() < 1e-8);
    }

    #[test]
    fn full_noise_leaves_no_good_pairs() {
        let p = make_sync_problem::<f64>(10, 1.0, 5).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                if i != j {
                    assert!(!p.good(i, j));
                }
            }
        }
    }

    #[test]
    fn estimates_have_unit_modulus() {
        let p = make_sync_problem::<f64>(30, 0.4, 11).unwrap();
        let sol = solve_sync(&p, 1e-10, 20_000).unwrap();
        for i in 0..30 {
            let m = (sol.est_re[i] * sol.est_re[i] + sol.est_im[i] * sol.est_im[i]).sqrt();
            assert!((m - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_seed_reproduces_offsets() {
        let a = make_sync_problem::<f64>(15, 0.5, 3).unwrap();
        let b = make_sync_problem::<f64>(15, 0.5, 3).unwrap();
        assert_eq!(a.offsets.data(), b.offsets.data());
        assert_eq!(a.good_mask, b.good_mask);
    }

    #[test]
    fn sweep_emits_one_row_per_combination() {
        let rows =
            sync_noise_sweep::<f64>(&[8, 12], &[0.5, 1.0], &[1, 2, 3], 1e-8, 20_000).unwrap();
        assert_eq!(rows.len(), 4);
        // p = 1 rows are noise-free
        for r in rows.iter().filter(|r| r.p == 1.0) {
            assert!(r.mean_tan2_alpha <= 1e-10, "tan2 = {}", r.mean_tan2_alpha);
        }
    }

    #[test]
    fn digraph_mode_uses_literal_phases_on_oneway_pairs() {
        use crate::dense::Mat;
        let features = Mat::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let g = Digraph::new(&[(0, 1), (1, 2), (2, 1)], features).unwrap().0;
        let phases = EdgePhaseAssignment::new(&g, vec![0.2, 0.0]).unwrap();
        let p = sync_problem_from_digraph(&g, &phases, 1).unwrap();
        // (0,1) is one-way with q > 0: literal phase 2π*0.2
        assert!(p.good(0, 1));
        assert!((p.offsets.get(0, 1) - 0.4 * std::f64::consts::PI).abs() < 1e-15);
        // (1,2) is bidirected: noise
        assert!(!p.good(1, 2));
        // (0,2) off-support: noise
        assert!(!p.good(0, 2));
    }
}
