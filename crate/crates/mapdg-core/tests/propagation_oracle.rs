//! Sparse propagation against dense first-principles references.

mod common;

use common::*;
use mapdg_core::magnetic::{assemble_star_mgo, build_symmetric_norm, propagate, EdgePhaseAssignment};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[test]
fn sparse_propagation_matches_dense_complex_powers() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for trial in 0..100 {
        let g = random_digraph(&mut rng, 2, 30, 6);
        let q = random_pair_q(&mut rng, &g);
        let k = rng.random_range(0..=5);

        let phases = EdgePhaseAssignment::new(&g, q.clone()).unwrap();
        let norm = build_symmetric_norm(&g);
        let mgo = assemble_star_mgo(&norm, &phases).unwrap();
        let stack = propagate(&mgo, g.features(), k).unwrap();

        let dense = dense_propagate(&dense_mgo(&g, &q), g.features(), k);
        for (step, reference) in stack.steps().iter().zip(&dense) {
            let diff = max_abs_diff_step(step, reference);
            assert!(diff <= 1e-10, "trial {trial}: max abs diff {diff:e}");
        }
    }
}

#[test]
fn assembled_operator_is_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let g = random_digraph(&mut rng, 2, 40, 3);
        let q = random_pair_q(&mut rng, &g);
        let phases = EdgePhaseAssignment::new(&g, q).unwrap();
        let norm = build_symmetric_norm(&g);
        let mgo = assemble_star_mgo(&norm, &phases).unwrap();
        assert!(mgo.hermitian_defect() <= 1e-12);
    }
}

#[test]
fn zero_potential_reduces_to_undirected_propagation() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..30 {
        let g = random_digraph(&mut rng, 2, 25, 4);
        let q = vec![0.0; g.undirected_pairs().len()];
        let phases = EdgePhaseAssignment::new(&g, q.clone()).unwrap();
        let norm = build_symmetric_norm(&g);
        let mgo = assemble_star_mgo(&norm, &phases).unwrap();
        let stack = propagate(&mgo, g.features(), 4).unwrap();

        // direction drops out entirely: imaginary planes are exactly zero
        for step in stack.steps() {
            assert!(step.im.data().iter().all(|&v| v == 0.0));
        }
        // and the real planes equal the symmetric-normalized undirected walk
        let dense = dense_propagate(&dense_mgo(&g, &q), g.features(), 4);
        for (step, reference) in stack.steps().iter().zip(&dense) {
            assert!(reference
                .iter()
                .flatten()
                .all(|c| c.im == 0.0));
            assert!(max_abs_diff_step(step, reference) <= 1e-12);
        }
    }
}

#[test]
fn propagation_norm_is_non_expansive() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..40 {
        let g = random_digraph(&mut rng, 2, 40, 4);
        let q = random_pair_q(&mut rng, &g);
        let phases = EdgePhaseAssignment::new(&g, q).unwrap();
        let norm = build_symmetric_norm(&g);
        let mgo = assemble_star_mgo(&norm, &phases).unwrap();
        let stack = propagate(&mgo, g.features(), 6).unwrap();
        let norms: Vec<f64> = stack.steps().iter().map(|s| s.frobenius_norm()).collect();
        for w in norms.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "expansion: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn propagation_is_identical_across_thread_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let g = random_digraph(&mut rng, 60, 80, 5);
    let q = random_pair_q(&mut rng, &g);
    let phases = EdgePhaseAssignment::new(&g, q).unwrap();
    let norm = build_symmetric_norm(&g);
    let mgo = assemble_star_mgo(&norm, &phases).unwrap();

    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| propagate(&mgo, g.features(), 5).unwrap())
    };
    let one = run(1);
    for threads in [2, 4] {
        let other = run(threads);
        for (a, b) in one.steps().iter().zip(other.steps()) {
            assert_eq!(a.re.data(), b.re.data(), "{threads} threads: re plane differs");
            assert_eq!(a.im.data(), b.im.data(), "{threads} threads: im plane differs");
        }
    }
}
