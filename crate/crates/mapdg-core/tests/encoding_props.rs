//! Property tests for the adaptive potential encoding.

mod common;

use common::*;
use mapdg_core::dense::Mat;
use mapdg_core::encoding::{map_encode, q_feature};
use mapdg_core::graph::{count_motifs, Digraph};
use proptest::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

fn shuffled_identity(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    perm
}

fn canonical(u: usize, v: usize) -> (usize, usize) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encoding_is_permutation_equivariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_digraph(&mut rng, 3, 20, 4);
        let perm = shuffled_identity(g.n(), seed ^ 0x9e37);
        let gp = g.permute(&perm).unwrap();

        // soft labels ride along with the relabeling
        let z = g.features().clone();
        let mut zp = Mat::zeros(z.rows(), z.cols());
        for v in 0..z.rows() {
            zp.row_mut(perm[v]).copy_from_slice(z.row(v));
        }

        let (orig, _) = map_encode(&g, Some(&z)).unwrap();
        let (perm_enc, _) = map_encode(&gp, Some(&zp)).unwrap();

        let lookup: HashMap<(usize, usize), (f64, f64, f64)> = perm_enc
            .pairs
            .iter()
            .enumerate()
            .map(|(i, &(u, v))| {
                ((u, v), (perm_enc.q_topo[i], perm_enc.q_feat[i], perm_enc.q_star[i]))
            })
            .collect();
        for (i, &(u, v)) in orig.pairs.iter().enumerate() {
            let key = canonical(perm[u], perm[v]);
            let &(t, f, s) = lookup.get(&key).expect("pair must survive relabeling");
            prop_assert_eq!(orig.q_topo[i], t);
            prop_assert_eq!(orig.q_feat[i], f);
            prop_assert_eq!(orig.q_star[i], s);
        }
    }

    #[test]
    fn potentials_and_phases_stay_in_range(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_digraph(&mut rng, 2, 25, 4);
        let mut z = Mat::zeros(g.n(), 3);
        for v in z.data_mut() {
            *v = rng.random_range(-2.0..2.0);
        }
        let (enc, _) = map_encode(&g, Some(&z)).unwrap();
        for i in 0..enc.pairs.len() {
            prop_assert!((0.0..=0.25).contains(&enc.q_star[i]));
            prop_assert!((0.0..1.0).contains(&enc.q_topo[i]));
            prop_assert!((0.0..=1.0).contains(&enc.q_feat[i]));
            prop_assert!(
                (enc.q_star[i] - 0.25 * enc.q_topo[i] * enc.q_feat[i]).abs() == 0.0
            );
        }
        let phases = enc.to_phases(&g).unwrap();
        let half_pi = std::f64::consts::FRAC_PI_2;
        for i in 0..enc.pairs.len() {
            prop_assert!(phases.theta(i).abs() <= half_pi);
        }
    }

    #[test]
    fn feature_disagreement_is_monotone_in_cosine(steps in 2usize..30) {
        // two unit rows at a widening angle: cosine falls, q must not fall
        let mut last_q = -1.0f64;
        for s in 0..=steps {
            let angle = std::f64::consts::FRAC_PI_2 * s as f64 / steps as f64;
            let z = Mat::from_rows(&[
                vec![1.0, 0.0],
                vec![angle.cos(), angle.sin()],
            ]).unwrap();
            let qf = q_feature(&z, &[(0, 1)]);
            prop_assert!(qf.q[0] >= last_q);
            last_q = qf.q[0];
        }
        prop_assert!((last_q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn feature_disagreement_is_endpoint_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..12);
        let mut z = Mat::zeros(n, 4);
        for v in z.data_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        for u in 0..n {
            for v in (u + 1)..n {
                let fwd = q_feature(&z, &[(u, v)]);
                let rev = q_feature(&z, &[(v, u)]);
                prop_assert_eq!(fwd.q[0], rev.q[0]);
            }
        }
    }
}

#[test]
fn motif_counts_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for trial in 0..200 {
        let g = random_digraph(&mut rng, 2, 30, 2);
        let deg = g.compute_degrees();
        let got = count_motifs(&g, &deg);
        let expected = dense_motifs(&g);
        assert_eq!(got.motifs, expected, "trial {trial}");
    }
}

#[test]
fn augmentation_leaves_interior_nodes_alone() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut interior_checked = 0usize;
    for _ in 0..200 {
        let g = random_digraph(&mut rng, 3, 20, 2);
        let deg = g.compute_degrees();
        let motifs = count_motifs(&g, &deg).motifs;
        let raw = raw_motifs(&g);
        for v in 0..g.n() {
            let neighborhood: Vec<usize> = g
                .out_neighbors(v)
                .iter()
                .chain(g.in_neighbors(v))
                .copied()
                .chain([v])
                .collect();
            let unaugmented = neighborhood
                .iter()
                .all(|&u| !g.out_neighbors(u).is_empty() && !g.in_neighbors(u).is_empty());
            if unaugmented {
                assert_eq!(motifs[v], raw[v], "node {v}");
                interior_checked += 1;
            }
        }
    }
    assert!(interior_checked > 50, "generator produced too few interior nodes");
}

/// Motifs on the raw adjacency, no sink augmentation.
fn raw_motifs(g: &Digraph<f64>) -> Vec<u64> {
    let n = g.n();
    let mut a = vec![vec![0u64; n]; n];
    for &(u, v) in g.edges() {
        a[u][v] = 1;
    }
    (0..n)
        .map(|v| {
            let mut total = 0u64;
            for u in 0..n {
                if a[u][v] == 0 {
                    continue;
                }
                total += (0..n).map(|w| a[v][w] * a[w][u]).sum::<u64>();
            }
            total
        })
        .collect()
}
