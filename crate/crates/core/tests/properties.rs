mod common;

use common::*;
use proptest::prelude::*;
use treerep::hyperbolic::{poincare_distance, sarkar_embed};
use treerep::io::{format_tree, parse_tree};
use treerep::metric::{delta_hyperbolicity, gromov_product, DeltaMode};
use treerep::refinement::{build_path_system, refine_weights, PairSelection};
use treerep::tree::{contract_zero_edges, tree_metric, Graph, Restrict};
use treerep::treerep::{treerep_with, TreeRepConfig};
use treerep::{map_score, neighbor_join, random_tree_metric, sample_hyperboloid, DistanceMatrix};

fn exact(d: &DistanceMatrix) -> f64 {
    delta_hyperbolicity(d, DeltaMode::Exact).unwrap().delta
}

fn config(seed: u64, tol: f64) -> TreeRepConfig {
    TreeRepConfig {
        seed,
        tol,
        ..TreeRepConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gromov_symmetric(seed in any::<u64>(), n in 3usize..9) {
        let d = euclidean(n, 3, seed);
        for w in 0..n {
            for x in 0..n {
                for y in 0..n {
                    let a = gromov_product(&d, x, y, w).unwrap();
                    prop_assert_eq!(a, gromov_product(&d, y, x, w).unwrap());
                    prop_assert!(a >= 0.0 && a <= d.get(w, x).min(d.get(w, y)) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn delta_scales_linearly(seed in any::<u64>(), n in 4usize..9, c in 0.1f64..20.0) {
        let d = euclidean(n, 2, seed);
        let s = d.scaled(c);
        prop_assert!((exact(&s) - c * exact(&d)).abs() < 1e-9 * c.max(1.0));
        let f = |m: &DistanceMatrix| delta_hyperbolicity(m, DeltaMode::FixedBase(0)).unwrap().delta;
        prop_assert!((f(&s) - c * f(&d)).abs() < 1e-9 * c.max(1.0));
    }

    #[test]
    fn fixed_base_brackets_exact(seed in any::<u64>(), n in 4usize..11) {
        let d = sample_hyperboloid(n, 2, 1.5, seed).unwrap();
        let e = exact(&d);
        for w in 0..n {
            let f = delta_hyperbolicity(&d, DeltaMode::FixedBase(w)).unwrap().delta;
            prop_assert!(f <= e + 1e-12);
            prop_assert!(f >= e / 2.0 - 1e-12);
        }
    }

    #[test]
    fn two_smallest_products_within_delta(seed in any::<u64>(), n in 4usize..8) {
        let d = euclidean(n, 2, seed);
        let e = exact(&d);
        for w in 0..n {
            for x in 0..n {
                for y in (x + 1)..n {
                    for z in (y + 1)..n {
                        if [x, y, z].contains(&w) {
                            continue;
                        }
                        let mut p = [
                            gromov_product(&d, x, y, w).unwrap(),
                            gromov_product(&d, y, z, w).unwrap(),
                            gromov_product(&d, z, x, w).unwrap(),
                        ];
                        p.sort_by(f64::total_cmp);
                        prop_assert!(p[1] - p[0] <= e + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn treerep_output_is_small_valid_tree(seed in any::<u64>(), n in 1usize..60, tol in prop_oneof![Just(0.0), Just(0.1)]) {
        let d = euclidean(n, 3, seed);
        let out = treerep_with(&d, &config(seed, tol)).unwrap();
        let t = &out.tree;
        prop_assert_eq!(t.data_count(), n);
        prop_assert_eq!(t.edge_count() + 1, t.node_count());
        if n >= 2 {
            prop_assert!(t.node_count() <= 2 * n - 2);
        }
        prop_assert!(t.steiner_count() <= n);
        prop_assert!(t.edges().iter().all(|e| e.weight >= 0.0));
        prop_assert!(tree_metric(t, Restrict::Data).is_ok());
    }

    #[test]
    fn treerep_exact_on_tree_metrics(seed in any::<u64>(), m in 3usize..60, leaves_only in any::<bool>()) {
        let d = if leaves_only {
            leaf_metric(m, seed)
        } else {
            tree_metric(&random_tree(m, 0.05, seed), Restrict::Data).unwrap()
        };
        let out = treerep_with(&d, &config(seed ^ 0x5a5a, 1e-9)).unwrap();
        prop_assert!(fit_error(&out.tree, &d) <= 1e-6);
    }

    #[test]
    fn zones_partition_each_step(seed in any::<u64>(), n in 4usize..40) {
        let d = sample_hyperboloid(n, 3, 2.0, seed).unwrap();
        let out = treerep_with(&d, &TreeRepConfig { trace: true, ..config(seed, 0.1) }).unwrap();
        let mut seen = std::collections::HashSet::new();
        for c in &out.trace {
            prop_assert!(seen.insert((c.step, c.w)), "point classified twice in one step");
            prop_assert!(![c.triple.x, c.triple.y, c.triple.z].contains(&c.w));
        }
        // every data point off the first triple is classified at step 0
        let first: Vec<_> = out.trace.iter().filter(|c| c.step == 0).collect();
        prop_assert_eq!(first.len(), n - 3);
    }

    #[test]
    fn local_error_vanishes_on_tree_metrics(seed in any::<u64>(), m in 4usize..30) {
        let d = leaf_metric(m, seed);
        let out = treerep_with(&d, &TreeRepConfig { trace: true, ..config(seed, 1e-9) }).unwrap();
        for c in &out.trace {
            prop_assert!(c.assignment.local_error <= 1e-9);
        }
    }

    #[test]
    fn parallel_matches_serial(seed in any::<u64>(), n in 250usize..400) {
        let d = sample_hyperboloid(n, 4, 3.0, seed).unwrap();
        let a = treerep_with(&d, &config(seed, 0.1)).unwrap().tree;
        let b = treerep_with(&d, &TreeRepConfig { threads: 4, ..config(seed, 0.1) }).unwrap().tree;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn map_invariant_under_monotone_maps(seed in any::<u64>(), n in 3usize..20) {
        let mut g = Graph::with_nodes(n);
        for v in 1..n {
            g.add_edge((v * 7 + seed as usize) % v, v, 1.0).unwrap();
        }
        let d = euclidean(n, 2, seed);
        let f = DistanceMatrix::from_fn(n, |i, j| {
            let v = d.get(i, j);
            v * v + 3.0 * v
        })
        .unwrap();
        prop_assert_eq!(map_score(&g, &d).unwrap(), map_score(&g, &f).unwrap());
    }

    #[test]
    fn nj_exact_and_binary(seed in any::<u64>(), m in 4usize..40) {
        let d = leaf_metric(m, seed);
        prop_assume!(d.n() >= 3);
        let t = neighbor_join(&d).unwrap();
        prop_assert_eq!(t.node_count(), 2 * d.n() - 2);
        prop_assert!(fit_error(&t, &d) <= 1e-6);
    }

    #[test]
    fn contraction_preserves_data_metric(seed in any::<u64>(), m in 2usize..40) {
        let t = random_tree(m, 0.0, seed);
        let d = tree_metric(&t, Restrict::Data).unwrap();
        let c = contract_zero_edges(&t, 0.0);
        prop_assert!(fit_error(&c, &d) == 0.0);
    }

    #[test]
    fn tree_text_roundtrip(seed in any::<u64>(), n in 3usize..30) {
        let d = euclidean(n, 2, seed);
        let t = treerep_with(&d, &config(seed, 0.1)).unwrap().tree;
        let back = parse_tree(&format_tree(&t)).unwrap();
        let a = tree_metric(&t, Restrict::Data).unwrap();
        let b = tree_metric(&back, Restrict::Data).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn refinement_never_worse(seed in any::<u64>(), n in 5usize..30, nonneg in any::<bool>()) {
        let d = sample_hyperboloid(n, 2, 2.0, seed).unwrap();
        let t = treerep_with(&d, &config(seed, 0.1)).unwrap().tree;
        let ps = build_path_system(&t, PairSelection::Sample { k: (4 * n).min(n * (n - 1) / 2), seed }).unwrap();
        let r = refine_weights(&t, &d, &ps, nonneg).unwrap();
        prop_assert!(r.residual_after <= r.residual_before * (1.0 + 1e-12) + 1e-12);
        if nonneg {
            prop_assert!(r.tree.edges().iter().all(|e| e.weight >= 0.0));
        }
    }

    #[test]
    fn refinement_recovers_weights(seed in any::<u64>(), m in 2usize..25) {
        let src = random_tree(m, 0.1, seed);
        let d = tree_metric(&src, Restrict::Data).unwrap();
        let start = src.with_weights(&vec![0.5; src.edge_count()]).unwrap();
        let ps = build_path_system(&start, PairSelection::All).unwrap();
        let r = refine_weights(&start, &d, &ps, true).unwrap();
        for (a, b) in r.tree.weights().iter().zip(src.weights()) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn sarkar_points_stay_in_disk(depth in 1u32..3, seed in any::<u64>(), tau in 0.25f64..6.0) {
        let (t, _) = random_tree_metric(depth, seed).unwrap();
        let e = sarkar_embed(&t, tau, None).unwrap();
        prop_assert!(e.points.iter().all(|p| p.norm_sq() < 1.0));
        for edge in t.edges() {
            let dist = poincare_distance(&e.points[edge.u], &e.points[edge.v]).unwrap();
            prop_assert!((dist - tau * edge.weight).abs() <= 1e-6);
        }
    }

    #[test]
    fn datagen_fixed_base_delta_zero(depth in 1u32..5, seed in any::<u64>()) {
        let (_, d) = random_tree_metric(depth, seed).unwrap();
        prop_assert!(delta_hyperbolicity(&d, DeltaMode::FixedBase(0)).unwrap().delta <= 1e-9);
    }
}
