#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treerep::tree::{tree_metric, Edge, Graph, Restrict, WeightedTree};
use treerep::DistanceMatrix;

/// Points drawn uniformly from the unit cube in `dim` dimensions.
pub fn euclidean(n: usize, dim: usize, seed: u64) -> DistanceMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
    DistanceMatrix::from_fn(n, |i, j| {
        pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    })
    .unwrap()
}

/// Random tree on `m` nodes by uniform parent attachment, weights in `[lo, 1)`.
pub fn random_tree(m: usize, lo: f64, seed: u64) -> WeightedTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = (1..m)
        .map(|v| Edge {
            u: rng.random_range(0..v),
            v,
            weight: lo + (1.0 - lo) * rng.random::<f64>(),
        })
        .collect();
    WeightedTree::from_data_edges(m, edges).unwrap()
}

/// Metric of a random tree restricted to its leaves, so realising it needs
/// Steiner nodes.
pub fn leaf_metric(m: usize, seed: u64) -> DistanceMatrix {
    let t = random_tree(m, 0.1, seed);
    let full = tree_metric(&t, Restrict::All).unwrap();
    let leaves: Vec<usize> = (0..m).filter(|&v| t.degree(v) == 1).collect();
    full.submatrix(&leaves).unwrap()
}

/// Hop metric of the unweighted 4-cycle.
pub fn c4() -> DistanceMatrix {
    DistanceMatrix::from_fn(4, |i, j| if (i + j) % 2 == 1 { 1.0 } else { 2.0 }).unwrap()
}

pub fn max_abs_diff(a: &DistanceMatrix, b: &DistanceMatrix) -> f64 {
    assert_eq!(a.n(), b.n());
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn fit_error(t: &WeightedTree, d: &DistanceMatrix) -> f64 {
    max_abs_diff(&tree_metric(t, Restrict::Data).unwrap(), d)
}

pub fn gp(d: &DistanceMatrix, x: usize, y: usize, w: usize) -> f64 {
    0.5 * (d.get(w, x) + d.get(w, y) - d.get(x, y))
}

/// Ordered quadruples, Gromov form, optionally with the base pinned.
pub fn delta_oracle(d: &DistanceMatrix, base: Option<usize>) -> f64 {
    let n = d.n();
    let mut best = 0.0f64;
    for w in 0..n {
        if base.is_some_and(|b| b != w) {
            continue;
        }
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let v = gp(d, x, z, w).min(gp(d, y, z, w)) - gp(d, x, y, w);
                    best = best.max(v);
                }
            }
        }
    }
    best
}

pub fn map_oracle(g: &Graph, d: &DistanceMatrix) -> f64 {
    let n = g.node_count();
    let mut total = 0.0;
    for v in 0..n {
        let mut nbrs: Vec<usize> = g.neighbors(v).iter().map(|&(u, _)| u).collect();
        nbrs.sort_unstable();
        nbrs.dedup();
        let mut sum = 0.0;
        for &u in &nbrs {
            let ball: Vec<usize> = (0..n).filter(|&x| x != v && d.get(v, x) <= d.get(v, u)).collect();
            let hits = ball.iter().filter(|x| nbrs.contains(x)).count();
            sum += hits as f64 / ball.len() as f64;
        }
        total += sum / nbrs.len() as f64;
    }
    total / n as f64
}

pub fn distortion_oracle(l: &DistanceMatrix, t: &DistanceMatrix) -> f64 {
    let n = t.n();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += (l.get(i, j) - t.get(i, j)).abs() / t.get(i, j);
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::with_nodes(n);
    for v in 1..n {
        let u = rng.random_range(0..v);
        g.add_edge(u, v, 1.0).unwrap();
    }
    for u in 0..n {
        for v in (u + 2)..n {
            if rng.random::<f64>() < p {
                g.add_edge(u, v, 1.0).unwrap();
            }
        }
    }
    g
}

pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-10 {
        let c = b - r * (b - a);
        let e = a + r * (b - a);
        if f(c) < f(e) {
            b = e;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}
