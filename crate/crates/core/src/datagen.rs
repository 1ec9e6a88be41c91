//! Synthetic inputs: random tree metrics and random points on the hyperboloid.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hyperbolic::{hyperboloid_distance, HyperboloidPoint};
use crate::metric::DistanceMatrix;
use crate::tree::{tree_metric, Edge, Restrict, WeightedTree};

pub const MIN_CLIQUE: usize = 2;
pub const MAX_CLIQUE: usize = 10;

/// Random weighted tree and its path metric over all of its nodes.
///
/// Construction: a complete binary tree with `depth` levels; two copies of it
/// with their roots joined by an edge; every node replaced by a clique of
/// uniform size in `2..=10`, the node's former edges attached round-robin to
/// distinct clique members; the BFS tree of that graph from a uniformly random
/// node; independent edge weights uniform on `[0, 1)`.
pub fn random_tree_metric(depth: u32, seed: u64) -> Result<(WeightedTree, DistanceMatrix)> {
    if depth == 0 || depth > 20 {
        return Err(Error::InvalidArgument(format!("depth must be in 1..=20, got {depth}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let half = (1usize << depth) - 1;
    let mut skeleton: Vec<(usize, usize)> = Vec::with_capacity(2 * half);
    for copy in 0..2 {
        let off = copy * half;
        for i in 1..half {
            skeleton.push(((i - 1) / 2 + off, i + off));
        }
    }
    skeleton.push((0, half));
    let blocks = 2 * half;

    let sizes: Vec<usize> = (0..blocks).map(|_| rng.random_range(MIN_CLIQUE..=MAX_CLIQUE)).collect();
    let mut first = Vec::with_capacity(blocks);
    let mut total = 0;
    for &s in &sizes {
        first.push(total);
        total += s;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total];
    let link = |a: usize, b: usize, adj: &mut Vec<Vec<usize>>| {
        adj[a].push(b);
        adj[b].push(a);
    };
    for (blk, &s) in sizes.iter().enumerate() {
        for i in 0..s {
            for j in (i + 1)..s {
                link(first[blk] + i, first[blk] + j, &mut adj);
            }
        }
    }
    let mut next_member = vec![0usize; blocks];
    for &(u, v) in &skeleton {
        let a = first[u] + next_member[u] % sizes[u];
        let b = first[v] + next_member[v] % sizes[v];
        next_member[u] += 1;
        next_member[v] += 1;
        link(a, b, &mut adj);
    }
    for nbrs in &mut adj {
        nbrs.sort_unstable();
        nbrs.dedup();
    }

    let source = rng.random_range(0..total);
    let mut seen = vec![false; total];
    seen[source] = true;
    let mut queue = VecDeque::from([source]);
    let mut edges = Vec::with_capacity(total - 1);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                edges.push(Edge {
                    u,
                    v,
                    weight: rng.random::<f64>(),
                });
                queue.push_back(v);
            }
        }
    }
    let tree = WeightedTree::from_data_edges(total, edges)?;
    let d = tree_metric(&tree, Restrict::Data)?;
    Ok((tree, d))
}

/// Pairwise hyperboloid distances of `n` random points in `H^k`: each point's
/// `k` spatial coordinates are standard normal times `scale`, and `x₀` is set
/// to put it on the sheet.
pub fn sample_hyperboloid(n: usize, k: usize, scale: f64, seed: u64) -> Result<DistanceMatrix> {
    Ok(sample_hyperboloid_points(n, k, scale, seed)?.1)
}

/// Like [`sample_hyperboloid`], also returning the points.
pub fn sample_hyperboloid_points(
    n: usize,
    k: usize,
    scale: f64,
    seed: u64,
) -> Result<(Vec<HyperboloidPoint>, DistanceMatrix)> {
    if n < 2 || k < 1 || !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need n >= 2, k >= 1, scale > 0 (got n={n}, k={k}, scale={scale})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<HyperboloidPoint> = (0..n)
        .map(|_| {
            let spatial: Vec<f64> = (0..k).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
            HyperboloidPoint::lift(&spatial)
        })
        .collect();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = hyperboloid_distance(&points[i], &points[j])?;
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok((points, DistanceMatrix::new(n, data)?))
}
