//! Least-squares refit of edge weights on a fixed tree topology.
//!
//! Each data pair `(i, j)` contributes one row of a 0/1 matrix `A` marking the
//! edges on the tree path from `i` to `j`; the refit solves
//! `min_w ‖A w − D‖₂` over the selected rows with CGLS.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metric::DistanceMatrix;
use crate::tree::WeightedTree;

const SOLVER_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSelection {
    All,
    /// `k` distinct pairs drawn uniformly.
    Sample { k: usize, seed: u64 },
}

/// Rows of the path-incidence matrix for a set of data pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSystem {
    pub pairs: Vec<(usize, usize)>,
    /// Edge indices on each pair's path.
    pub rows: Vec<Vec<usize>>,
    pub edge_count: usize,
}

impl PathSystem {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn apply(&self, w: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&e| w[e]).sum();
        }
    }

    fn apply_t(&self, r: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (&v, row) in r.iter().zip(&self.rows) {
            for &e in row {
                out[e] += v;
            }
        }
    }

    /// `‖A w − b‖₂` where `b` holds the target distances of the rows.
    pub fn residual(&self, w: &[f64], d: &DistanceMatrix) -> f64 {
        let mut aw = vec![0.0; self.rows.len()];
        self.apply(w, &mut aw);
        aw.iter()
            .zip(&self.pairs)
            .map(|(v, &(i, j))| (v - d.get(i, j)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Columns never touched, or touched by exactly the same rows as another
    /// column, make `A` rank deficient.
    fn structurally_deficient(&self) -> bool {
        if self.rows.len() < self.edge_count {
            return true;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9);
        let mut sig = vec![(0u64, 0usize); self.edge_count];
        for row in &self.rows {
            let h: u64 = rng.random();
            for &e in row {
                sig[e].0 = sig[e].0.wrapping_add(h);
                sig[e].1 += 1;
            }
        }
        if sig.iter().any(|s| s.1 == 0) {
            return true;
        }
        let mut seen = HashMap::with_capacity(sig.len());
        sig.iter().any(|s| seen.insert(*s, ()).is_some())
    }
}

/// Default sample size: `min(C(n,2), 20 · edges)`.
pub fn default_sample_size(t: &WeightedTree) -> usize {
    let n = t.data_count();
    (n * n.saturating_sub(1) / 2).min(20 * t.edge_count())
}

/// Collects path rows for all data pairs or a uniform sample of them.
pub fn build_path_system(t: &WeightedTree, pairs: PairSelection) -> Result<PathSystem> {
    let n = t.data_count();
    let total = n * n.saturating_sub(1) / 2;
    let mut chosen: Vec<(usize, usize)> = match pairs {
        PairSelection::All => (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect(),
        PairSelection::Sample { k, seed } => {
            if k > total {
                return Err(Error::SampleTooLarge {
                    requested: k,
                    available: total,
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = sample(&mut rng, total, k).into_vec();
            idx.sort_unstable();
            decode_pairs(n, &idx)
        }
    };
    chosen.sort_unstable();

    let mut rows = Vec::with_capacity(chosen.len());
    let mut start = 0;
    while start < chosen.len() {
        let i = chosen[start].0;
        let end = start + chosen[start..].iter().take_while(|p| p.0 == i).count();
        let (parent, _) = t.rooted(t.data_node(i));
        for &(_, j) in &chosen[start..end] {
            let mut path = Vec::new();
            let mut cur = t.data_node(j);
            while let Some((p, e)) = parent[cur] {
                path.push(e);
                cur = p;
            }
            path.reverse();
            rows.push(path);
        }
        start = end;
    }
    Ok(PathSystem {
        pairs: chosen,
        rows,
        edge_count: t.edge_count(),
    })
}

/// Maps sorted linear indices over the upper triangle back to `(i, j)`.
fn decode_pairs(n: usize, sorted: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(sorted.len());
    let (mut i, mut row_start) = (0usize, 0usize);
    for &p in sorted {
        while p >= row_start + (n - 1 - i) {
            row_start += n - 1 - i;
            i += 1;
        }
        out.push((i, i + 1 + (p - row_start)));
    }
    out
}

#[derive(Debug, Clone)]
pub struct Refined {
    pub tree: WeightedTree,
    pub residual_before: f64,
    pub residual_after: f64,
    /// The sampled system does not determine every weight; the minimum-norm
    /// solution was taken.
    pub rank_deficient: bool,
    pub iterations: usize,
    /// The solution was no better than the input and the input was kept.
    pub kept_input: bool,
}

/// CGLS on the columns where `free` is true, starting from zero there.
fn cgls(ps: &PathSystem, b: &[f64], fixed: &[f64], free: &[bool], max_iter: usize) -> (Vec<f64>, usize) {
    let m = ps.edge_count;
    let mut x = fixed.to_vec();
    let mut r = vec![0.0; b.len()];
    ps.apply(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut s = vec![0.0; m];
    ps.apply_t(&r, &mut s);
    for (si, &f) in s.iter_mut().zip(free) {
        if !f {
            *si = 0.0;
        }
    }
    let norm0 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut p = s.clone();
    let mut gamma = norm0 * norm0;
    let mut q = vec![0.0; b.len()];
    let mut iters = 0;
    while iters < max_iter && gamma.sqrt() > SOLVER_RTOL * norm0 && gamma > 0.0 {
        iters += 1;
        ps.apply(&p, &mut q);
        let qq: f64 = q.iter().map(|v| v * v).sum();
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += alpha * pi;
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= alpha * qi;
        }
        ps.apply_t(&r, &mut s);
        for (si, &f) in s.iter_mut().zip(free) {
            if !f {
                *si = 0.0;
            }
        }
        let next: f64 = s.iter().map(|v| v * v).sum();
        let beta = next / gamma;
        gamma = next;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + beta * *pi;
        }
    }
    (x, iters)
}

/// Refits edge weights to the rows of `ps`.
///
/// With `nonneg`, negative weights of the unconstrained solution are clamped
/// to zero and the other weights are solved once more with those held at
/// zero. The objective never ends above its value at the input weights: if
/// the solve does not improve on them they are returned unchanged.
pub fn refine_weights(t: &WeightedTree, d: &DistanceMatrix, ps: &PathSystem, nonneg: bool) -> Result<Refined> {
    if ps.edge_count != t.edge_count() {
        return Err(Error::DimensionMismatch {
            left: ps.edge_count,
            right: t.edge_count(),
        });
    }
    if d.n() != t.data_count() {
        return Err(Error::DimensionMismatch {
            left: d.n(),
            right: t.data_count(),
        });
    }
    let m = t.edge_count();
    let b: Vec<f64> = ps.pairs.iter().map(|&(i, j)| d.get(i, j)).collect();
    let input = t.weights();
    let residual_before = ps.residual(&input, d);
    let max_iter = (10 * m).max(1);

    let zeros = vec![0.0; m];
    let (mut w, mut iterations) = cgls(ps, &b, &zeros, &vec![true; m], max_iter);
    if nonneg && w.iter().any(|&v| v < 0.0) {
        let free: Vec<bool> = w.iter().map(|&v| v >= 0.0).collect();
        let (w2, it2) = cgls(ps, &b, &zeros, &free, max_iter);
        iterations += it2;
        w = w2.into_iter().map(|v| v.max(0.0)).collect();
    }
    let mut residual_after = ps.residual(&w, d);
    let kept_input = residual_after > residual_before;
    if kept_input {
        w = input;
        residual_after = residual_before;
    }
    Ok(Refined {
        tree: t.with_weights(&w)?,
        residual_before,
        residual_after,
        rank_deficient: ps.structurally_deficient(),
        iterations,
        kept_input,
    })
}
