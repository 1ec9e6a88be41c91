//! Distortion, mean average precision and the optimal global scale.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::DistanceMatrix;
use crate::tree::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scale {
    #[default]
    None,
    /// Multiply the learned metric by [`optimal_scale`] first.
    Optimal,
}

fn same_size(a: &DistanceMatrix, b: &DistanceMatrix) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            left: a.n(),
            right: b.n(),
        });
    }
    Ok(())
}

/// The `c` minimising `‖d_true − c·d_learned‖_F`.
pub fn optimal_scale(d_learned: &DistanceMatrix, d_true: &DistanceMatrix) -> Result<f64> {
    same_size(d_learned, d_true)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (&l, &t) in d_learned.as_slice().iter().zip(d_true.as_slice()) {
        num += l * t;
        den += l * l;
    }
    if den == 0.0 {
        return Err(Error::AllZero);
    }
    Ok(num / den)
}

/// Mean over unordered pairs of `|d_learned − d_true| / d_true`.
pub fn average_distortion(d_learned: &DistanceMatrix, d_true: &DistanceMatrix, scale: Scale) -> Result<f64> {
    same_size(d_learned, d_true)?;
    let n = d_true.n();
    if n < 2 {
        return Ok(0.0);
    }
    let alpha = match scale {
        Scale::None => 1.0,
        Scale::Optimal => optimal_scale(d_learned, d_true)?,
    };
    let mut sum = 0.0;
    for (i, j, t) in d_true.pairs() {
        if t == 0.0 {
            return Err(Error::ZeroReference { i, j });
        }
        sum += (alpha * d_learned.get(i, j) - t).abs() / t;
    }
    Ok(sum / (n * (n - 1) / 2) as f64)
}

/// Mean average precision of `d` at reconstructing the neighbourhoods of `g`.
///
/// For each node `v` and neighbour `u`, the ball `B` holds every node other
/// than `v` at distance at most `d(v, u)`; precision is the share of `B` that
/// neighbours `v`. Precisions are averaged per node and then over nodes.
/// Nodes are matched to rows of `d` by index.
pub fn map_score(g: &Graph, d: &DistanceMatrix) -> Result<f64> {
    let n = g.node_count();
    if d.n() != n {
        return Err(Error::DimensionMismatch { left: n, right: d.n() });
    }
    if n == 0 {
        return Ok(1.0);
    }
    if let Some(v) = (0..n).find(|&v| g.neighbors(v).is_empty()) {
        return Err(Error::IsolatedNode(g.names()[v].clone()));
    }
    // collect first so the final sum runs in a fixed order
    let per_node: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|v| node_average_precision(g, d, v))
        .collect();
    Ok(per_node.iter().sum::<f64>() / n as f64)
}

fn node_average_precision(g: &Graph, d: &DistanceMatrix, v: usize) -> f64 {
    let row = d.row(v);
    let mut is_nbr = vec![false; row.len()];
    for &(u, _) in g.neighbors(v) {
        is_nbr[u] = true;
    }
    let nbrs: Vec<usize> = (0..row.len()).filter(|&u| is_nbr[u]).collect();

    // Sort the other nodes by distance once; a ball is then a prefix.
    let mut order: Vec<usize> = (0..row.len()).filter(|&u| u != v).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut prefix_hits = Vec::with_capacity(order.len());
    let mut hits = 0usize;
    for &u in &order {
        hits += is_nbr[u] as usize;
        prefix_hits.push(hits);
    }
    let mut sum = 0.0;
    for &u in &nbrs {
        let radius = row[u];
        // ties at the radius are inside the ball
        let size = order.partition_point(|&t| row[t] <= radius);
        sum += prefix_hits[size - 1] as f64 / size as f64;
    }
    sum / nbrs.len() as f64
}

/// Summary of one fit or evaluation, serialised as a flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EvalReport {
    pub map: Option<f64>,
    pub avg_distortion: f64,
    pub alpha: f64,
    pub delta: Option<f64>,
    /// Wall-clock milliseconds per stage.
    pub elapsed_ms: BTreeMap<String, f64>,
    pub n_input: usize,
    pub n_tree_nodes: usize,
    pub seed: u64,
    pub runs: usize,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}
