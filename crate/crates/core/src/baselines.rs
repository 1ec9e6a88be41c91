//! Reference tree builders: Neighbor Joining and Prim's minimum spanning tree.

use crate::error::{Error, Result};
use crate::metric::DistanceMatrix;
use crate::tree::{Edge, Graph, NodeKind, WeightedTree};

/// Neighbor Joining (Saitou & Nei) with the usual Q-criterion.
///
/// Produces an unrooted binary tree with the inputs as leaves and `n − 2`
/// internal Steiner nodes. Ties in Q go to the lexicographically smallest
/// pair of node ids. Negative branch lengths are clamped to zero at the end.
pub fn neighbor_join(d: &DistanceMatrix) -> Result<WeightedTree> {
    let n = d.n();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, found: n });
    }
    let cap = 2 * n - 2;
    let mut dist = vec![0.0; cap * cap];
    for i in 0..n {
        for j in 0..n {
            dist[i * cap + j] = d.get(i, j);
        }
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut kinds: Vec<NodeKind> = (0..n).map(NodeKind::Data).collect();
    let mut edges = Vec::with_capacity(cap - 1);
    let mut row_sum = vec![0.0; cap];

    while active.len() > 2 {
        let m = active.len();
        for &i in &active {
            row_sum[i] = active.iter().map(|&j| dist[i * cap + j]).sum();
        }
        let mut best = (f64::INFINITY, 0, 0);
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                let q = (m - 2) as f64 * dist[i * cap + j] - row_sum[i] - row_sum[j];
                if q < best.0 {
                    best = (q, i, j);
                }
            }
        }
        let (_, i, j) = best;
        let dij = dist[i * cap + j];
        let li = 0.5 * dij + (row_sum[i] - row_sum[j]) / (2.0 * (m - 2) as f64);
        let lj = dij - li;
        let u = kinds.len();
        kinds.push(NodeKind::Steiner(u - n + 1));
        edges.push(Edge { u: i, v: u, weight: li });
        edges.push(Edge { u: j, v: u, weight: lj });
        active.retain(|&k| k != i && k != j);
        for &k in &active {
            let duk = 0.5 * (dist[i * cap + k] + dist[j * cap + k] - dij);
            dist[u * cap + k] = duk;
            dist[k * cap + u] = duk;
        }
        active.push(u);
    }
    let (a, b) = (active[0], active[1]);
    edges.push(Edge {
        u: a,
        v: b,
        weight: dist[a * cap + b],
    });
    for e in &mut edges {
        e.weight = e.weight.max(0.0);
    }
    WeightedTree::new(kinds, edges)?.with_labels(d.labels().map(<[String]>::to_vec))
}

/// Dense Prim. `relax(u, visit)` must call `visit(v, w)` for every edge
/// `u–v`. Ties go to the lowest node index. `None` if disconnected.
fn prim(n: usize, mut relax: impl FnMut(usize, &mut dyn FnMut(usize, f64))) -> Option<Vec<Edge>> {
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    if n == 0 {
        return Some(edges);
    }
    best[0] = 0.0;
    for _ in 0..n {
        let mut u = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && best[v] < f64::INFINITY && (u == usize::MAX || best[v] < best[u]) {
                u = v;
            }
        }
        if u == usize::MAX {
            return None;
        }
        in_tree[u] = true;
        if parent[u] != usize::MAX {
            edges.push(Edge {
                u: parent[u],
                v: u,
                weight: best[u],
            });
        }
        relax(u, &mut |v, w| {
            if !in_tree[v] && w < best[v] {
                best[v] = w;
                parent[v] = u;
            }
        });
    }
    Some(edges)
}

/// Minimum spanning tree of a connected weighted graph.
pub fn mst_prim(g: &Graph) -> Result<WeightedTree> {
    let n = g.node_count();
    let edges = prim(n, |u, visit| {
        for &(v, w) in g.neighbors(u) {
            visit(v, w);
        }
    })
    .ok_or_else(|| {
        let comps = g.components();
        Error::Disconnected {
            components: comps.len(),
            sizes: comps.iter().map(Vec::len).collect(),
        }
    })?;
    WeightedTree::from_data_edges(n, edges)?.with_labels(Some(g.names().to_vec()))
}

/// Minimum spanning tree of the complete graph weighted by `d`.
pub fn mst_complete(d: &DistanceMatrix) -> Result<WeightedTree> {
    let n = d.n();
    let edges = prim(n, |u, visit| {
        for (v, &w) in d.row(u).iter().enumerate() {
            if v != u {
                visit(v, w);
            }
        }
    })
    .expect("complete graph is connected");
    WeightedTree::from_data_edges(n, edges)?.with_labels(d.labels().map(<[String]>::to_vec))
}
