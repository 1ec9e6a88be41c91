//! Weighted trees, their path metrics, and unweighted graphs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::DistanceMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    /// Input point with the given index.
    Data(usize),
    /// Auxiliary node; serials start at 1.
    Steiner(usize),
}

impl NodeKind {
    pub fn is_steiner(self) -> bool {
        matches!(self, NodeKind::Steiner(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

impl Edge {
    pub fn other(&self, node: usize) -> usize {
        if node == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Which nodes a tree metric covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Restrict {
    /// Data nodes only, in input point order.
    Data,
    /// Every node, in node-id order.
    All,
}

/// A connected acyclic graph whose nodes are input points or Steiner nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTree {
    kinds: Vec<NodeKind>,
    edges: Vec<Edge>,
    /// node -> (neighbour, edge index)
    adj: Vec<Vec<(usize, usize)>>,
    /// point index -> node id
    data_nodes: Vec<usize>,
    labels: Option<Vec<String>>,
}

impl WeightedTree {
    /// Validates and indexes a tree.
    ///
    /// Data indices must be exactly `0..k` for some `k`; the edge set must
    /// connect all nodes without cycles.
    pub fn new(kinds: Vec<NodeKind>, edges: Vec<Edge>) -> Result<Self> {
        let m = kinds.len();
        let n_data = kinds.iter().filter(|k| !k.is_steiner()).count();
        let mut data_nodes = vec![usize::MAX; n_data];
        for (id, kind) in kinds.iter().enumerate() {
            if let NodeKind::Data(i) = *kind {
                if i >= n_data || data_nodes[i] != usize::MAX {
                    return Err(Error::InvalidTree(format!(
                        "data indices must be a permutation of 0..{n_data} (bad index {i})"
                    )));
                }
                data_nodes[i] = id;
            }
        }
        if m > 0 && edges.len() != m - 1 {
            return Err(Error::InvalidTree(format!(
                "{} nodes need {} edges, got {}",
                m,
                m - 1,
                edges.len()
            )));
        }
        if m == 0 && !edges.is_empty() {
            return Err(Error::InvalidTree("edges without nodes".into()));
        }
        let mut adj = vec![Vec::new(); m];
        for (k, e) in edges.iter().enumerate() {
            if e.u >= m || e.v >= m {
                return Err(Error::InvalidTree(format!("edge {k} references a missing node")));
            }
            if e.u == e.v {
                return Err(Error::InvalidTree(format!("edge {k} is a self-loop")));
            }
            if !e.weight.is_finite() {
                return Err(Error::InvalidTree(format!("edge {k} has weight {}", e.weight)));
            }
            adj[e.u].push((e.v, k));
            adj[e.v].push((e.u, k));
        }
        let tree = Self {
            kinds,
            edges,
            adj,
            data_nodes,
            labels: None,
        };
        if m > 0 {
            let reached = tree.bfs_order(0).len();
            if reached != m {
                return Err(Error::InvalidTree(format!(
                    "disconnected: reached {reached} of {m} nodes"
                )));
            }
        }
        Ok(tree)
    }

    /// Tree whose nodes are all data points `0..m` in order.
    pub fn from_data_edges(m: usize, edges: Vec<Edge>) -> Result<Self> {
        Self::new((0..m).map(NodeKind::Data).collect(), edges)
    }

    pub fn with_labels(mut self, labels: Option<Vec<String>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.data_nodes.len() {
                return Err(Error::Shape {
                    expected: self.data_nodes.len(),
                    found: l.len(),
                });
            }
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn data_count(&self) -> usize {
        self.data_nodes.len()
    }

    pub fn steiner_count(&self) -> usize {
        self.kinds.len() - self.data_nodes.len()
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.kinds[node]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbours of `node` as `(neighbour, edge index)`.
    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adj[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adj[node].len()
    }

    /// Node id holding input point `i`.
    pub fn data_node(&self, i: usize) -> usize {
        self.data_nodes[i]
    }

    /// File name of a node: the point label (or index) for data nodes,
    /// `_s<serial>` for Steiner nodes.
    pub fn node_name(&self, node: usize) -> String {
        match self.kinds[node] {
            NodeKind::Data(i) => match &self.labels {
                Some(l) => l[i].clone(),
                None => i.to_string(),
            },
            NodeKind::Steiner(s) => format!("_s{s}"),
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    /// Same topology with new edge weights (indexed like [`Self::edges`]).
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::Shape {
                expected: self.edges.len(),
                found: weights.len(),
            });
        }
        let mut t = self.clone();
        for (e, &w) in t.edges.iter_mut().zip(weights) {
            if !w.is_finite() {
                return Err(Error::InvalidTree(format!("weight {w}")));
            }
            e.weight = w;
        }
        Ok(t)
    }

    /// Sets every negative edge weight to zero.
    pub fn clamp_negative(&mut self) {
        for e in &mut self.edges {
            if e.weight < 0.0 {
                e.weight = 0.0;
            }
        }
    }

    pub(crate) fn bfs_order(&self, root: usize) -> Vec<usize> {
        let mut seen = vec![false; self.kinds.len()];
        let mut order = Vec::with_capacity(self.kinds.len());
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, _) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        order
    }

    /// Parent pointers `(parent, edge)` of a traversal from `root`; the root
    /// has `None`. Also returns the visiting order.
    pub fn rooted(&self, root: usize) -> (Vec<Option<(usize, usize)>>, Vec<usize>) {
        let m = self.kinds.len();
        let mut parent = vec![None; m];
        let mut seen = vec![false; m];
        let mut order = Vec::with_capacity(m);
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            order.push(u);
            for &(v, e) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some((u, e));
                    stack.push(v);
                }
            }
        }
        (parent, order)
    }

    /// Weighted distances from `source` to every node.
    pub fn distances_from(&self, source: usize) -> Vec<f64> {
        let mut dist = vec![f64::NAN; self.kinds.len()];
        dist[source] = 0.0;
        let mut stack = vec![source];
        while let Some(u) = stack.pop() {
            for &(v, e) in &self.adj[u] {
                if dist[v].is_nan() {
                    dist[v] = dist[u] + self.edges[e].weight;
                    stack.push(v);
                }
            }
        }
        dist
    }

    /// Edge indices on the unique path between nodes `a` and `b`.
    pub fn path_edges(&self, a: usize, b: usize) -> Vec<usize> {
        let (parent, _) = self.rooted(a);
        let mut path = Vec::new();
        let mut cur = b;
        while let Some((p, e)) = parent[cur] {
            path.push(e);
            cur = p;
        }
        path.reverse();
        path
    }

    /// A node of minimum hop eccentricity.
    pub fn center(&self) -> usize {
        if self.kinds.is_empty() {
            return 0;
        }
        // Peel leaves until one or two nodes remain.
        let m = self.kinds.len();
        let mut deg: Vec<usize> = self.adj.iter().map(Vec::len).collect();
        let mut layer: Vec<usize> = (0..m).filter(|&u| deg[u] <= 1).collect();
        let mut remaining = m;
        while remaining > 2 {
            remaining -= layer.len();
            let mut next = Vec::new();
            for &u in &layer {
                for &(v, _) in &self.adj[u] {
                    if deg[v] > 1 {
                        deg[v] -= 1;
                        if deg[v] == 1 {
                            next.push(v);
                        }
                    }
                }
                deg[u] = 0;
            }
            layer = next;
        }
        layer.into_iter().min().unwrap_or(0)
    }

    /// Renumbers data points so that point `i` carries `labels[i]`.
    ///
    /// Every label must name exactly one data node of this tree.
    pub fn relabel_to(&self, labels: &[String]) -> Result<Self> {
        if labels.len() != self.data_count() {
            return Err(Error::DimensionMismatch {
                left: self.data_count(),
                right: labels.len(),
            });
        }
        let lookup: std::collections::HashMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let mut kinds = self.kinds.clone();
        for (node, kind) in kinds.iter_mut().enumerate() {
            if let NodeKind::Data(_) = kind {
                let name = self.node_name(node);
                let idx = *lookup
                    .get(name.as_str())
                    .ok_or_else(|| Error::InvalidTree(format!("node {name} not in reference labels")))?;
                *kind = NodeKind::Data(idx);
            }
        }
        Self::new(kinds, self.edges.clone())?.with_labels(Some(labels.to_vec()))
    }
}

/// Path-length metric of a tree, one traversal per source.
pub fn tree_metric(t: &WeightedTree, restrict_to: Restrict) -> Result<DistanceMatrix> {
    let m = t.node_count();
    match restrict_to {
        Restrict::All => {
            let mut data = Vec::with_capacity(m * m);
            for u in 0..m {
                data.extend(t.distances_from(u));
            }
            DistanceMatrix::new(m, data)
        }
        Restrict::Data => {
            let n = t.data_count();
            let mut data = Vec::with_capacity(n * n);
            for i in 0..n {
                let dist = t.distances_from(t.data_node(i));
                data.extend((0..n).map(|j| dist[t.data_node(j)]));
            }
            let d = DistanceMatrix::new(n, data)?;
            match t.labels() {
                Some(l) => d.with_labels(l.to_vec()),
                None => Ok(d),
            }
        }
    }
}

/// Contracts edges of weight at most `tol` that touch a Steiner node.
///
/// The Steiner endpoint is merged into the other endpoint (data nodes are
/// always kept). Edges between two data nodes are never contracted. Steiner
/// serials are renumbered from 1 in node order.
pub fn contract_zero_edges(t: &WeightedTree, tol: f64) -> WeightedTree {
    let m = t.node_count();
    let mut rep: Vec<usize> = (0..m).collect();
    fn find(rep: &mut [usize], mut u: usize) -> usize {
        while rep[u] != u {
            rep[u] = rep[rep[u]];
            u = rep[u];
        }
        u
    }
    let mut contracted = vec![false; t.edge_count()];
    for (k, e) in t.edges().iter().enumerate() {
        if e.weight > tol {
            continue;
        }
        let (a, b) = (find(&mut rep, e.u), find(&mut rep, e.v));
        let (a_steiner, b_steiner) = (t.kind(a).is_steiner(), t.kind(b).is_steiner());
        if !a_steiner && !b_steiner {
            continue;
        }
        // keep the data endpoint as representative
        if a_steiner {
            rep[a] = b;
        } else {
            rep[b] = a;
        }
        contracted[k] = true;
    }
    if !contracted.iter().any(|&c| c) {
        return t.clone();
    }
    let mut new_id = vec![usize::MAX; m];
    let mut kinds = Vec::new();
    let mut serial = 0;
    for u in 0..m {
        if find(&mut rep, u) == u {
            new_id[u] = kinds.len();
            kinds.push(match t.kind(u) {
                NodeKind::Data(i) => NodeKind::Data(i),
                NodeKind::Steiner(_) => {
                    serial += 1;
                    NodeKind::Steiner(serial)
                }
            });
        }
    }
    let edges = t
        .edges()
        .iter()
        .zip(&contracted)
        .filter(|(_, &c)| !c)
        .map(|(e, _)| Edge {
            u: new_id[find(&mut rep, e.u)],
            v: new_id[find(&mut rep, e.v)],
            weight: e.weight,
        })
        .collect();
    WeightedTree::new(kinds, edges)
        .and_then(|nt| nt.with_labels(t.labels().map(<[String]>::to_vec)))
        .expect("contracting tree edges yields a tree")
}

/// Undirected graph with named nodes and optional edge weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Graph {
    names: Vec<String>,
    edges: Vec<(usize, usize, f64)>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph on `n` nodes named `0..n`.
    pub fn with_nodes(n: usize) -> Self {
        let mut g = Self::new();
        for i in 0..n {
            g.add_node(i.to_string());
        }
        g
    }

    pub fn add_node(&mut self, name: String) -> usize {
        self.names.push(name);
        self.adj.push(Vec::new());
        self.names.len() - 1
    }

    pub fn add_edge(&mut self, u: usize, v: usize, weight: f64) -> Result<()> {
        let n = self.names.len();
        for x in [u, v] {
            if x >= n {
                return Err(Error::IndexOutOfRange { index: x, n });
            }
        }
        if u == v {
            return Err(Error::SelfLoop(self.names[u].clone()));
        }
        self.edges.push((u, v, weight));
        self.adj[u].push((v, weight));
        self.adj[v].push((u, weight));
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adj[u]
    }

    /// Connected components, each sorted ascending, in order of smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.names.len();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![s];
            comp[s] = id;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = id;
                        members.push(v);
                        queue.push_back(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Induced subgraph on `nodes` (kept in the given order).
    pub fn subgraph(&self, nodes: &[usize]) -> Graph {
        let mut map = vec![usize::MAX; self.names.len()];
        let mut g = Graph::new();
        for &u in nodes {
            map[u] = g.add_node(self.names[u].clone());
        }
        for &(u, v, w) in &self.edges {
            if map[u] != usize::MAX && map[v] != usize::MAX {
                g.add_edge(map[u], map[v], w).expect("valid subgraph edge");
            }
        }
        g
    }

    /// Largest connected component; ties go to the component with the
    /// smallest node index.
    pub fn largest_component(&self) -> Graph {
        let comps = self.components();
        match comps.iter().enumerate().max_by_key(|(i, c)| (c.len(), std::cmp::Reverse(*i))) {
            Some((_, c)) if comps.len() > 1 => self.subgraph(c),
            _ => self.clone(),
        }
    }
}

/// Hop-count all-pairs shortest paths by one BFS per source.
pub fn bfs_apsp(g: &Graph) -> Result<DistanceMatrix> {
    let n = g.node_count();
    let comps = g.components();
    if comps.len() > 1 {
        return Err(Error::Disconnected {
            components: comps.len(),
            sizes: comps.iter().map(Vec::len).collect(),
        });
    }
    let mut data = vec![0.0; n * n];
    let mut hops = vec![usize::MAX; n];
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        hops.fill(usize::MAX);
        hops[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in g.neighbors(u) {
                if hops[v] == usize::MAX {
                    hops[v] = hops[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for (t, &h) in hops.iter().enumerate() {
            data[s * n + t] = h as f64;
        }
    }
    DistanceMatrix::new(n, data)?.with_labels(g.names().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(u: usize, v: usize, weight: f64) -> Edge {
        Edge { u, v, weight }
    }

    fn unit_star() -> WeightedTree {
        let kinds = vec![
            NodeKind::Data(0),
            NodeKind::Data(1),
            NodeKind::Data(2),
            NodeKind::Steiner(1),
        ];
        WeightedTree::new(kinds, vec![edge(0, 3, 1.0), edge(1, 3, 1.0), edge(2, 3, 1.0)]).unwrap()
    }

    fn path_graph(n: usize) -> Graph {
        let mut g = Graph::with_nodes(n);
        for i in 1..n {
            g.add_edge(i - 1, i, 1.0).unwrap();
        }
        g
    }

    #[test]
    fn star_metric() {
        let d = tree_metric(&unit_star(), Restrict::Data).unwrap();
        assert_eq!(d.n(), 3);
        for (_, _, v) in d.pairs() {
            assert_eq!(v, 2.0);
        }
        let all = tree_metric(&unit_star(), Restrict::All).unwrap();
        assert_eq!(all.n(), 4);
        assert_eq!(all.get(0, 3), 1.0);
    }

    #[test]
    fn single_edge_and_path() {
        let t = WeightedTree::from_data_edges(2, vec![edge(0, 1, 0.7)]).unwrap();
        assert_eq!(tree_metric(&t, Restrict::Data).unwrap().get(0, 1), 0.7);
        let p = WeightedTree::from_data_edges(3, vec![edge(0, 1, 1.0), edge(1, 2, 2.0)]).unwrap();
        assert_eq!(tree_metric(&p, Restrict::Data).unwrap().get(0, 2), 3.0);
        assert_eq!(p.path_edges(0, 2), vec![0, 1]);
    }

    #[test]
    fn rejects_cycles_and_disconnection() {
        let cyc = WeightedTree::from_data_edges(3, vec![edge(0, 1, 1.0), edge(1, 0, 1.0)]);
        assert!(cyc.is_err());
        let bad = WeightedTree::new(vec![NodeKind::Data(0), NodeKind::Data(0)], vec![edge(0, 1, 1.0)]);
        assert!(bad.is_err());
    }

    #[test]
    fn contract_collinear_universal_tree() {
        // x=0, y=1, z=2, r=3 with wy = 0
        let kinds = vec![
            NodeKind::Data(0),
            NodeKind::Data(1),
            NodeKind::Data(2),
            NodeKind::Steiner(1),
        ];
        let t = WeightedTree::new(kinds, vec![edge(0, 3, 1.0), edge(1, 3, 0.0), edge(2, 3, 1.0)]).unwrap();
        let c = contract_zero_edges(&t, 1e-12);
        assert_eq!(c.node_count(), 3);
        assert_eq!(c.steiner_count(), 0);
        assert_eq!(c.degree(c.data_node(1)), 2);
        assert_eq!(
            tree_metric(&c, Restrict::Data).unwrap(),
            tree_metric(&t, Restrict::Data).unwrap()
        );
    }

    #[test]
    fn contract_identity_and_chain() {
        let t = unit_star();
        assert_eq!(contract_zero_edges(&t, 1e-9), t);
        // a - s1 - s2 - b with zero Steiner edges plus c hanging on s2
        let kinds = vec![
            NodeKind::Data(0),
            NodeKind::Steiner(1),
            NodeKind::Steiner(2),
            NodeKind::Data(1),
            NodeKind::Data(2),
        ];
        let t = WeightedTree::new(
            kinds,
            vec![edge(0, 1, 0.0), edge(1, 2, 0.0), edge(2, 3, 2.0), edge(2, 4, 1.5)],
        )
        .unwrap();
        let c = contract_zero_edges(&t, 0.0);
        assert_eq!(c.node_count(), t.node_count() - 2);
        assert_eq!(
            tree_metric(&c, Restrict::Data).unwrap(),
            tree_metric(&t, Restrict::Data).unwrap()
        );
    }

    #[test]
    fn contract_keeps_data_data_zero_edges() {
        let t = WeightedTree::from_data_edges(2, vec![edge(0, 1, 0.0)]).unwrap();
        assert_eq!(contract_zero_edges(&t, 1e-9).node_count(), 2);
    }

    #[test]
    fn bfs_examples() {
        let d = bfs_apsp(&path_graph(4)).unwrap();
        assert_eq!(d.get(0, 3), 3.0);
        let mut k5 = Graph::with_nodes(5);
        for i in 0..5 {
            for j in (i + 1)..5 {
                k5.add_edge(i, j, 1.0).unwrap();
            }
        }
        assert!(bfs_apsp(&k5).unwrap().pairs().all(|(_, _, v)| v == 1.0));
        let mut c4 = path_graph(4);
        c4.add_edge(3, 0, 1.0).unwrap();
        let d = bfs_apsp(&c4).unwrap();
        assert_eq!((d.get(0, 2), d.get(1, 3)), (2.0, 2.0));
    }

    #[test]
    fn bfs_disconnected_and_components() {
        let mut g = path_graph(3);
        let a = g.add_node("a".into());
        let b = g.add_node("b".into());
        g.add_edge(a, b, 1.0).unwrap();
        match bfs_apsp(&g) {
            Err(Error::Disconnected { components, sizes }) => {
                assert_eq!(components, 2);
                assert_eq!(sizes, vec![3, 2]);
            }
            other => panic!("{other:?}"),
        }
        let big = g.largest_component();
        assert_eq!(big.node_count(), 3);
        assert!(g.add_edge(a, a, 1.0).is_err());
    }

    #[test]
    fn center_of_path() {
        let p = WeightedTree::from_data_edges(
            5,
            vec![edge(0, 1, 1.0), edge(1, 2, 1.0), edge(2, 3, 1.0), edge(3, 4, 1.0)],
        )
        .unwrap();
        assert_eq!(p.center(), 2);
        assert_eq!(unit_star().center(), 3);
    }
}
