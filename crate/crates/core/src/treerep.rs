//! TreeRep: builds a weighted tree from a metric by repeatedly fitting a
//! three-point universal tree and sorting the remaining points into the seven
//! zones around it.
//!
//! On a tree metric (δ = 0) the output reproduces the input exactly with the
//! fewest possible nodes. On other metrics the output is still a valid tree;
//! each sorting step commits an additive error bounded by the local four-point
//! excess, which is recorded in the optional trace.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{average_distortion, map_score, Scale};
use crate::metric::{gromov, DistanceMatrix};
use crate::tree::{contract_zero_edges, tree_metric, Edge, Graph, NodeKind, Restrict, WeightedTree};

/// Equality tolerance used on max-normalized inputs.
pub const DEFAULT_TOL: f64 = 0.1;

/// Lists shorter than this are classified on the calling thread.
const PAR_THRESHOLD: usize = 256;

/// Distances between data points and the Steiner nodes created so far.
///
/// Data-to-data lookups go to the input matrix. Each Steiner node owns a dense
/// row over all `n + capacity` node ids; entries that were never set are NaN.
#[derive(Debug, Clone)]
pub struct ExtendedDistances<'a> {
    base: &'a DistanceMatrix,
    capacity: usize,
    steiner: Vec<Vec<f64>>,
}

impl<'a> ExtendedDistances<'a> {
    /// Room for `n` Steiner nodes, the most TreeRep ever creates.
    pub fn new(base: &'a DistanceMatrix) -> Self {
        Self::with_capacity(base, base.n())
    }

    pub fn with_capacity(base: &'a DistanceMatrix, capacity: usize) -> Self {
        Self {
            base,
            capacity,
            steiner: Vec::new(),
        }
    }

    pub fn data_count(&self) -> usize {
        self.base.n()
    }

    pub fn node_count(&self) -> usize {
        self.base.n() + self.steiner.len()
    }

    pub fn is_steiner(&self, node: usize) -> bool {
        node >= self.base.n()
    }

    fn add_steiner(&mut self) -> usize {
        assert!(self.steiner.len() < self.capacity, "Steiner capacity exceeded");
        let id = self.node_count();
        let mut row = vec![f64::NAN; self.base.n() + self.capacity];
        row[id] = 0.0;
        self.steiner.push(row);
        id
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        let n = self.base.n();
        if a >= n {
            self.steiner[a - n][b]
        } else if b >= n {
            self.steiner[b - n][a]
        } else {
            self.base.get(a, b)
        }
    }

    /// Records `d(a, b)`; at least one endpoint must be a Steiner node.
    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        let n = self.base.n();
        assert!(a >= n || b >= n, "data distances are fixed");
        if a >= n {
            self.steiner[a - n][b] = v;
        }
        if b >= n {
            self.steiner[b - n][a] = v;
        }
    }

    #[inline]
    fn product(&self, x: usize, y: usize, w: usize) -> f64 {
        gromov(self.get(w, x), self.get(w, y), self.get(x, y))
    }
}

/// Three nodes joined through a new Steiner node `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniversalTriple {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub r: usize,
    pub wx: f64,
    pub wy: f64,
    pub wz: f64,
}

/// Fits the four-node tree on `x, y, z`, allocating the Steiner node `r` and
/// recording its distances to the three corners. Weights within `tol` of zero
/// become exactly zero, so `r` later collapses onto that corner.
pub fn universal_tree(
    dist: &mut ExtendedDistances<'_>,
    x: usize,
    y: usize,
    z: usize,
    tol: f64,
) -> UniversalTriple {
    let snap = |v: f64| if v.abs() <= tol { 0.0 } else { v };
    let wx = snap(dist.product(y, z, x));
    let wy = snap(dist.product(x, z, y));
    let wz = snap(dist.product(x, y, z));
    let r = dist.add_steiner();
    dist.set(r, x, wx);
    dist.set(r, y, wy);
    dist.set(r, z, wz);
    UniversalTriple {
        x,
        y,
        z,
        r,
        wx,
        wy,
        wz,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Corner {
    X,
    Y,
    Z,
}

impl Corner {
    fn of(self, t: &UniversalTriple) -> usize {
        match self {
            Corner::X => t.x,
            Corner::Y => t.y,
            Corner::Z => t.z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Zone {
    /// Hangs off the Steiner node.
    SteinerOne,
    /// Hangs off a corner.
    One(Corner),
    /// Hangs off the interior of the corner's edge to the Steiner node.
    Two(Corner),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneAssignment {
    pub zone: Zone,
    /// Value recorded as `d(w, r)`.
    pub steiner_distance: f64,
    /// All three products vanish: `w` sits on the Steiner node itself.
    pub replaces_steiner: bool,
    /// Gap between the two smallest Gromov products at `w`.
    pub local_error: f64,
}

/// Sorts `w` into one of the seven zones of `triple`.
pub fn classify_zone(
    dist: &ExtendedDistances<'_>,
    triple: &UniversalTriple,
    w: usize,
    tol: f64,
) -> ZoneAssignment {
    let (x, y, z) = (triple.x, triple.y, triple.z);
    let a = dist.product(x, y, w);
    let b = dist.product(y, z, w);
    let c = dist.product(z, x, w);

    let mut sorted = [a, b, c];
    sorted.sort_by(f64::total_cmp);
    let local_error = (sorted[1] - sorted[0]).abs();

    if (a - b).abs() <= tol && (b - c).abs() <= tol && (a - c).abs() <= tol {
        return ZoneAssignment {
            zone: Zone::SteinerOne,
            steiner_distance: a,
            replaces_steiner: a <= tol,
            local_error,
        };
    }
    // corner opposite the largest product, with the two smaller products
    let (corner, m1, m2, largest) = if a >= b && a >= c {
        (Corner::Z, b, c, a)
    } else if b >= c {
        (Corner::X, a, c, b)
    } else {
        (Corner::Y, a, b, c)
    };
    let dw = dist.get(w, corner.of(triple));
    let zone = if (dw - m1).abs() <= tol || (dw - m2).abs() <= tol {
        Zone::One(corner)
    } else {
        Zone::Two(corner)
    };
    ZoneAssignment {
        zone,
        steiner_distance: largest,
        replaces_steiner: false,
        local_error,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeRepConfig {
    pub seed: u64,
    pub tol: f64,
    /// Worker threads for zone classification; 1 runs on the caller's thread.
    pub threads: usize,
    /// Keep one [`Classification`] per sorted point.
    pub trace: bool,
}

impl Default for TreeRepConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tol: DEFAULT_TOL,
            threads: 1,
            trace: false,
        }
    }
}

/// One zone decision made during a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    /// Index of the recursive step (0 = the initial triple).
    pub step: usize,
    pub triple: UniversalTriple,
    /// Node id of the sorted point; ids `>= n` are Steiner nodes of the run.
    pub w: usize,
    pub assignment: ZoneAssignment,
}

#[derive(Debug, Clone)]
pub struct TreeRepOutput {
    pub tree: WeightedTree,
    pub trace: Vec<Classification>,
    /// Steiner nodes created before contraction.
    pub steiner_created: usize,
}

enum Task {
    Step {
        list: Vec<usize>,
        x: usize,
        y: usize,
        z: usize,
    },
    ZoneOne {
        list: Vec<usize>,
        anchor: usize,
    },
    ZoneTwo {
        list: Vec<usize>,
        u: usize,
        v: usize,
    },
}

struct Builder<'a> {
    dist: ExtendedDistances<'a>,
    adj: Vec<Vec<(usize, f64)>>,
    tol: f64,
    pool: Option<rayon::ThreadPool>,
    trace: Option<Vec<Classification>>,
    steps: usize,
}

impl Builder<'_> {
    fn connect(&mut self, u: usize, v: usize, w: f64) {
        let m = u.max(v) + 1;
        if self.adj.len() < m {
            self.adj.resize_with(m, Vec::new);
        }
        self.adj[u].push((v, w));
        self.adj[v].push((u, w));
    }

    fn disconnect(&mut self, u: usize, v: usize) {
        let before = self.adj[u].len();
        self.adj[u].retain(|&(t, _)| t != v);
        self.adj[v].retain(|&(t, _)| t != u);
        assert_eq!(before, self.adj[u].len() + 1, "edge ({u}, {v}) missing");
    }

    fn classify_all(&self, triple: &UniversalTriple, list: &[usize]) -> Vec<ZoneAssignment> {
        let f = |&w: &usize| classify_zone(&self.dist, triple, w, self.tol);
        match &self.pool {
            Some(pool) if list.len() >= PAR_THRESHOLD => pool.install(|| list.par_iter().map(f).collect()),
            _ => list.iter().map(f).collect(),
        }
    }

    fn step(&mut self, list: Vec<usize>, x: usize, y: usize, z: usize, stack: &mut Vec<Task>) {
        let triple = universal_tree(&mut self.dist, x, y, z, self.tol);
        let r = triple.r;
        self.connect(x, r, triple.wx);
        self.connect(y, r, triple.wy);
        self.connect(z, r, triple.wz);

        let assignments = self.classify_all(&triple, &list);
        let mut one_r = Vec::new();
        let mut one = [Vec::new(), Vec::new(), Vec::new()];
        let mut two = [Vec::new(), Vec::new(), Vec::new()];
        let slot = |c: Corner| match c {
            Corner::X => 0,
            Corner::Y => 1,
            Corner::Z => 2,
        };
        for (&w, a) in list.iter().zip(&assignments) {
            self.dist.set(w, r, a.steiner_distance);
            match a.zone {
                Zone::SteinerOne => one_r.push(w),
                Zone::One(c) => one[slot(c)].push(w),
                Zone::Two(c) => two[slot(c)].push(w),
            }
            if let Some(trace) = &mut self.trace {
                trace.push(Classification {
                    step: self.steps,
                    triple,
                    w,
                    assignment: *a,
                });
            }
        }
        self.steps += 1;

        // Pushed in reverse so they run in the usual recursion order.
        let [two_x, two_y, two_z] = two;
        stack.push(Task::ZoneTwo { list: two_z, u: z, v: r });
        stack.push(Task::ZoneTwo { list: two_y, u: y, v: r });
        stack.push(Task::ZoneTwo { list: two_x, u: x, v: r });
        let [one_x, one_y, one_z] = one;
        stack.push(Task::ZoneOne { list: one_z, anchor: z });
        stack.push(Task::ZoneOne { list: one_y, anchor: y });
        stack.push(Task::ZoneOne { list: one_x, anchor: x });
        stack.push(Task::ZoneOne { list: one_r, anchor: r });
    }

    fn run(&mut self, mut stack: Vec<Task>) {
        while let Some(task) = stack.pop() {
            match task {
                Task::Step { list, x, y, z } => self.step(list, x, y, z, &mut stack),
                Task::ZoneOne { mut list, anchor } => match list.len() {
                    0 => {}
                    1 => {
                        let u = list[0];
                        let mut w = self.dist.get(u, anchor);
                        if self.dist.is_steiner(anchor) && w.abs() <= self.tol {
                            // u coincides with the Steiner node and replaces it
                            w = 0.0;
                        }
                        self.connect(u, anchor, w);
                    }
                    _ => {
                        let rest = list.split_off(2);
                        stack.push(Task::Step {
                            list: rest,
                            x: anchor,
                            y: list[0],
                            z: list[1],
                        });
                    }
                },
                Task::ZoneTwo { mut list, u, v } => {
                    if list.is_empty() {
                        continue;
                    }
                    let mut best = 0;
                    for (k, &w) in list.iter().enumerate().skip(1) {
                        if self.dist.get(w, v) < self.dist.get(list[best], v) {
                            best = k;
                        }
                    }
                    let z = list.remove(best);
                    self.disconnect(u, v);
                    stack.push(Task::Step { list, x: v, y: u, z });
                }
            }
        }
    }

    fn into_tree(self, n: usize, labels: Option<&[String]>) -> Result<(WeightedTree, usize)> {
        let total = self.dist.node_count();
        let steiner = total - n;
        let kinds: Vec<NodeKind> = (0..total)
            .map(|id| if id < n { NodeKind::Data(id) } else { NodeKind::Steiner(id - n + 1) })
            .collect();
        let mut edges = Vec::with_capacity(total.saturating_sub(1));
        for (u, nbrs) in self.adj.iter().enumerate() {
            for &(v, w) in nbrs {
                if u < v {
                    edges.push(Edge {
                        u,
                        v,
                        weight: w.max(0.0),
                    });
                }
            }
        }
        let tree = WeightedTree::new(kinds, edges)?.with_labels(labels.map(<[String]>::to_vec))?;
        Ok((contract_zero_edges(&tree, 0.0), steiner))
    }
}

/// Runs TreeRep with full control over seed, tolerance, threads and tracing.
///
/// Negative weights (possible when δ > 0) are clamped to zero, then zero
/// edges at Steiner nodes are contracted.
pub fn treerep_with(d: &DistanceMatrix, config: &TreeRepConfig) -> Result<TreeRepOutput> {
    if !(config.tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be >= 0, got {}", config.tol)));
    }
    let n = d.n();
    let labels = d.labels().map(<[String]>::to_vec);
    let trivial = |tree: WeightedTree| -> Result<TreeRepOutput> {
        Ok(TreeRepOutput {
            tree: tree.with_labels(labels.clone())?,
            trace: Vec::new(),
            steiner_created: 0,
        })
    };
    match n {
        0 => return trivial(WeightedTree::new(Vec::new(), Vec::new())?),
        1 => return trivial(WeightedTree::from_data_edges(1, Vec::new())?),
        2 => {
            return trivial(WeightedTree::from_data_edges(
                2,
                vec![Edge {
                    u: 0,
                    v: 1,
                    weight: d.get(0, 1),
                }],
            )?)
        }
        _ => {}
    }

    let pool = if config.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?,
        )
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let picked = sample(&mut rng, n, 3).into_vec();
    let (x, y, z) = (picked[0], picked[1], picked[2]);
    let list: Vec<usize> = (0..n).filter(|&i| i != x && i != y && i != z).collect();

    let mut builder = Builder {
        dist: ExtendedDistances::new(d),
        adj: vec![Vec::new(); n],
        tol: config.tol,
        pool,
        trace: config.trace.then(Vec::new),
        steps: 0,
    };
    builder.run(vec![Task::Step { list, x, y, z }]);
    let trace = builder.trace.take().unwrap_or_default();
    let (tree, steiner_created) = builder.into_tree(n, d.labels())?;
    Ok(TreeRepOutput {
        tree,
        trace,
        steiner_created,
    })
}

/// Single-threaded TreeRep with the given seed and equality tolerance.
pub fn treerep(d: &DistanceMatrix, seed: u64, tol: f64) -> Result<WeightedTree> {
    treerep_with(
        d,
        &TreeRepConfig {
            seed,
            tol,
            ..TreeRepConfig::default()
        },
    )
    .map(|o| o.tree)
}

/// How [`treerep_best`] ranks candidate trees.
#[derive(Debug, Clone, Copy)]
pub enum Criterion<'g> {
    /// Lowest unscaled average distortion.
    AvgDistortion,
    /// Highest MAP against the graph.
    Map(&'g Graph),
}

#[derive(Debug, Clone)]
pub struct BestOf {
    pub tree: WeightedTree,
    pub best_index: usize,
    pub seeds: Vec<u64>,
    pub scores: Vec<f64>,
}

/// Runs TreeRep once per seed and keeps the best tree under `criterion`.
/// Ties keep the earliest run.
pub fn treerep_best(
    d: &DistanceMatrix,
    seeds: &[u64],
    criterion: Criterion<'_>,
    config: &TreeRepConfig,
) -> Result<BestOf> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    let mut best: Option<(usize, f64, WeightedTree)> = None;
    let mut scores = Vec::with_capacity(seeds.len());
    for (k, &seed) in seeds.iter().enumerate() {
        let tree = treerep_with(d, &TreeRepConfig { seed, ..*config })?.tree;
        let learned = tree_metric(&tree, Restrict::Data)?;
        let score = match criterion {
            Criterion::AvgDistortion => average_distortion(&learned, d, Scale::None)?,
            Criterion::Map(g) => map_score(g, &learned)?,
        };
        scores.push(score);
        let better = match (&best, criterion) {
            (None, _) => true,
            (Some((_, s, _)), Criterion::AvgDistortion) => score < *s,
            (Some((_, s, _)), Criterion::Map(_)) => score > *s,
        };
        if better {
            best = Some((k, score, tree));
        }
    }
    let (best_index, _, tree) = best.expect("at least one run");
    Ok(BestOf {
        tree,
        best_index,
        seeds: seeds.to_vec(),
        scores,
    })
}

/// `runs` consecutive seeds starting at `base`.
pub fn seed_sequence(base: u64, runs: usize) -> Vec<u64> {
    (0..runs as u64).map(|i| base.wrapping_add(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> DistanceMatrix {
        DistanceMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    /// Unit star on data 0,1,2 plus a fourth point at the given distances.
    fn star_plus(dw: [f64; 3]) -> DistanceMatrix {
        matrix(&[
            &[0.0, 2.0, 2.0, dw[0]],
            &[2.0, 0.0, 2.0, dw[1]],
            &[2.0, 2.0, 0.0, dw[2]],
            &[dw[0], dw[1], dw[2], 0.0],
        ])
    }

    fn classify_fourth(dw: [f64; 3]) -> ZoneAssignment {
        let d = star_plus(dw);
        let mut dist = ExtendedDistances::new(&d);
        let t = universal_tree(&mut dist, 0, 1, 2, 1e-9);
        classify_zone(&dist, &t, 3, 1e-9)
    }

    #[test]
    fn universal_equilateral() {
        let d = matrix(&[&[0.0, 2.0, 2.0], &[2.0, 0.0, 2.0], &[2.0, 2.0, 0.0]]);
        let mut dist = ExtendedDistances::new(&d);
        let t = universal_tree(&mut dist, 0, 1, 2, 1e-9);
        assert_eq!((t.wx, t.wy, t.wz), (1.0, 1.0, 1.0));
        assert_eq!(t.r, 3);
        assert_eq!(dist.get(3, 1), 1.0);
    }

    #[test]
    fn universal_scalene_reproduces_metric() {
        let d = matrix(&[&[0.0, 3.0, 4.0], &[3.0, 0.0, 5.0], &[4.0, 5.0, 0.0]]);
        let mut dist = ExtendedDistances::new(&d);
        let t = universal_tree(&mut dist, 0, 1, 2, 1e-9);
        assert_eq!((t.wx, t.wy, t.wz), (1.0, 2.0, 3.0));
        assert_eq!(t.wx + t.wy, 3.0);
        assert_eq!(t.wx + t.wz, 4.0);
        assert_eq!(t.wy + t.wz, 5.0);
    }

    #[test]
    fn universal_collinear_snaps_to_corner() {
        let d = matrix(&[&[0.0, 1.0, 2.0], &[1.0, 0.0, 1.0], &[2.0, 1.0, 0.0]]);
        let tree = treerep(&d, 0, 1e-9).unwrap();
        assert_eq!(tree.node_count(), 3);
        assert_eq!(tree.steiner_count(), 0);
        assert_eq!(tree.degree(tree.data_node(1)), 2);
    }

    #[test]
    fn zone_one_corner() {
        let a = classify_fourth([0.5, 2.5, 2.5]);
        assert_eq!(a.zone, Zone::One(Corner::X));
        assert_eq!(a.steiner_distance, 1.5);
        assert_eq!(a.local_error, 0.0);
    }

    #[test]
    fn zone_two_corner() {
        let a = classify_fourth([0.7, 1.3, 1.3]);
        assert_eq!(a.zone, Zone::Two(Corner::X));
        assert!((a.steiner_distance - 0.3).abs() < 1e-12);
    }

    #[test]
    fn zone_one_steiner() {
        let a = classify_fourth([1.4, 1.4, 1.4]);
        assert_eq!(a.zone, Zone::SteinerOne);
        assert!((a.steiner_distance - 0.4).abs() < 1e-12);
        assert!(!a.replaces_steiner);
        let b = classify_fourth([1.0, 1.0, 1.0]);
        assert!(b.replaces_steiner);
    }

    #[test]
    fn other_corners() {
        assert_eq!(classify_fourth([2.5, 0.5, 2.5]).zone, Zone::One(Corner::Y));
        assert_eq!(classify_fourth([2.5, 2.5, 0.5]).zone, Zone::One(Corner::Z));
        assert_eq!(classify_fourth([1.3, 1.3, 0.7]).zone, Zone::Two(Corner::Z));
    }

    #[test]
    fn trivial_sizes() {
        assert_eq!(treerep(&DistanceMatrix::empty(), 0, 0.1).unwrap().node_count(), 0);
        let one = DistanceMatrix::new(1, vec![0.0]).unwrap();
        assert_eq!(treerep(&one, 0, 0.1).unwrap().node_count(), 1);
        let two = matrix(&[&[0.0, 3.0], &[3.0, 0.0]]);
        let t = treerep(&two, 0, 0.1).unwrap();
        assert_eq!(t.edges()[0].weight, 3.0);
    }

    #[test]
    fn equilateral_gives_unit_star() {
        let d = matrix(&[&[0.0, 2.0, 2.0], &[2.0, 0.0, 2.0], &[2.0, 2.0, 0.0]]);
        for seed in 0..5 {
            let t = treerep(&d, seed, 0.1).unwrap();
            assert_eq!(t.node_count(), 4);
            assert_eq!(t.steiner_count(), 1);
            assert!(t.edges().iter().all(|e| e.weight == 1.0));
        }
    }

    #[test]
    fn star_with_fourth_point_is_exact() {
        for dw in [[0.5, 2.5, 2.5], [0.7, 1.3, 1.3], [1.4, 1.4, 1.4], [1.0, 1.0, 1.0]] {
            let d = star_plus(dw);
            for seed in 0..8 {
                let t = treerep(&d, seed, 1e-9).unwrap();
                let dt = tree_metric(&t, Restrict::Data).unwrap();
                for (i, j, v) in d.pairs() {
                    assert!((dt.get(i, j) - v).abs() < 1e-12, "{dw:?} seed {seed}");
                }
            }
        }
    }

    #[test]
    fn best_of_validates_runs() {
        let d = matrix(&[&[0.0, 2.0, 2.0], &[2.0, 0.0, 2.0], &[2.0, 2.0, 0.0]]);
        assert!(treerep_best(&d, &[], Criterion::AvgDistortion, &TreeRepConfig::default()).is_err());
        let best = treerep_best(&d, &[4], Criterion::AvgDistortion, &TreeRepConfig::default()).unwrap();
        assert_eq!(best.tree, treerep(&d, 4, DEFAULT_TOL).unwrap());
        assert_eq!(best.scores, vec![0.0]);
    }
}
