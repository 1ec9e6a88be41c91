//! Python bindings: `import treerep`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ::treerep as core;
use core::evaluation::{average_distortion, map_score, optimal_scale, Scale};
use core::metric::{delta_hyperbolicity, gromov_product, DeltaMode};
use core::refinement::{build_path_system, refine_weights, PairSelection};
use core::tree::{bfs_apsp, tree_metric, Restrict};
use core::treerep::{seed_sequence, treerep_best, treerep_with, Criterion, TreeRepConfig};

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Dense symmetric distance matrix.
#[pyclass(name = "DistanceMatrix", module = "treerep", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDistanceMatrix {
    inner: core::DistanceMatrix,
}

#[pymethods]
impl PyDistanceMatrix {
    #[new]
    #[pyo3(signature = (rows, labels=None))]
    fn new(rows: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> PyResult<Self> {
        let mut inner = core::DistanceMatrix::from_rows(&rows).map_err(err)?;
        if let Some(l) = labels {
            inner = inner.with_labels(l).map_err(err)?;
        }
        Ok(Self { inner })
    }

    /// Reads the comma-separated text format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: core::io::parse_distance_matrix(text).map_err(err)?,
        })
    }

    fn to_text(&self) -> String {
        core::io::format_distance_matrix(&self.inner)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn labels(&self) -> Option<Vec<String>> {
        self.inner.labels().map(<[String]>::to_vec)
    }

    fn get(&self, i: usize, j: usize) -> PyResult<f64> {
        let n = self.inner.n();
        if i >= n || j >= n {
            return Err(err(core::Error::IndexOutOfRange { index: i.max(j), n }));
        }
        Ok(self.inner.get(i, j))
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        (0..self.inner.n()).map(|i| self.inner.row(i).to_vec()).collect()
    }

    fn max(&self) -> f64 {
        self.inner.max()
    }

    fn normalized(&self) -> PyResult<Self> {
        Ok(Self {
            inner: core::normalize_max(&self.inner).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("DistanceMatrix(n={})", self.inner.n())
    }
}

/// Undirected graph with named nodes.
#[pyclass(name = "Graph", module = "treerep", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: core::Graph,
}

#[pymethods]
impl PyGraph {
    /// Builds a graph from `(u, v)` or `(u, v, w)` tuples of node names.
    #[new]
    fn new(edges: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let mut text = String::new();
        for e in edges {
            let (u, v, w): (String, String, f64) = match e.extract::<(String, String, f64)>() {
                Ok(t) => t,
                Err(_) => {
                    let (u, v): (String, String) = e.extract()?;
                    (u, v, 1.0)
                }
            };
            text.push_str(&format!("{u} {v} {w}\n"));
        }
        Self::from_text(&text)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: core::io::parse_edge_list(text).map_err(err)?,
        })
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn largest_component(&self) -> Self {
        Self {
            inner: self.inner.largest_component(),
        }
    }

    /// Hop-count distances; the graph must be connected.
    fn distances(&self) -> PyResult<PyDistanceMatrix> {
        Ok(PyDistanceMatrix {
            inner: bfs_apsp(&self.inner).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Graph(nodes={}, edges={})", self.inner.node_count(), self.inner.edge_count())
    }
}

/// Weighted tree over the input points plus Steiner nodes.
#[pyclass(name = "Tree", module = "treerep", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTree {
    inner: core::WeightedTree,
}

#[pymethods]
impl PyTree {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: core::io::parse_tree(text).map_err(err)?,
        })
    }

    fn to_text(&self) -> String {
        core::io::format_tree(&self.inner)
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn data_count(&self) -> usize {
        self.inner.data_count()
    }

    fn steiner_count(&self) -> usize {
        self.inner.steiner_count()
    }

    fn total_weight(&self) -> f64 {
        self.inner.total_weight()
    }

    /// `(u, v, weight)` with nodes given by name.
    fn edges(&self) -> Vec<(String, String, f64)> {
        self.inner
            .edges()
            .iter()
            .map(|e| (self.inner.node_name(e.u), self.inner.node_name(e.v), e.weight))
            .collect()
    }

    /// Path metric between data points, or between all nodes.
    #[pyo3(signature = (all_nodes=false))]
    fn metric(&self, all_nodes: bool) -> PyResult<PyDistanceMatrix> {
        let restrict = if all_nodes { Restrict::All } else { Restrict::Data };
        Ok(PyDistanceMatrix {
            inner: tree_metric(&self.inner, restrict).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Tree(data={}, steiner={})",
            self.inner.data_count(),
            self.inner.steiner_count()
        )
    }
}

/// Fits a tree with TreeRep. With `runs > 1` the best of `runs` consecutive
/// seeds is kept, scored by MAP against `graph` if given, else by distortion.
#[pyfunction(name = "treerep")]
#[pyo3(signature = (d, seed=0, tol=0.1, threads=1, runs=1, graph=None))]
fn fit_treerep(
    py: Python<'_>,
    d: &PyDistanceMatrix,
    seed: u64,
    tol: f64,
    threads: usize,
    runs: usize,
    graph: Option<&PyGraph>,
) -> PyResult<PyTree> {
    let config = TreeRepConfig {
        seed,
        tol,
        threads,
        trace: false,
    };
    let tree = py
        .detach(|| {
            if runs <= 1 {
                return treerep_with(&d.inner, &config).map(|o| o.tree);
            }
            let criterion = match graph {
                Some(g) => Criterion::Map(&g.inner),
                None => Criterion::AvgDistortion,
            };
            treerep_best(&d.inner, &seed_sequence(seed, runs), criterion, &config).map(|b| b.tree)
        })
        .map_err(err)?;
    Ok(PyTree { inner: tree })
}

#[pyfunction]
fn neighbor_join(py: Python<'_>, d: &PyDistanceMatrix) -> PyResult<PyTree> {
    let inner = py.detach(|| core::neighbor_join(&d.inner)).map_err(err)?;
    Ok(PyTree { inner })
}

/// Minimum spanning tree of a graph or of the complete graph on a matrix.
#[pyfunction]
fn mst(input: Bound<'_, PyAny>) -> PyResult<PyTree> {
    let inner = if let Ok(g) = input.cast::<PyGraph>() {
        core::mst_prim(&g.get().inner)
    } else {
        let d = input.cast::<PyDistanceMatrix>()?;
        core::mst_complete(&d.get().inner)
    }
    .map_err(err)?;
    Ok(PyTree { inner })
}

#[pyfunction]
fn gromov(d: &PyDistanceMatrix, x: usize, y: usize, w: usize) -> PyResult<f64> {
    gromov_product(&d.inner, x, y, w).map_err(err)
}

/// Gromov δ: `"exact"` over all quadruples or `"fixed"` at one base point.
#[pyfunction]
#[pyo3(signature = (d, mode="exact", base=0))]
fn delta(py: Python<'_>, d: &PyDistanceMatrix, mode: &str, base: usize) -> PyResult<f64> {
    let mode = match mode {
        "exact" => DeltaMode::Exact,
        "fixed" => DeltaMode::FixedBase(base),
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    Ok(py.detach(|| delta_hyperbolicity(&d.inner, mode)).map_err(err)?.delta)
}

fn scale_of(s: &str) -> PyResult<Scale> {
    match s {
        "none" => Ok(Scale::None),
        "optimal" => Ok(Scale::Optimal),
        other => Err(PyValueError::new_err(format!("unknown scale {other:?}"))),
    }
}

#[pyfunction]
#[pyo3(signature = (learned, truth, scale="none"))]
fn distortion(learned: &PyDistanceMatrix, truth: &PyDistanceMatrix, scale: &str) -> PyResult<f64> {
    average_distortion(&learned.inner, &truth.inner, scale_of(scale)?).map_err(err)
}

#[pyfunction]
fn best_scale(learned: &PyDistanceMatrix, truth: &PyDistanceMatrix) -> PyResult<f64> {
    optimal_scale(&learned.inner, &truth.inner).map_err(err)
}

#[pyfunction]
fn mean_average_precision(graph: &PyGraph, d: &PyDistanceMatrix) -> PyResult<f64> {
    map_score(&graph.inner, &d.inner).map_err(err)
}

/// Random tree and its metric over every node.
#[pyfunction]
#[pyo3(signature = (depth, seed=0))]
fn random_tree_metric(depth: u32, seed: u64) -> PyResult<(PyTree, PyDistanceMatrix)> {
    let (t, d) = core::random_tree_metric(depth, seed).map_err(err)?;
    Ok((PyTree { inner: t }, PyDistanceMatrix { inner: d }))
}

#[pyfunction]
#[pyo3(signature = (n, k, scale=1.0, seed=0))]
fn sample_hyperboloid(n: usize, k: usize, scale: f64, seed: u64) -> PyResult<PyDistanceMatrix> {
    Ok(PyDistanceMatrix {
        inner: core::sample_hyperboloid(n, k, scale, seed).map_err(err)?,
    })
}

/// Poincaré-disk coordinates `(name, a, b)` for every tree node.
#[pyfunction]
#[pyo3(signature = (tree, tau=1.0, root=None))]
fn sarkar_embed(tree: &PyTree, tau: f64, root: Option<String>) -> PyResult<Vec<(String, f64, f64)>> {
    let t = &tree.inner;
    let root = match root {
        None => None,
        Some(name) => Some(
            (0..t.node_count())
                .find(|&v| t.node_name(v) == name)
                .ok_or_else(|| PyValueError::new_err(format!("no node named {name:?}")))?,
        ),
    };
    let e = core::sarkar_embed(t, tau, root).map_err(err)?;
    Ok(e.points
        .iter()
        .enumerate()
        .map(|(v, p)| (t.node_name(v), p.a, p.b))
        .collect())
}

#[pyfunction]
fn poincare_distance(p: (f64, f64), q: (f64, f64)) -> PyResult<f64> {
    let p = core::DiskPoint::new(p.0, p.1).map_err(err)?;
    let q = core::DiskPoint::new(q.0, q.1).map_err(err)?;
    core::poincare_distance(&p, &q).map_err(err)
}

/// Least-squares refit of the edge weights. Returns the new tree and the
/// residual before and after.
#[pyfunction]
#[pyo3(signature = (tree, d, samples=None, seed=0, nonneg=true))]
fn refine(
    tree: &PyTree,
    d: &PyDistanceMatrix,
    samples: Option<usize>,
    seed: u64,
    nonneg: bool,
) -> PyResult<(PyTree, f64, f64)> {
    let pairs = match samples {
        None => PairSelection::All,
        Some(k) => PairSelection::Sample { k, seed },
    };
    let ps = build_path_system(&tree.inner, pairs).map_err(err)?;
    let r = refine_weights(&tree.inner, &d.inner, &ps, nonneg).map_err(err)?;
    Ok((PyTree { inner: r.tree }, r.residual_before, r.residual_after))
}

#[pymodule(name = "treerep")]
fn treerep_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistanceMatrix>()?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyTree>()?;
    m.add_function(wrap_pyfunction!(fit_treerep, m)?)?;
    m.add_function(wrap_pyfunction!(neighbor_join, m)?)?;
    m.add_function(wrap_pyfunction!(mst, m)?)?;
    m.add_function(wrap_pyfunction!(gromov, m)?)?;
    m.add_function(wrap_pyfunction!(delta, m)?)?;
    m.add_function(wrap_pyfunction!(distortion, m)?)?;
    m.add_function(wrap_pyfunction!(best_scale, m)?)?;
    m.add_function(wrap_pyfunction!(mean_average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(random_tree_metric, m)?)?;
    m.add_function(wrap_pyfunction!(sample_hyperboloid, m)?)?;
    m.add_function(wrap_pyfunction!(sarkar_embed, m)?)?;
    m.add_function(wrap_pyfunction!(poincare_distance, m)?)?;
    m.add_function(wrap_pyfunction!(refine, m)?)?;
    Ok(())
}
