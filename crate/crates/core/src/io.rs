//! Plain-text formats.
//!
//! * distance matrix: `n` lines of `n` comma-separated numbers, no header;
//! * edge list: `u v` or `u v w` per line, whitespace separated, `#` starts a
//!   comment, names are arbitrary tokens indexed in first-seen order. A line
//!   holding a single name declares a node without edges (single-node trees);
//! * tree: an edge list whose Steiner nodes are named `_s1`, `_s2`, …;
//! * disk embedding: CSV lines `name,a,b`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::hyperbolic::DiskEmbedding;
use crate::metric::DistanceMatrix;
use crate::tree::{Edge, Graph, NodeKind, WeightedTree};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn parse_distance_matrix(text: &str) -> Result<DistanceMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut lines = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(k + 1, format!("not a number: {:?}", tok.trim())))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
        lines.push(k + 1);
    }
    let n = rows.len();
    for (row, &line) in rows.iter().zip(&lines) {
        if row.len() != n {
            return Err(parse_err(line, format!("expected {n} entries, found {}", row.len())));
        }
    }
    DistanceMatrix::from_rows(&rows)
}

pub fn read_distance_matrix(path: &std::path::Path) -> Result<DistanceMatrix> {
    parse_distance_matrix(&std::fs::read_to_string(path)?)
}

pub fn format_distance_matrix(d: &DistanceMatrix) -> String {
    let mut out = String::new();
    for i in 0..d.n() {
        let row: Vec<String> = d.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// One parsed edge-list line.
enum EdgeLine<'a> {
    Node(&'a str),
    Edge(&'a str, &'a str, Option<f64>),
}

fn edge_lines(text: &str) -> impl Iterator<Item = (usize, Result<EdgeLine<'_>>)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return None;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let parsed = match toks.as_slice() {
            [u] => Ok(EdgeLine::Node(u)),
            [u, v] => Ok(EdgeLine::Edge(u, v, None)),
            [u, v, w] => w
                .parse::<f64>()
                .ok()
                .filter(|w| w.is_finite())
                .map(|w| EdgeLine::Edge(u, v, Some(w)))
                .ok_or_else(|| parse_err(k + 1, format!("bad weight {w:?}"))),
            _ => Err(parse_err(k + 1, format!("expected 'u v [w]', got {} fields", toks.len()))),
        };
        Some((k + 1, parsed))
    })
}

/// Parses an edge list into a graph; missing weights default to 1.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut g = Graph::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut id = |g: &mut Graph, name: &str| -> usize {
        if let Some(&i) = index.get(name) {
            return i;
        }
        let i = g.add_node(name.to_string());
        index.insert(name.to_string(), i);
        i
    };
    for (line, parsed) in edge_lines(text) {
        match parsed? {
            EdgeLine::Node(u) => {
                id(&mut g, u);
            }
            EdgeLine::Edge(u, v, w) => {
                let (a, b) = (id(&mut g, u), id(&mut g, v));
                g.add_edge(a, b, w.unwrap_or(1.0))
                    .map_err(|e| parse_err(line, e.to_string()))?;
            }
        }
    }
    Ok(g)
}

pub fn read_edge_list(path: &std::path::Path) -> Result<Graph> {
    parse_edge_list(&std::fs::read_to_string(path)?)
}

fn is_steiner_name(name: &str) -> bool {
    name.strip_prefix("_s")
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

/// Parses a tree file.
///
/// Data nodes named `0..k` (in any order) become those point indices with no
/// labels; otherwise data points are numbered in first-seen order and keep
/// their names as labels.
pub fn parse_tree(text: &str) -> Result<WeightedTree> {
    let g = parse_edge_list(text)?;
    let names = g.names();
    let data: Vec<usize> = (0..names.len()).filter(|&i| !is_steiner_name(&names[i])).collect();
    let numeric: Option<Vec<usize>> = data.iter().map(|&i| names[i].parse::<usize>().ok()).collect();
    let numeric = numeric.filter(|idx| {
        let mut seen = vec![false; idx.len()];
        idx.iter().all(|&i| i < seen.len() && !std::mem::replace(&mut seen[i], true))
    });
    let mut kinds = vec![NodeKind::Steiner(0); names.len()];
    let mut serial = 0;
    for (node, kind) in kinds.iter_mut().enumerate() {
        if is_steiner_name(&names[node]) {
            serial += 1;
            *kind = NodeKind::Steiner(serial);
        }
    }
    let labels = match &numeric {
        Some(idx) => {
            for (&node, &i) in data.iter().zip(idx) {
                kinds[node] = NodeKind::Data(i);
            }
            None
        }
        None => {
            for (k, &node) in data.iter().enumerate() {
                kinds[node] = NodeKind::Data(k);
            }
            Some(data.iter().map(|&i| names[i].clone()).collect())
        }
    };
    let edges = g
        .edges()
        .iter()
        .map(|&(u, v, weight)| Edge { u, v, weight })
        .collect();
    WeightedTree::new(kinds, edges)?.with_labels(labels)
}

pub fn read_tree(path: &std::path::Path) -> Result<WeightedTree> {
    parse_tree(&std::fs::read_to_string(path)?)
}

/// Edge-list text for a tree; weights use the shortest exact decimal form.
pub fn format_tree(t: &WeightedTree) -> String {
    let mut out = String::new();
    if t.edge_count() == 0 {
        for node in 0..t.node_count() {
            let _ = writeln!(out, "{}", t.node_name(node));
        }
    }
    for e in t.edges() {
        let _ = writeln!(out, "{} {} {}", t.node_name(e.u), t.node_name(e.v), e.weight);
    }
    out
}

pub fn format_graph(g: &Graph) -> String {
    let mut out = String::new();
    for &(u, v, w) in g.edges() {
        let _ = writeln!(out, "{} {} {}", g.names()[u], g.names()[v], w);
    }
    out
}

pub fn format_embedding(t: &WeightedTree, e: &DiskEmbedding) -> String {
    let mut out = String::new();
    for (node, p) in e.points.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", t.node_name(node), p.a, p.b);
    }
    out
}

/// Reads `name,a,b` rows.
pub fn parse_embedding<R: BufRead>(reader: R) -> Result<Vec<(String, f64, f64)>> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(parse_err(k + 1, "expected name,a,b"));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(k + 1, format!("not a number: {s:?}")))
        };
        out.push((parts[0].to_string(), num(parts[1])?, num(parts[2])?));
    }
    Ok(out)
}

pub fn write_file(path: &std::path::Path, contents: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}
