//! Poincaré-disk and hyperboloid distances, and Sarkar's embedding of a
//! weighted tree into the disk.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::WeightedTree;

/// Points closer to the unit circle than this (in `1 − |p|²`) are refused.
pub const DISK_MARGIN: f64 = 1e-15;

const HYPERBOLOID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint {
    pub a: f64,
    pub b: f64,
}

impl DiskPoint {
    pub const ORIGIN: DiskPoint = DiskPoint { a: 0.0, b: 0.0 };

    pub fn new(a: f64, b: f64) -> Result<Self> {
        let p = Self { a, b };
        p.check()?;
        Ok(p)
    }

    pub fn norm_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }

    fn check(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite()) || self.norm_sq() >= 1.0 {
            return Err(Error::OutsideDisk(self.a, self.b));
        }
        Ok(())
    }

    #[cfg(test)]
    fn to_complex(self) -> Complex64 {
        Complex64::new(self.a, self.b)
    }

    fn from_complex(z: Complex64) -> Self {
        Self { a: z.re, b: z.im }
    }
}

/// Geodesic distance in the Poincaré disk,
/// `arcosh(1 + 2‖p−q‖² / ((1−‖p‖²)(1−‖q‖²)))`, evaluated through the
/// half-angle form for accuracy at short range.
pub fn poincare_distance(p: &DiskPoint, q: &DiskPoint) -> Result<f64> {
    p.check()?;
    q.check()?;
    let diff = ((p.a - q.a).powi(2) + (p.b - q.b).powi(2)).sqrt();
    let denom = ((1.0 - p.norm_sq()) * (1.0 - q.norm_sq())).sqrt();
    Ok(2.0 * (diff / denom).asinh())
}

/// Point on the upper sheet `x₀² − Σ xᵢ² = 1`, `x₀ > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperboloidPoint {
    coords: Vec<f64>,
}

impl HyperboloidPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NotOnHyperboloid(f64::NAN));
        }
        let spatial: f64 = coords[1..].iter().map(|c| c * c).sum();
        let residual = coords[0] * coords[0] - spatial - 1.0;
        if coords[0] <= 0.0 || residual.abs() > HYPERBOLOID_TOL * coords[0].powi(2).max(1.0) {
            return Err(Error::NotOnHyperboloid(residual));
        }
        Ok(Self { coords })
    }

    /// Lifts spatial coordinates `(x₁, …, x_k)` onto the sheet.
    pub fn lift(spatial: &[f64]) -> Self {
        let x0 = (1.0 + spatial.iter().map(|c| c * c).sum::<f64>()).sqrt();
        let mut coords = Vec::with_capacity(spatial.len() + 1);
        coords.push(x0);
        coords.extend_from_slice(spatial);
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }
}

/// `arcosh(p₀q₀ − Σ pᵢqᵢ)` with the argument floored at 1.
///
/// Short distances go through `2·asinh(‖p − q‖_L / 2)` instead, which is
/// exact for coincident points and avoids the flat top of `arcosh` near 1.
pub fn hyperboloid_distance(p: &HyperboloidPoint, q: &HyperboloidPoint) -> Result<f64> {
    if p.coords.len() != q.coords.len() {
        return Err(Error::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    let spatial: f64 = p.coords[1..].iter().zip(&q.coords[1..]).map(|(a, b)| a * b).sum();
    let arg = (p.coords[0] * q.coords[0] - spatial).max(1.0);
    if arg > 2.0 {
        return Ok(arg.acosh());
    }
    let diff_sq: f64 = p.coords[1..]
        .iter()
        .zip(&q.coords[1..])
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        - (p.coords[0] - q.coords[0]).powi(2);
    Ok(2.0 * (0.5 * diff_sq.max(0.0).sqrt()).asinh())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiskEmbedding {
    /// Indexed by tree node id.
    pub points: Vec<DiskPoint>,
    pub root: usize,
    pub tau: f64,
}

impl DiskEmbedding {
    /// Disk distance divided by `tau`, comparable to the tree metric.
    pub fn scaled_distance(&self, u: usize, v: usize) -> Result<f64> {
        Ok(poincare_distance(&self.points[u], &self.points[v])? / self.tau)
    }
}

/// Isometry of the disk taking `p` to the origin.
fn to_origin(p: Complex64, z: Complex64) -> Complex64 {
    (z - p) / (Complex64::new(1.0, 0.0) - p.conj() * z)
}

/// Inverse of [`to_origin`].
fn from_origin(p: Complex64, z: Complex64) -> Complex64 {
    (z + p) / (Complex64::new(1.0, 0.0) + p.conj() * z)
}

/// Places the tree in the Poincaré disk so that every edge of weight `w`
/// spans disk distance `tau · w`.
///
/// The root sits at the origin. Around every node the neighbours are spread at
/// equal angles `2π / deg`, with the parent occupying one of the slots, so the
/// cone of half-angle `π / deg` around the parent direction stays empty.
/// `root = None` picks a tree center.
pub fn sarkar_embed(t: &WeightedTree, tau: f64, root: Option<usize>) -> Result<DiskEmbedding> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    let m = t.node_count();
    if m == 0 {
        return Ok(DiskEmbedding {
            points: Vec::new(),
            root: 0,
            tau,
        });
    }
    let root = root.unwrap_or_else(|| t.center());
    if root >= m {
        return Err(Error::IndexOutOfRange { index: root, n: m });
    }
    if t.edges().iter().any(|e| e.weight < 0.0) {
        return Err(Error::InvalidArgument("edge weights must be nonnegative".into()));
    }

    let mut pos = vec![Complex64::new(0.0, 0.0); m];
    let mut parent = vec![usize::MAX; m];
    let mut placed = vec![false; m];
    placed[root] = true;
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        let p = pos[v];
        let deg = t.degree(v);
        let step = 2.0 * PI / deg as f64;
        // direction of the parent as seen from v
        let start = if parent[v] == usize::MAX {
            0.0
        } else {
            let q = to_origin(p, pos[parent[v]]);
            if q.norm() > 0.0 {
                q.arg()
            } else {
                // parent coincides with v; inherit the incoming direction
                let gp = parent[parent[v]];
                if gp == usize::MAX {
                    0.0
                } else {
                    to_origin(p, pos[gp]).arg()
                }
            }
        };
        let mut slot = if parent[v] == usize::MAX { 0 } else { 1 };
        for &(c, e) in t.neighbors(v) {
            if placed[c] {
                continue;
            }
            let radius = (0.5 * tau * t.edges()[e].weight).tanh();
            let local = Complex64::from_polar(radius, start + step * slot as f64);
            let z = from_origin(p, local);
            let gap = 1.0 - z.norm_sqr();
            if !(gap > DISK_MARGIN) || !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::PrecisionLimit {
                    node: c,
                    radius: z.norm(),
                });
            }
            pos[c] = z;
            parent[c] = v;
            placed[c] = true;
            slot += 1;
            stack.push(c);
        }
    }
    Ok(DiskEmbedding {
        points: pos.into_iter().map(DiskPoint::from_complex).collect(),
        root,
        tau,
    })
}
