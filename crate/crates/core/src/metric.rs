//! Dense finite metrics, Gromov products and δ-hyperbolicity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for symmetry, diagonal and triangle-inequality checks.
pub const METRIC_TOL: f64 = 1e-9;

/// Dense symmetric `n × n` distance matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl DistanceMatrix {
    /// Builds a matrix from row-major entries.
    ///
    /// Entries must be finite and nonnegative. Asymmetry or nonzero diagonal
    /// entries up to [`METRIC_TOL`] are repaired (averaged across the
    /// diagonal, diagonal forced to zero); anything larger is rejected.
    pub fn new(n: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Shape {
                expected: n * n,
                found: data.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let v = data[i * n + j];
                if !v.is_finite() {
                    return Err(Error::NotFinite { i, j });
                }
                if v < 0.0 {
                    return Err(Error::Negative { i, j, value: v });
                }
            }
        }
        for i in 0..n {
            let v = data[i * n + i];
            if v > METRIC_TOL {
                return Err(Error::NonZeroDiagonal { i, value: v });
            }
            data[i * n + i] = 0.0;
            for j in (i + 1)..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if (a - b).abs() > METRIC_TOL {
                    return Err(Error::Asymmetric { i, j, a, b });
                }
                let m = 0.5 * (a + b);
                data[i * n + j] = m;
                data[j * n + i] = m;
            }
        }
        Ok(Self {
            n,
            data,
            labels: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::Shape {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(n, data)
    }

    /// Builds a matrix from a function evaluated on the upper triangle.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self::new(n, data)
    }

    pub fn empty() -> Self {
        Self {
            n: 0,
            data: Vec::new(),
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::Shape {
                expected: self.n,
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Name of point `i`: its label when present, otherwise the index.
    pub fn name(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Iterates `(i, j, d(i, j))` over unordered pairs `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j, self.get(i, j))))
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n {
            Err(Error::IndexOutOfRange {
                index: i,
                n: self.n,
            })
        } else {
            Ok(())
        }
    }

    /// Checks the triangle inequality within [`METRIC_TOL`].
    pub fn validate_metric(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                let dij = self.get(i, j);
                for k in 0..n {
                    let via = self.get(i, k) + self.get(k, j);
                    if dij > via + METRIC_TOL {
                        return Err(Error::Triangle { i, j, k, dij, via });
                    }
                }
            }
        }
        Ok(())
    }

    /// Restriction to the given points, in the given order.
    pub fn submatrix(&self, idx: &[usize]) -> Result<Self> {
        for &i in idx {
            self.check_index(i)?;
        }
        let m = idx.len();
        let mut data = vec![0.0; m * m];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                data[a * m + b] = self.get(i, j);
            }
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| idx.iter().map(|&i| l[i].clone()).collect());
        Ok(Self {
            n: m,
            data,
            labels,
        })
    }
}

/// `(x, y)_w` from the three pairwise distances. Rounding noise below zero is
/// clamped.
#[inline]
pub(crate) fn gromov(dwx: f64, dwy: f64, dxy: f64) -> f64 {
    let v = 0.5 * (dwx + dwy - dxy);
    if v < 0.0 && v > -METRIC_TOL {
        0.0
    } else {
        v
    }
}

/// Gromov product `(x, y)_w = ½(d(w,x) + d(w,y) − d(x,y))`.
pub fn gromov_product(d: &DistanceMatrix, x: usize, y: usize, w: usize) -> Result<f64> {
    d.check_index(x)?;
    d.check_index(y)?;
    d.check_index(w)?;
    Ok(gromov(d.get(w, x), d.get(w, y), d.get(x, y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeltaMode {
    /// Maximum over all quadruples.
    Exact,
    /// Maximum over quadruples containing the given base point.
    FixedBase(usize),
}

impl Default for DeltaMode {
    fn default() -> Self {
        DeltaMode::FixedBase(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    /// Fewer than four points; `delta` is 0 by convention.
    pub degenerate: bool,
}

/// Four-point excess of one quadruple: half the gap between the largest and
/// the middle of the three pair sums. Equals the largest violation of the
/// Gromov condition for any choice of base among the four.
#[inline]
fn quad_excess(d: &DistanceMatrix, w: usize, x: usize, y: usize, z: usize) -> f64 {
    let s1 = d.get(w, x) + d.get(y, z);
    let s2 = d.get(w, y) + d.get(x, z);
    let s3 = d.get(w, z) + d.get(x, y);
    let (hi, mid) = if s1 >= s2 {
        if s2 >= s3 {
            (s1, s2)
        } else if s1 >= s3 {
            (s1, s3)
        } else {
            (s3, s1)
        }
    } else if s1 >= s3 {
        (s2, s1)
    } else if s2 >= s3 {
        (s2, s3)
    } else {
        (s3, s2)
    };
    0.5 * (hi - mid)
}

/// Smallest δ for which every quadruple satisfies the Gromov four-point
/// condition, or the same quantity restricted to one base point.
///
/// `Exact` is O(n⁴) and is meant for a few hundred points at most; the work is
/// split across the rayon pool by first index.
pub fn delta_hyperbolicity(d: &DistanceMatrix, mode: DeltaMode) -> Result<DeltaEstimate> {
    let n = d.n();
    if n < 4 {
        return Ok(DeltaEstimate {
            delta: 0.0,
            degenerate: true,
        });
    }
    if let DeltaMode::FixedBase(w) = mode {
        d.check_index(w)?;
    }
    let delta = match mode {
        DeltaMode::Exact => (0..n)
            .into_par_iter()
            .map(|w| {
                let mut best = 0.0f64;
                for x in (w + 1)..n {
                    for y in (x + 1)..n {
                        for z in (y + 1)..n {
                            best = best.max(quad_excess(d, w, x, y, z));
                        }
                    }
                }
                best
            })
            .reduce(|| 0.0, f64::max),
        DeltaMode::FixedBase(w) => {
            let others: Vec<usize> = (0..n).filter(|&i| i != w).collect();
            others
                .par_iter()
                .enumerate()
                .map(|(a, &x)| {
                    let mut best = 0.0f64;
                    for (b, &y) in others.iter().enumerate().skip(a + 1) {
                        for &z in &others[b + 1..] {
                            best = best.max(quad_excess(d, w, x, y, z));
                        }
                    }
                    best
                })
                .reduce(|| 0.0, f64::max)
        }
    };
    Ok(DeltaEstimate {
        delta,
        degenerate: false,
    })
}

/// Divides every entry by the largest one.
pub fn normalize_max(d: &DistanceMatrix) -> Result<DistanceMatrix> {
    let m = d.max();
    if m <= 0.0 {
        return Err(Error::AllZero);
    }
    Ok(d.scaled(1.0 / m))
}
