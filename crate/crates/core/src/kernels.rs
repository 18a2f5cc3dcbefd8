//! Radial kernels and the Gram matrix of the kernel dictionary.
//!
//! The dictionary is the set of kernel sections `K(x_i, .)` anchored at the
//! training inputs. A function in its span is `f = sum_j a[j] K(x_j, .)`,
//! and all empirical quantities only ever need the values of the atoms at the
//! sample points, i.e. the Gram matrix.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Radial profile `phi`, so that `K(x, x') = phi(|x - x'|_2)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum RadialKernel {
    /// `(1 - r)^4 (4 r^2 + 1)` on `[0, 1]`, zero beyond. Positive definite on R^3.
    #[default]
    Wendland31,
    /// `exp(-r^2 / (2 h^2))`.
    Gaussian { bandwidth: f64 },
}

impl RadialKernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RadialKernel::Wendland31 => Ok(()),
            RadialKernel::Gaussian { bandwidth } if bandwidth.is_finite() && bandwidth > 0.0 => Ok(()),
            RadialKernel::Gaussian { bandwidth } => Err(Error::InvalidInput(format!(
                "gaussian bandwidth must be positive and finite, got {bandwidth}"
            ))),
        }
    }

    /// `kappa = sqrt(phi(0))`. Both profiles are normalised so that this is 1.
    pub fn kappa(&self) -> f64 {
        self.profile(0.0).sqrt()
    }

    /// Evaluates the profile without validating `r`.
    #[inline]
    pub(crate) fn profile(&self, r: f64) -> f64 {
        match *self {
            RadialKernel::Wendland31 => {
                if r >= 1.0 {
                    0.0
                } else {
                    let s = 1.0 - r;
                    let s2 = s * s;
                    s2 * s2 * (4.0 * r * r + 1.0)
                }
            }
            RadialKernel::Gaussian { bandwidth } => (-(r * r) / (2.0 * bandwidth * bandwidth)).exp(),
        }
    }

    /// Kernel value between two points of equal dimension.
    #[inline]
    pub fn between(&self, a: &[f64], b: &[f64]) -> f64 {
        self.profile(distance(a, b))
    }
}

/// `phi(r)` for `r >= 0`.
pub fn eval_radial(kernel: &RadialKernel, r: f64) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::InvalidInput(format!(
            "radial argument must be a nonnegative number, got {r}"
        )));
    }
    Ok(kernel.profile(r))
}

#[inline]
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// A dense row-major set of `n` points in `R^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("point dimension must be >= 1".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(format!(
                "{} coordinates do not split into rows of dimension {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.len())
            .ok_or_else(|| Error::InvalidInput("no points".into()))?;
        let mut data = Vec::with_capacity(dim * rows.len());
        for row in rows {
            check_len(dim, row.len(), "point dimension")?;
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub(crate) fn ensure_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(p) => Err(Error::InvalidInput(format!(
                "point {} has a non-finite coordinate",
                p / self.dim
            ))),
        }
    }
}

/// The `m x m` matrix `G[i][j] = K(x_i, x_j)` together with the squared
/// empirical norms `|K(x_j, .)|_m^2 = (1/m) sum_i G[i][j]^2` of every atom.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    m: usize,
    entries: Vec<f64>,
    atom_norms_sq: Vec<f64>,
}

impl GramMatrix {
    /// Builds from a full row-major matrix. The lower triangle is overwritten
    /// by the mirror of the upper one.
    pub fn from_row_major(m: usize, mut entries: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("gram matrix needs m >= 1".into()));
        }
        check_len(m * m, entries.len(), "gram entries")?;
        if let Some(p) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "gram entry ({}, {}) is not finite",
                p / m,
                p % m
            )));
        }
        mirror_upper(m, &mut entries);
        Ok(Self::assemble(m, entries))
    }

    fn assemble(m: usize, entries: Vec<f64>) -> Self {
        let inv_m = 1.0 / m as f64;
        let atom_norms_sq = entries
            .chunks_exact(m)
            .map(|col| col.iter().map(|v| v * v).sum::<f64>() * inv_m)
            .collect();
        Self {
            m,
            entries,
            atom_norms_sq,
        }
    }

    pub fn identity(m: usize) -> Self {
        let mut entries = vec![0.0; m * m];
        for i in 0..m {
            entries[i * m + i] = 1.0;
        }
        Self::assemble(m, entries)
    }

    pub fn size(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    /// Column `j`, i.e. atom `j` evaluated at every sample point. Contiguous
    /// because the matrix is symmetric.
    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.entries[j * self.m..(j + 1) * self.m]
    }

    pub fn atom_norms_sq(&self) -> &[f64] {
        &self.atom_norms_sq
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.m).map(|i| self.get(i, i)).sum()
    }

    /// `out = G v`.
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.m);
        debug_assert_eq!(out.len(), self.m);
        for (o, row) in out.iter_mut().zip(self.entries.chunks_exact(self.m)) {
            *o = dot(row, v);
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.mul_vec_into(v, &mut out);
        out
    }
}

fn mirror_upper(m: usize, entries: &mut [f64]) {
    for i in 0..m {
        for j in 0..i {
            entries[i * m + j] = entries[j * m + i];
        }
    }
}

/// Dot product with a fixed four-way accumulation order, so results do not
/// depend on who calls it.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Gram matrix of `kernel` over `points`. Rows of the upper triangle are
/// filled in parallel and then mirrored, so the result does not depend on the
/// thread count.
pub fn gram(points: &Points, kernel: &RadialKernel) -> Result<GramMatrix> {
    let m = points.len();
    if m == 0 {
        return Err(Error::InvalidInput("gram matrix needs at least one point".into()));
    }
    kernel.validate()?;
    points.ensure_finite()?;
    let mut entries = vec![0.0; m * m];
    entries.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
        let xi = points.row(i);
        for (j, slot) in row.iter_mut().enumerate().skip(i) {
            *slot = kernel.between(xi, points.row(j));
        }
    });
    mirror_upper(m, &mut entries);
    Ok(GramMatrix::assemble(m, entries))
}

/// Atoms anchored at `anchors` evaluated at `queries`, stored atom-major:
/// row `j` holds `K(anchor_j, query_t)` for every query `t`.
#[derive(Debug, Clone)]
pub struct AtomEvaluations {
    n_atoms: usize,
    n_queries: usize,
    entries: Vec<f64>,
}

impl AtomEvaluations {
    pub fn new(anchors: &Points, queries: &Points, kernel: &RadialKernel) -> Result<Self> {
        check_len(anchors.dim(), queries.dim(), "query dimension")?;
        kernel.validate()?;
        anchors.ensure_finite()?;
        queries.ensure_finite()?;
        let n = queries.len();
        let mut entries = vec![0.0; anchors.len() * n];
        if n > 0 {
            entries.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
                let aj = anchors.row(j);
                for (t, slot) in row.iter_mut().enumerate() {
                    *slot = kernel.between(aj, queries.row(t));
                }
            });
        }
        Ok(Self {
            n_atoms: anchors.len(),
            n_queries: n,
            entries,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn n_queries(&self) -> usize {
        self.n_queries
    }

    #[inline]
    pub fn atom(&self, j: usize) -> &[f64] {
        &self.entries[j * self.n_queries..(j + 1) * self.n_queries]
    }

    /// `out[t] = sum_j coefficients[j] K(anchor_j, query_t)`.
    pub fn combine(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n_atoms, coefficients.len(), "coefficient count")?;
        let mut out = vec![0.0; self.n_queries];
        for (j, &a) in coefficients.iter().enumerate() {
            if a != 0.0 {
                for (o, v) in out.iter_mut().zip(self.atom(j)) {
                    *o += a * v;
                }
            }
        }
        Ok(out)
    }
}
