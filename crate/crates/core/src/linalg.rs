//! Dense matrix kernels: normalization, similarity and truncated SVD.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Largest `min(rows, cols)` handled by the exact dense SVD. Bigger inputs go
/// through the randomized range finder.
pub const EXACT_SVD_LIMIT: usize = 2000;

/// Power iterations used by the randomized SVD path.
pub const RANDOMIZED_POWER_ITERATIONS: usize = 6;

const RANDOMIZED_OVERSAMPLE: usize = 10;
const RANDOMIZED_SEED: u64 = 0x5eed_0005;

/// Row-major dense matrix of finite `f64` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Shape(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact panics on zero-width rows
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * x` for a vector `x` of length `cols`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        self.iter_rows().map(|row| dot(row, x)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::Shape(format!(
                "cannot subtract {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseMatrix::from_vec_unchecked(self.rows, self.cols, data))
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        DenseMatrix::from_vec_unchecked(rows.len(), self.cols, data)
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> DenseMatrix {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(m[(r, c)]);
            }
        }
        DenseMatrix::from_vec_unchecked(rows, cols, data)
    }
}

#[inline]
pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Scales `v` to unit L2 norm in place. Zero vectors are left untouched.
pub fn l2_normalize(v: &mut [f64]) {
    let norm = l2_norm(v);
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Inner product of two equal-length vectors.
pub fn dot_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(dot(u, v))
}

/// Cosine similarity; zero if either vector is zero.
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let nu = l2_norm(u);
    let nv = l2_norm(v);
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        dot(u, v) / (nu * nv)
    }
}

/// Scales every nonzero row to unit L2 norm.
pub fn normalize_rows(m: &DenseMatrix) -> DenseMatrix {
    let mut out = m.clone();
    normalize_rows_in_place(&mut out);
    out
}

pub fn normalize_rows_in_place(m: &mut DenseMatrix) {
    for r in 0..m.rows {
        l2_normalize(m.row_mut(r));
    }
}

/// Scales every nonzero column to unit L2 norm.
pub fn normalize_columns(m: &DenseMatrix) -> DenseMatrix {
    let mut out = m.clone();
    normalize_columns_in_place(&mut out);
    out
}

pub fn normalize_columns_in_place(m: &mut DenseMatrix) {
    let mut norms = vec![0.0; m.cols];
    for row in m.iter_rows() {
        for (n, v) in norms.iter_mut().zip(row) {
            *n += v * v;
        }
    }
    norms.iter_mut().for_each(|n| *n = n.sqrt());
    for r in 0..m.rows {
        for (v, &n) in m.row_mut(r).iter_mut().zip(&norms) {
            if n > 0.0 {
                *v /= n;
            }
        }
    }
}

/// Leading `d` singular triplets of a matrix.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// `rows x d`, orthonormal columns.
    pub u_d: DenseMatrix,
    /// Non-increasing, non-negative.
    pub singular_values: Vec<f64>,
    /// `cols x d` right singular vectors.
    pub v_d: DenseMatrix,
    pub d: usize,
}

impl SvdResult {
    /// `u_d * diag(s) * v_dᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u_d.clone();
        for r in 0..us.rows() {
            for (v, s) in us.row_mut(r).iter_mut().zip(&self.singular_values) {
                *v *= s;
            }
        }
        us.matmul(&self.v_d.transpose())
            .expect("svd factors have matching shapes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SvdMethod {
    /// Exact below [`EXACT_SVD_LIMIT`], randomized above.
    Auto,
    Exact,
    Randomized {
        power_iterations: usize,
        seed: u64,
    },
}

/// Rank-`d` truncated SVD. Column signs are fixed so that the
/// largest-magnitude entry of every left singular vector is positive.
pub fn truncated_svd(c: &DenseMatrix, d: usize) -> Result<SvdResult> {
    truncated_svd_with(c, d, SvdMethod::Auto)
}

pub fn truncated_svd_with(c: &DenseMatrix, d: usize, method: SvdMethod) -> Result<SvdResult> {
    let min_dim = c.rows.min(c.cols);
    if d == 0 || d > min_dim {
        return Err(Error::RankTooLarge {
            d,
            rows: c.rows,
            cols: c.cols,
        });
    }
    let method = match method {
        SvdMethod::Auto if min_dim <= EXACT_SVD_LIMIT => SvdMethod::Exact,
        SvdMethod::Auto => SvdMethod::Randomized {
            power_iterations: RANDOMIZED_POWER_ITERATIONS,
            seed: RANDOMIZED_SEED,
        },
        m => m,
    };
    let (u, s, v) = match method {
        SvdMethod::Exact | SvdMethod::Auto => exact_svd(&c.to_nalgebra()),
        SvdMethod::Randomized {
            power_iterations,
            seed,
        } => randomized_svd(c, d, power_iterations, seed),
    };
    Ok(finish_svd(u, s, v, d))
}

/// Thin SVD with singular values sorted non-increasing.
fn exact_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v = svd.v_t.expect("v_t requested").transpose();
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]).then(i.cmp(&j)));
    let u = DMatrix::from_fn(u.nrows(), order.len(), |r, k| u[(r, order[k])]);
    let v = DMatrix::from_fn(v.nrows(), order.len(), |r, k| v[(r, order[k])]);
    let s = order.iter().map(|&k| s[k]).collect();
    (u, s, v)
}

fn orthonormal_basis(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

/// Randomized range finder with subspace iteration followed by an exact SVD
/// of the projected matrix.
fn randomized_svd(
    c: &DenseMatrix,
    d: usize,
    power_iterations: usize,
    seed: u64,
) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let a = c.to_nalgebra();
    let l = (d + RANDOMIZED_OVERSAMPLE).min(c.rows.min(c.cols));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(c.cols, l, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormal_basis(&a * omega);
    for _ in 0..power_iterations {
        let z = orthonormal_basis(a.transpose() * &q);
        q = orthonormal_basis(&a * z);
    }
    let b = q.transpose() * &a;
    let (ub, s, v) = exact_svd(&b);
    (q * ub, s, v)
}

fn finish_svd(u: DMatrix<f64>, s: Vec<f64>, v: DMatrix<f64>, d: usize) -> SvdResult {
    let mut u_d = DenseMatrix::zeros(u.nrows(), d);
    let mut v_d = DenseMatrix::zeros(v.nrows(), d);
    for k in 0..d {
        let mut pivot = 0.0f64;
        for r in 0..u.nrows() {
            if u[(r, k)].abs() > pivot.abs() {
                pivot = u[(r, k)];
            }
        }
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for r in 0..u.nrows() {
            u_d.set(r, k, sign * u[(r, k)]);
        }
        for r in 0..v.nrows() {
            v_d.set(r, k, sign * v[(r, k)]);
        }
    }
    SvdResult {
        u_d,
        singular_values: s.into_iter().take(d).map(|x| x.max(0.0)).collect(),
        v_d,
        d,
    }
}
