//! Small linear-algebra layer: banded field operators and Hermitian helpers.
//!
//! Every Jaynes-Cummings block is diagonal or has a single off-diagonal
//! stripe, and every Kraus operator built from them is tridiagonal, so
//! operators are stored by diagonals. Densities stay dense.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Square banded matrix. Entry `(i, i + k)` lives in `diags[k + bw][i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Banded {
    dim: usize,
    bw: usize,
    diags: Vec<Vec<C64>>,
}

impl Banded {
    pub fn zeros(dim: usize, bw: usize) -> Self {
        Self {
            dim,
            bw,
            diags: vec![vec![ZERO; dim]; 2 * bw + 1],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(vec![ONE; dim])
    }

    pub fn diagonal(values: Vec<C64>) -> Self {
        let dim = values.len();
        Self {
            dim,
            bw: 0,
            diags: vec![values],
        }
    }

    /// Operator with `values[m]` on `|m+1><m|` (one step down the diagonal).
    pub fn raising(values: &[C64], dim: usize) -> Self {
        let mut b = Self::zeros(dim, 1);
        for (m, &v) in values.iter().enumerate().take(dim.saturating_sub(1)) {
            b.set(m + 1, m, v);
        }
        b
    }

    /// Operator with `values[m]` on `|m><m+1|`.
    pub fn lowering(values: &[C64], dim: usize) -> Self {
        let mut b = Self::zeros(dim, 1);
        for (m, &v) in values.iter().enumerate().take(dim.saturating_sub(1)) {
            b.set(m, m + 1, v);
        }
        b
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn offset_index(&self, row: usize, col: usize) -> Option<usize> {
        let k = col as isize - row as isize;
        if k.unsigned_abs() > self.bw {
            None
        } else {
            Some((k + self.bw as isize) as usize)
        }
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        match self.offset_index(row, col) {
            Some(d) => self.diags[d][row],
            None => ZERO,
        }
    }

    pub fn set(&mut self, row: usize, col: usize, v: C64) {
        let d = self
            .offset_index(row, col)
            .expect("entry outside the stored band");
        self.diags[d][row] = v;
    }

    /// Nonzero-able entries `(row, col, value)` inside the band.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        let bw = self.bw as isize;
        let dim = self.dim as isize;
        self.diags.iter().enumerate().flat_map(move |(d, diag)| {
            let k = d as isize - bw;
            let rows = (0.max(-k))..(dim.min(dim - k));
            rows.map(move |i| (i as usize, (i + k) as usize, diag[i as usize]))
        })
    }

    fn widened(&self, bw: usize) -> Self {
        if bw <= self.bw {
            return self.clone();
        }
        let mut out = Self::zeros(self.dim, bw);
        for (i, j, v) in self.entries() {
            out.set(i, j, v);
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for d in out.diags.iter_mut() {
            for v in d.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let bw = self.bw.max(other.bw);
        let mut out = self.widened(bw);
        for (i, j, v) in other.entries() {
            let cur = out.get(i, j);
            out.set(i, j, cur + v);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim, self.bw);
        for (i, j, v) in self.entries() {
            out.set(j, i, v.conj());
        }
        out
    }

    /// Exact banded product `self * other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = Self::zeros(self.dim, self.bw + other.bw);
        for (i, m, a) in self.entries() {
            if a == ZERO {
                continue;
            }
            let lo = m.saturating_sub(other.bw);
            let hi = (m + other.bw).min(self.dim - 1);
            for j in lo..=hi {
                let b = other.get(m, j);
                if b != ZERO {
                    let cur = out.get(i, j);
                    out.set(i, j, cur + a * b);
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim, "dimension mismatch");
        let mut y = vec![ZERO; self.dim];
        for (i, j, v) in self.entries() {
            y[i] += v * x[j];
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }

    /// `self * rho` for a dense `rho`.
    pub fn left_mul(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(rho.nrows(), self.dim);
        let cols = rho.ncols();
        let mut out = DMatrix::zeros(self.dim, cols);
        for c in 0..cols {
            for (i, m, v) in self.entries() {
                if v != ZERO {
                    out[(i, c)] += v * rho[(m, c)];
                }
            }
        }
        out
    }

    /// `rho * self^dagger` for a dense `rho`.
    pub fn right_mul_adjoint(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(rho.ncols(), self.dim);
        let rows = rho.nrows();
        let mut out = DMatrix::zeros(rows, self.dim);
        // (rho A^dag)(r, j) = sum_m rho(r, m) conj(A(j, m))
        for (j, m, v) in self.entries() {
            if v == ZERO {
                continue;
            }
            let vc = v.conj();
            for r in 0..rows {
                out[(r, j)] += rho[(r, m)] * vc;
            }
        }
        out
    }

    /// `self * rho * self^dagger`.
    pub fn sandwich(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        self.right_mul_adjoint(&self.left_mul(rho))
    }

    /// `Tr(self * rho * other^dagger)` without forming the product.
    pub fn sandwich_trace(&self, rho: &DMatrix<C64>, other: &Self) -> C64 {
        let left = self.left_mul(rho);
        other
            .entries()
            .filter(|&(_, _, v)| v != ZERO)
            .map(|(n, m, v)| left[(n, m)] * v.conj())
            .sum()
    }

    /// Largest entry modulus on each stored diagonal, keyed by offset.
    pub fn diagonal_maxima(&self) -> Vec<(isize, f64)> {
        let bw = self.bw as isize;
        self.diags
            .iter()
            .enumerate()
            .map(|(d, diag)| {
                let m = diag.iter().map(|v| v.norm()).fold(0.0, f64::max);
                (d as isize - bw, m)
            })
            .collect()
    }
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn outer(a: &[C64]) -> DMatrix<C64> {
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| a[i] * a[j].conj())
}

pub fn adjoint(m: &DMatrix<C64>) -> DMatrix<C64> {
    m.adjoint()
}

pub fn trace(m: &DMatrix<C64>) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is read.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Trace distance `0.5 * ||a - b||_1` between Hermitian matrices.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let diff = a - b;
    0.5 * hermitian_eigenvalues(&diff).iter().map(|v| v.abs()).sum::<f64>()
}

/// Decides `trace_distance(a, b) < tol` using the Frobenius bounds
/// `||X||_F <= ||X||_1 <= sqrt(rank) ||X||_F` before falling back to an
/// eigen-decomposition. Returns the exact distance when it had to compute it.
pub fn trace_distance_below(a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) -> (bool, Option<f64>) {
    let diff = a - b;
    let frob = diff.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if 0.5 * frob >= tol {
        return (false, None);
    }
    if 0.5 * (diff.nrows() as f64).sqrt() * frob < tol {
        return (true, None);
    }
    let d = 0.5 * hermitian_eigenvalues(&diff).iter().map(|v| v.abs()).sum::<f64>();
    (d < tol, Some(d))
}
