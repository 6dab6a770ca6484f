//! Small dense complex linear algebra: row-major matrices, partial-pivot LU,
//! one-sided Jacobi SVD and SVD-based least squares.
//!
//! Sizes in this crate stay in the low hundreds, so everything is plain
//! `O(n³)` loops over a `Vec<C64>`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Index, IndexMut};

#[allow(unused_imports)]
use num_traits::Float;

use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    /// Builds a matrix from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        CMat {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C64>]) -> Self {
        let rows = cols.first().map_or(0, Vec::len);
        CMat::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> CMat {
        self.map(|z| z * s)
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        self.add(&other.scale(-ONE))
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `x^H y`.
pub fn dot_h(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(mut a: f64) -> f64 {
    while a > PI {
        a -= 2.0 * PI;
    }
    while a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    swaps: usize,
    singular: bool,
}

impl Lu {
    pub fn new(a: &CMat) -> Self {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        let mut singular = false;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].l1_norm();
            for i in k + 1..n {
                let v = lu[i * n + k].l1_norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let pivot_inv = lu[k * n + k].inv();
            for i in k + 1..n {
                let f = lu[i * n + k] * pivot_inv;
                lu[i * n + k] = f;
                if f == ZERO {
                    continue;
                }
                let (upper, lower) = lu.split_at_mut(i * n);
                let krow = &upper[k * n + k + 1..k * n + n];
                let irow = &mut lower[k + 1..n];
                for (d, &s) in irow.iter_mut().zip(krow) {
                    *d -= f * s;
                }
            }
        }
        Lu {
            n,
            lu,
            perm,
            swaps,
            singular,
        }
    }

    /// True when a pivot column was exactly zero.
    pub fn is_singular(&self) -> bool {
        self.singular || (0..self.n).any(|k| self.lu[k * self.n + k] == ZERO)
    }

    /// `(log|det|, arg det)`, or `None` for an exactly singular matrix.
    pub fn log_det(&self) -> Option<(f64, f64)> {
        if self.is_singular() {
            return None;
        }
        let mut log_mag = 0.0;
        let mut phase = if self.swaps % 2 == 1 { PI } else { 0.0 };
        for k in 0..self.n {
            let d = self.lu[k * self.n + k];
            log_mag += d.norm().ln();
            phase += d.arg();
        }
        Some((log_mag, wrap_angle(phase)))
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lu[i * n + k] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.lu[i * n + k] * x[k];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solves `A X = B` for a matrix right-hand side.
    pub fn solve_mat(&self, b: &CMat) -> CMat {
        let n = self.n;
        assert_eq!(b.rows, n);
        let m = b.cols;
        let mut x = CMat::zeros(n, m);
        for (i, &p) in self.perm.iter().enumerate() {
            x.row_mut(i).copy_from_slice(b.row(p));
        }
        for i in 0..n {
            for k in 0..i {
                let f = self.lu[i * n + k];
                if f == ZERO {
                    continue;
                }
                let (upper, lower) = x.data.split_at_mut(i * m);
                let src = &upper[k * m..(k + 1) * m];
                for (d, &s) in lower[..m].iter_mut().zip(src) {
                    *d -= f * s;
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let f = self.lu[i * n + k];
                if f == ZERO {
                    continue;
                }
                let (upper, lower) = x.data.split_at_mut(k * m);
                let dst = &mut upper[i * m..(i + 1) * m];
                for (d, &s) in dst.iter_mut().zip(&lower[..m]) {
                    *d -= f * s;
                }
            }
            let inv = self.lu[i * n + i].inv();
            for d in x.row_mut(i) {
                *d *= inv;
            }
        }
        x
    }

    /// `trace(A⁻¹ B)`.
    pub fn trace_solve(&self, b: &CMat) -> C64 {
        let x = self.solve_mat(b);
        (0..self.n).map(|i| x[(i, i)]).sum()
    }
}

/// Thin singular value decomposition `A = U diag(s) V^H`, singular values
/// sorted in decreasing order.
#[derive(Clone, Debug)]
pub struct Svd {
    /// Left singular vectors (columns); zero columns where `s` vanishes.
    pub u: CMat,
    pub s: Vec<f64>,
    /// Right singular vectors (columns), a full unitary basis when `rows >= cols`.
    pub v: CMat,
}

impl Svd {
    /// One-sided (Hestenes) Jacobi. For wide matrices the decomposition of
    /// the adjoint is computed and swapped.
    pub fn new(a: &CMat) -> Self {
        if a.rows < a.cols {
            let t = Svd::new(&a.adjoint());
            // A^H = U S V^H  =>  A = V S U^H; the left factor of A is only
            // available on the row space here.
            return Svd {
                u: t.v,
                s: t.s,
                v: t.u,
            };
        }
        let (m, n) = (a.rows, a.cols);
        let mut cols: Vec<Vec<C64>> = (0..n).map(|j| a.column(j)).collect();
        let mut v: Vec<Vec<C64>> = (0..n)
            .map(|j| {
                let mut e = vec![ZERO; n];
                e[j] = ONE;
                e
            })
            .collect();
        let tol = 1e-15;
        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                    let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                    if alpha == 0.0 || beta == 0.0 {
                        continue;
                    }
                    let gamma = dot_h(&cols[p], &cols[q]);
                    let g = gamma.norm();
                    if g <= tol * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let phase = gamma / g;
                    let zeta = (beta - alpha) / (2.0 * g);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    // column q is first rotated by conj(phase) so that the
                    // cross term becomes real, then a real Givens rotation
                    // is applied.
                    let pc = phase.conj();
                    for i in 0..m {
                        let ap = cols[p][i];
                        let aq = cols[q][i] * pc;
                        cols[p][i] = ap * c - aq * s;
                        cols[q][i] = ap * s + aq * c;
                    }
                    for i in 0..n {
                        let vp = v[p][i];
                        let vq = v[q][i] * pc;
                        v[p][i] = vp * c - vq * s;
                        v[q][i] = vp * s + vq * c;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut order: Vec<(usize, f64)> = cols.iter().map(|c| vec_norm(c)).enumerate().collect();
        order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal));
        let s: Vec<f64> = order.iter().map(|&(_, s)| s).collect();
        let u = CMat::from_fn(m, n, |i, k| {
            let (j, sj) = order[k];
            if sj > 0.0 {
                cols[j][i] / sj
            } else {
                ZERO
            }
        });
        let vm = CMat::from_fn(n, n, |i, k| v[order[k].0][i]);
        Svd { u, s, v: vm }
    }

    pub fn max_singular(&self) -> f64 {
        self.s.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values above `rel_tol · s_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let cut = rel_tol * self.max_singular();
        self.s.iter().filter(|&&s| s > cut).count()
    }
}

/// Orthonormal basis of the right null space of `a`: right singular vectors
/// whose singular value is at most `rel_tol · s_max` (all of them for a zero
/// matrix). Also returns the singular values.
pub fn null_space(a: &CMat, rel_tol: f64) -> (Vec<Vec<C64>>, Vec<f64>) {
    let n = a.cols;
    if a.rows < n {
        // pad with zero rows so that V is a full basis.
        let mut padded = CMat::zeros(n, n);
        for i in 0..a.rows {
            padded.row_mut(i).copy_from_slice(a.row(i));
        }
        return null_space(&padded, rel_tol);
    }
    let svd = Svd::new(a);
    let cut = rel_tol * svd.max_singular();
    let basis = (0..n)
        .filter(|&k| svd.s[k] <= cut)
        .map(|k| svd.v.column(k))
        .collect();
    (basis, svd.s)
}

/// Minimum-norm least-squares solution of `A x = b`.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub x: Vec<C64>,
    /// `‖A x − b‖₂`.
    pub residual: f64,
    pub rank: usize,
}

pub fn lstsq(a: &CMat, b: &[C64], rel_tol: f64) -> LeastSquares {
    assert_eq!(a.rows, b.len());
    let n = a.cols;
    let mut padded = CMat::zeros(a.rows.max(n), n);
    for i in 0..a.rows {
        padded.row_mut(i).copy_from_slice(a.row(i));
    }
    let mut rhs = b.to_vec();
    rhs.resize(padded.rows, ZERO);
    let svd = Svd::new(&padded);
    let cut = rel_tol * svd.max_singular();
    let mut x = vec![ZERO; n];
    let mut rank = 0;
    for k in 0..n {
        let sk = svd.s[k];
        if sk <= cut || sk == 0.0 {
            continue;
        }
        rank += 1;
        let uk = svd.u.column(k);
        let coef = dot_h(&uk, &rhs) / sk;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += svd.v[(i, k)] * coef;
        }
    }
    let ax = a.mul_vec(&x);
    let residual = vec_norm(&ax.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>());
    LeastSquares { x, residual, rank }
}
