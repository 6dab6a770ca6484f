//! Chebyshev–Gauss–Lobatto grids on symmetric intervals `[-h, h]`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::C64;

/// Gauss–Lobatto grid with `n` points on `[-half_width, half_width]`,
/// ordered from `+half_width` (index 0) down to `-half_width` (index n-1).
#[derive(Clone, Debug)]
pub struct ChebGrid {
    n: usize,
    half_width: f64,
    /// Reference nodes in `[-1, 1]`.
    x: Vec<f64>,
    /// Physical nodes `half_width * x`.
    nodes: Vec<f64>,
    weights: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl ChebGrid {
    pub fn new(n: usize, half_width: f64) -> Self {
        assert!(n >= 2, "need at least two nodes");
        let m = (n - 1) as f64;
        let x: Vec<f64> = (0..n).map(|i| (PI * i as f64 / m).cos()).collect();
        // exact symmetry and endpoints
        let x: Vec<f64> = (0..n)
            .map(|i| {
                if 2 * i + 1 == n {
                    0.0
                } else if i < n / 2 {
                    x[i]
                } else {
                    -x[n - 1 - i]
                }
            })
            .collect();
        let c = |i: usize| -> f64 {
            let base = if i == 0 || i == n - 1 { 2.0 } else { 1.0 };
            if i % 2 == 0 {
                base
            } else {
                -base
            }
        };
        // differences via the sine identity to keep full accuracy near ±1
        let diff = |i: usize, j: usize| -> f64 {
            2.0 * (PI * (i + j) as f64 / (2.0 * m)).sin() * (PI * (j as f64 - i as f64) / (2.0 * m)).sin()
        };
        let mut dx = vec![0.0; n * n];
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                if i != j {
                    let v = c(i) / c(j) / diff(i, j);
                    dx[i * n + j] = v;
                    row_sum += v;
                }
            }
            dx[i * n + i] = -row_sum;
        }
        let mut d2x = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = dx[i * n + k];
                for j in 0..n {
                    d2x[i * n + j] += a * dx[k * n + j];
                }
            }
        }
        let s1 = 1.0 / half_width;
        let s2 = s1 * s1;
        let weights = (0..n)
            .map(|i| {
                let w = if i % 2 == 0 { 1.0 } else { -1.0 };
                if i == 0 || i == n - 1 {
                    0.5 * w
                } else {
                    w
                }
            })
            .collect();
        ChebGrid {
            n,
            half_width,
            nodes: x.iter().map(|v| v * half_width).collect(),
            x,
            weights,
            d1: dx.into_iter().map(|v| v * s1).collect(),
            d2: d2x.into_iter().map(|v| v * s2).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Physical nodes, descending.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// First-derivative matrix (row-major `n × n`) in the physical variable.
    pub fn d1(&self) -> &[f64] {
        &self.d1
    }

    pub fn d2(&self) -> &[f64] {
        &self.d2
    }

    /// Applies the first-derivative matrix to complex samples.
    pub fn differentiate(&self, f: &[C64]) -> Vec<C64> {
        apply(&self.d1, self.n, f)
    }

    pub fn differentiate2(&self, f: &[C64]) -> Vec<C64> {
        apply(&self.d2, self.n, f)
    }

    /// Row vector `r` with `r · f = p(omega)` for the interpolating polynomial
    /// `p` of samples `f`.
    pub fn interpolation_row(&self, omega: f64) -> Vec<f64> {
        let t = omega / self.half_width;
        let mut row = vec![0.0; self.n];
        if let Some(i) = self.coincident_node(t) {
            row[i] = 1.0;
            return row;
        }
        let mut denom = 0.0;
        for i in 0..self.n {
            let q = self.weights[i] / (t - self.x[i]);
            row[i] = q;
            denom += q;
        }
        for v in &mut row {
            *v /= denom;
        }
        row
    }

    /// Barycentric evaluation of the interpolant of `f` at `omega`.
    pub fn interpolate(&self, f: &[C64], omega: f64) -> C64 {
        let t = omega / self.half_width;
        if let Some(i) = self.coincident_node(t) {
            return f[i];
        }
        let mut num = C64::new(0.0, 0.0);
        let mut den = 0.0;
        for i in 0..self.n {
            let q = self.weights[i] / (t - self.x[i]);
            num += f[i] * q;
            den += q;
        }
        num / den
    }

    fn coincident_node(&self, t: f64) -> Option<usize> {
        self.x.iter().position(|&xi| (t - xi).abs() <= 4.0 * f64::EPSILON)
    }
}

fn apply(m: &[f64], n: usize, f: &[C64]) -> Vec<C64> {
    assert_eq!(f.len(), n);
    (0..n)
        .map(|i| m[i * n..(i + 1) * n].iter().zip(f).map(|(a, b)| b * *a).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_ordering() {
        let g = ChebGrid::new(16, 2.0);
        assert_eq!(g.nodes()[0], 2.0);
        assert_eq!(g.nodes()[15], -2.0);
        assert!(g.nodes().windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn differentiates_smooth_functions_spectrally() {
        let h = 1.3;
        let g = ChebGrid::new(32, h);
        let f: Vec<C64> = g.nodes().iter().map(|&w| C64::new(w.sin(), (2.0 * w).cos())).collect();
        let df = g.differentiate(&f);
        let d2f = g.differentiate2(&f);
        for (i, &w) in g.nodes().iter().enumerate() {
            let e1 = C64::new(w.cos(), -2.0 * (2.0 * w).sin());
            let e2 = C64::new(-w.sin(), -4.0 * (2.0 * w).cos());
            assert!((df[i] - e1).norm() < 1e-11, "d1 at {w}");
            assert!((d2f[i] - e2).norm() < 1e-8, "d2 at {w}");
        }
    }

    #[test]
    fn barycentric_interpolation() {
        let g = ChebGrid::new(24, 0.8);
        let f: Vec<C64> = g.nodes().iter().map(|&w| C64::new(w.exp(), w * w)).collect();
        for &t in &[0.0, 0.31, -0.77, 0.8, -0.8] {
            let v = g.interpolate(&f, t);
            assert!((v - C64::new(t.exp(), t * t)).norm() < 1e-13);
            let row = g.interpolation_row(t);
            let w: C64 = row.iter().zip(&f).map(|(r, z)| z * *r).sum();
            assert!((w - v).norm() < 1e-13);
        }
    }
}
