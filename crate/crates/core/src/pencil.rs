//! Mellin symbols of the frozen principal parts and the collocation
//! discretization `M_n(λ)` of the pencil.
//!
//! Substituting `u = r^{μ} φ(ω)`, `μ = iλ`, into `a11 ∂₁² + 2a12 ∂₁∂₂ + a22 ∂₂²`
//! and multiplying by `r^{2-μ}` gives
//!
//! ```text
//! P̃(ω, ∂_ω, μ) φ = p₂(ω) φ'' + (μ - 1) q₁(ω) φ' + (μ² p₀(ω) + μ p₁(ω)) φ
//! p₂ = a11 sin²ω − 2 a12 sinω cosω + a22 cos²ω
//! q₁ = (a22 − a11) sin 2ω + 2 a12 cos 2ω
//! p₀ = a11 cos²ω + 2 a12 sinω cosω + a22 sin²ω
//! p₁ = (a22 − a11) cos 2ω − 2 a12 sin 2ω
//! ```
//!
//! Each angle is discretized on `n` Gauss–Lobatto points. Rows of the two
//! endpoints are replaced by the nonlocal trace rows
//! `Σ_{k,s} χ^{iλ} b(0) φ_k(θ)`, with `χ^{iλ} = e^{iλ ln χ}` and `φ_k(θ)`
//! evaluated by barycentric interpolation on the grid of angle `k`.

use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::chebyshev::ChebGrid;
use crate::linalg::{CMat, Lu};
use crate::orbit::{PrincipalPart, SideId, ValidatedConfig};
use crate::{C64, I};

#[derive(Clone, Debug, PartialEq)]
pub enum PencilError {
    BadGridSize(usize),
    NonElliptic,
    /// `det M_n(λ)` vanished exactly.
    ExactSingular,
}

impl fmt::Display for PencilError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PencilError::BadGridSize(n) => write!(f, "grid size {n} must be even and at least 8"),
            PencilError::NonElliptic => write!(f, "principal part is not elliptic"),
            PencilError::ExactSingular => write!(f, "determinant is numerically zero"),
        }
    }
}

impl core::error::Error for PencilError {}

/// Mellin symbol `P̃(ω, ∂_ω, μ)` of one frozen principal part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MellinSymbol {
    part: PrincipalPart,
}

impl MellinSymbol {
    pub fn principal_part(&self) -> PrincipalPart {
        self.part
    }

    /// Coefficient of `φ''`.
    pub fn p2(&self, w: f64) -> C64 {
        let (s, c) = w.sin_cos();
        self.part.a11 * (s * s) - self.part.a12 * (2.0 * s * c) + self.part.a22 * (c * c)
    }

    /// `φ'` carries `(μ − 1) q₁`.
    pub fn q1(&self, w: f64) -> C64 {
        let (s2, c2) = (2.0 * w).sin_cos();
        (self.part.a22 - self.part.a11) * s2 + self.part.a12 * (2.0 * c2)
    }

    /// `φ` carries `μ² p₀ + μ p₁`.
    pub fn p0(&self, w: f64) -> C64 {
        let (s, c) = w.sin_cos();
        self.part.a11 * (c * c) + self.part.a12 * (2.0 * s * c) + self.part.a22 * (s * s)
    }

    pub fn p1(&self, w: f64) -> C64 {
        let (s2, c2) = (2.0 * w).sin_cos();
        (self.part.a22 - self.part.a11) * c2 - self.part.a12 * (2.0 * s2)
    }

    /// `c_{αβ}(ω)`: coefficient of `μ^β ∂_ω^α`, zero unless `α + β ≤ 2`.
    pub fn coefficient(&self, alpha: usize, beta: usize, w: f64) -> C64 {
        match (alpha, beta) {
            (2, 0) => self.p2(w),
            (1, 1) => self.q1(w),
            (1, 0) => -self.q1(w),
            (0, 2) => self.p0(w),
            (0, 1) => self.p1(w),
            _ => C64::new(0.0, 0.0),
        }
    }

    /// `P̃(ω, ∂_ω, μ)` applied to a function with the given jet at `ω`.
    pub fn apply(&self, w: f64, mu: C64, phi: C64, dphi: C64, d2phi: C64) -> C64 {
        self.p2(w) * d2phi + (mu - 1.0) * self.q1(w) * dphi + (mu * mu * self.p0(w) + mu * self.p1(w)) * phi
    }
}

pub fn mellin_symbol(a: PrincipalPart) -> Result<MellinSymbol, PencilError> {
    if !a.is_elliptic() {
        return Err(PencilError::NonElliptic);
    }
    Ok(MellinSymbol { part: a })
}

/// One addend of a boundary row.
#[derive(Clone, Debug)]
pub struct BoundaryEntry {
    pub target: usize,
    /// Interpolation node `θ = (-1)^σ ω_j + ω_{jσks}` in angle `target`.
    pub theta: f64,
    /// `b_{jσks}(0)`.
    pub weight: C64,
    pub log_homothety: f64,
    interp: Vec<f64>,
}

impl BoundaryEntry {
    /// `e^{iλ ln χ} b(0)`.
    pub fn factor(&self, lambda: C64) -> C64 {
        (I * lambda * self.log_homothety).exp() * self.weight
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryRow {
    pub side: SideId,
    pub entries: Vec<BoundaryEntry>,
}

#[derive(Clone, Debug)]
struct AngleBlock {
    grid: ChebGrid,
    symbol: MellinSymbol,
    p2: Vec<C64>,
    q1: Vec<C64>,
    p0: Vec<C64>,
    p1: Vec<C64>,
}

/// Collocation discretization of the pencil for one configuration and one
/// grid size. Assembly at a new `λ` only rescales precomputed pieces.
#[derive(Clone, Debug)]
pub struct DiscretizedPencil {
    n: usize,
    blocks: Vec<AngleBlock>,
    boundary: Vec<BoundaryRow>,
}

impl DiscretizedPencil {
    pub fn new(config: &ValidatedConfig, n: usize) -> Result<Self, PencilError> {
        if n < 8 || n % 2 != 0 {
            return Err(PencilError::BadGridSize(n));
        }
        let blocks: Vec<AngleBlock> = config
            .angles
            .iter()
            .zip(&config.principal_parts)
            .map(|(&w, &a)| {
                let grid = ChebGrid::new(n, w);
                let symbol = mellin_symbol(a)?;
                let nodes = grid.nodes();
                Ok(AngleBlock {
                    p2: nodes.iter().map(|&x| symbol.p2(x)).collect(),
                    q1: nodes.iter().map(|&x| symbol.q1(x)).collect(),
                    p0: nodes.iter().map(|&x| symbol.p0(x)).collect(),
                    p1: nodes.iter().map(|&x| symbol.p1(x)).collect(),
                    grid,
                    symbol,
                })
            })
            .collect::<Result<_, PencilError>>()?;
        let boundary = SideId::all(config.n_angles())
            .map(|side| BoundaryRow {
                side,
                entries: config
                    .side_terms(side)
                    .iter()
                    .map(|t| {
                        let theta = config.image_angle(side, t);
                        BoundaryEntry {
                            target: t.target,
                            theta,
                            weight: t.coeff0,
                            log_homothety: t.log_homothety(),
                            interp: blocks[t.target].grid.interpolation_row(theta),
                        }
                    })
                    .collect(),
            })
            .collect();
        Ok(DiscretizedPencil { n, blocks, boundary })
    }

    /// Points per angle.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_angles(&self) -> usize {
        self.blocks.len()
    }

    /// Matrix dimension `n N`.
    pub fn dim(&self) -> usize {
        self.n * self.blocks.len()
    }

    pub fn grid(&self, angle: usize) -> &ChebGrid {
        &self.blocks[angle].grid
    }

    pub fn symbol(&self, angle: usize) -> &MellinSymbol {
        &self.blocks[angle].symbol
    }

    pub fn boundary_rows(&self) -> &[BoundaryRow] {
        &self.boundary
    }

    /// Matrix row occupied by the trace row of `side`: the first node of an
    /// angle is `+ω_j` (σ = 2), the last is `-ω_j` (σ = 1).
    pub fn boundary_row_index(&self, side: SideId) -> usize {
        let base = side.angle * self.n;
        match side.sigma {
            crate::Sigma::Two => base,
            crate::Sigma::One => base + self.n - 1,
        }
    }

    /// Splits a stacked vector into per-angle sample arrays.
    pub fn split<'a>(&self, v: &'a [C64]) -> Vec<&'a [C64]> {
        v.chunks(self.n).collect()
    }

    fn fill(&self, lambda: C64, derivative: bool) -> CMat {
        let n = self.n;
        let mut m = CMat::zeros(self.dim(), self.dim());
        let mu = I * lambda;
        for (j, b) in self.blocks.iter().enumerate() {
            let d1 = b.grid.d1();
            let d2 = b.grid.d2();
            for i in 1..n - 1 {
                let row = m.row_mut(j * n + i);
                let seg = &mut row[j * n..(j + 1) * n];
                if derivative {
                    let c1 = I * b.q1[i];
                    for (c, dst) in seg.iter_mut().enumerate() {
                        *dst = c1 * d1[i * n + c];
                    }
                    seg[i] += I * (2.0 * mu * b.p0[i] + b.p1[i]);
                } else {
                    let c2 = b.p2[i];
                    let c1 = (mu - 1.0) * b.q1[i];
                    for (c, dst) in seg.iter_mut().enumerate() {
                        *dst = c2 * d2[i * n + c] + c1 * d1[i * n + c];
                    }
                    seg[i] += mu * mu * b.p0[i] + mu * b.p1[i];
                }
            }
        }
        for row in &self.boundary {
            let r = self.boundary_row_index(row.side);
            let dst = m.row_mut(r);
            for e in &row.entries {
                let mut f = e.factor(lambda);
                if derivative {
                    f *= I * e.log_homothety;
                }
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for (c, &w) in e.interp.iter().enumerate() {
                    if w != 0.0 {
                        dst[e.target * n + c] += f * w;
                    }
                }
            }
        }
        m
    }

    /// `M_n(λ)`.
    pub fn assemble(&self, lambda: C64) -> CMat {
        self.fill(lambda, false)
    }

    /// `dM_n/dλ`.
    pub fn derivative(&self, lambda: C64) -> CMat {
        self.fill(lambda, true)
    }

    /// `(log|det M_n(λ)|, arg det M_n(λ))`.
    pub fn det_log(&self, lambda: C64) -> Result<(f64, f64), PencilError> {
        match Lu::new(&self.assemble(lambda)).log_det() {
            Some((m, p)) if m.is_finite() => Ok((m, p)),
            _ => Err(PencilError::ExactSingular),
        }
    }

    /// `log|det M| − Σ log‖row_i‖`: the logarithm of the determinant
    /// relative to its Hadamard bound, always `≤ 0`.
    pub fn relative_log_det(&self, lambda: C64) -> Result<f64, PencilError> {
        let m = self.assemble(lambda);
        let scale: f64 = (0..m.rows())
            .map(|i| crate::linalg::vec_norm(m.row(i)).ln())
            .sum();
        match Lu::new(&m).log_det() {
            Some((lm, _)) if lm.is_finite() => Ok(lm - scale),
            _ => Err(PencilError::ExactSingular),
        }
    }

    /// Log-derivative `d/dλ log det M_n(λ) = trace(M⁻¹ M′)` together with
    /// `log|det|` and the phase.
    pub fn log_derivative(&self, lambda: C64) -> Result<LogDetJet, PencilError> {
        let m = self.assemble(lambda);
        let lu = Lu::new(&m);
        let (log_abs, phase) = match lu.log_det() {
            Some((lm, p)) if lm.is_finite() => (lm, p),
            _ => return Err(PencilError::ExactSingular),
        };
        let dlog = lu.trace_solve(&self.derivative(lambda));
        Ok(LogDetJet {
            log_abs,
            phase,
            dlog,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LogDetJet {
    pub log_abs: f64,
    pub phase: f64,
    pub dlog: C64,
}

pub fn assemble(config: &ValidatedConfig, lambda: C64, n: usize) -> Result<CMat, PencilError> {
    Ok(DiscretizedPencil::new(config, n)?.assemble(lambda))
}

pub fn pencil_derivative(config: &ValidatedConfig, lambda: C64, n: usize) -> Result<CMat, PencilError> {
    Ok(DiscretizedPencil::new(config, n)?.derivative(lambda))
}

pub fn det_log(config: &ValidatedConfig, lambda: C64, n: usize) -> Result<(f64, f64), PencilError> {
    DiscretizedPencil::new(config, n)?.det_log(lambda)
}
