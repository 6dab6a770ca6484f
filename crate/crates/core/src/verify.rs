//! Singular solutions `U_j = r^{iλ0} φ_j(ω)` of the homogeneous model
//! problem and independent checks on them: Cartesian finite-difference PDE
//! residuals, nonlocal boundary residuals and truncated Sobolev seminorms.

use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::chebyshev::ChebGrid;
use crate::linalg::wrap_angle;
use crate::orbit::{SideId, ValidatedConfig};
use crate::quadrature::GaussLegendre;
use crate::spectrum::{BandResult, EigenvalueRecord};
use crate::{C64, I};

/// Residual bound for a corroborated eigenpair.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Relative finite-difference step.
const FD_STEP: f64 = 1e-3;
/// Sample points keep `|ω| ≤ 0.95 ω_j` and `r ∈ [0.1ε, ε]`.
const ANGLE_FILL: f64 = 0.95;
const R_MIN_FRACTION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub enum VerifyError {
    /// A stencil of half-width `2h` would reach the vertex or a side.
    SamplesTooCloseToVertex { angle: usize, r: f64, h: f64 },
    QuadratureNotConverged { delta: f64, rel_change: f64 },
    ShapeMismatch,
    InvalidDeltas,
}

impl fmt::Display for VerifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifyError::SamplesTooCloseToVertex { angle, r, h } => write!(
                f,
                "sample at r = {r:e} in angle {} is within the stencil width of the vertex or a side (h = {h:e})",
                angle + 1
            ),
            VerifyError::QuadratureNotConverged { delta, rel_change } => {
                write!(f, "annulus below delta = {delta:e} changed by {rel_change:e} under rule refinement")
            }
            VerifyError::ShapeMismatch => write!(f, "one sample array per angle is required"),
            VerifyError::InvalidDeltas => write!(f, "deltas must decrease strictly inside (0, epsilon)"),
        }
    }
}

impl core::error::Error for VerifyError {}

#[derive(Clone, Debug)]
struct Angular {
    grid: ChebGrid,
    phi: Vec<C64>,
    dphi: Vec<C64>,
    d2phi: Vec<C64>,
}

/// `u_j(r, ω) = r^{iλ0} φ_j(ω)` with `φ_j` the barycentric interpolant of
/// grid samples.
#[derive(Clone, Debug)]
pub struct SingularField {
    lambda0: C64,
    epsilon: f64,
    angles: Vec<f64>,
    parts: Vec<Angular>,
}

impl SingularField {
    /// `samples[j]` holds `φ_j` on the Gauss–Lobatto grid of angle `j`.
    pub fn new(config: &ValidatedConfig, lambda0: C64, samples: &[Vec<C64>]) -> Result<Self, VerifyError> {
        if samples.len() != config.n_angles() || samples.iter().any(|s| s.len() < 2) {
            return Err(VerifyError::ShapeMismatch);
        }
        let parts = samples
            .iter()
            .zip(&config.angles)
            .map(|(s, &w)| {
                let grid = ChebGrid::new(s.len(), w);
                Angular {
                    dphi: grid.differentiate(s),
                    d2phi: grid.differentiate2(s),
                    phi: s.clone(),
                    grid,
                }
            })
            .collect();
        Ok(SingularField {
            lambda0,
            epsilon: config.epsilon,
            angles: config.angles.clone(),
            parts,
        })
    }

    /// Samples `f(j, ω)` on grids of size `n`.
    pub fn from_fn(
        config: &ValidatedConfig,
        lambda0: C64,
        n: usize,
        f: impl Fn(usize, f64) -> C64,
    ) -> Result<Self, VerifyError> {
        let samples: Vec<Vec<C64>> = config
            .angles
            .iter()
            .enumerate()
            .map(|(j, &w)| ChebGrid::new(n, w).nodes().iter().map(|&x| f(j, x)).collect())
            .collect();
        SingularField::new(config, lambda0, &samples)
    }

    /// Field of eigenbasis member `member` of a record.
    pub fn from_record(config: &ValidatedConfig, record: &EigenvalueRecord, member: usize) -> Result<Self, VerifyError> {
        let v = record.eigenbasis.vectors.get(member).ok_or(VerifyError::ShapeMismatch)?;
        SingularField::new(config, record.lambda0, v)
    }

    pub fn lambda0(&self) -> C64 {
        self.lambda0
    }

    /// `μ = iλ0`.
    pub fn mu(&self) -> C64 {
        I * self.lambda0
    }

    pub fn n_angles(&self) -> usize {
        self.parts.len()
    }

    /// `(φ, φ′, φ″)` at `ω`.
    pub fn angular_jet(&self, j: usize, omega: f64) -> (C64, C64, C64) {
        let p = &self.parts[j];
        (
            p.grid.interpolate(&p.phi, omega),
            p.grid.interpolate(&p.dphi, omega),
            p.grid.interpolate(&p.d2phi, omega),
        )
    }

    pub fn phi(&self, j: usize, omega: f64) -> C64 {
        let p = &self.parts[j];
        p.grid.interpolate(&p.phi, omega)
    }

    /// `u_j` at polar `(r, ω)`.
    pub fn eval(&self, j: usize, r: f64, omega: f64) -> C64 {
        (self.mu() * r.ln()).exp() * self.phi(j, omega)
    }

    /// `u_j` at a Cartesian point.
    pub fn eval_cartesian(&self, j: usize, y: [f64; 2]) -> C64 {
        self.eval(j, y[0].hypot(y[1]), y[1].atan2(y[0]))
    }

    fn phi_scale(&self) -> f64 {
        self.parts
            .iter()
            .flat_map(|p| p.phi.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE)
    }

    /// `[∂₁u, ∂₂u]` times `r^{1−μ}` and `[∂₁₁u, ∂₁₂u, ∂₂₂u]` times `r^{2−μ}`,
    /// from the polar chain rule.
    fn reduced_derivatives(&self, j: usize, omega: f64) -> ([C64; 2], [C64; 3]) {
        let mu = self.mu();
        let (phi, d1, d2) = self.angular_jet(j, omega);
        let (s, c) = omega.sin_cos();
        let psi1 = mu * c * phi - s * d1;
        let psi2 = mu * s * phi + c * d1;
        let dpsi1 = -mu * s * phi + (mu - 1.0) * c * d1 - s * d2;
        let dpsi2 = mu * c * phi + (mu - 1.0) * s * d1 + c * d2;
        (
            [psi1, psi2],
            [
                (mu - 1.0) * c * psi1 - s * dpsi1,
                (mu - 1.0) * s * psi1 + c * dpsi1,
                (mu - 1.0) * s * psi2 + c * dpsi2,
            ],
        )
    }
}

/// Point `index` of the two-dimensional Halton sequence in bases 2 and 3.
pub fn halton(index: u64) -> [f64; 2] {
    [radical_inverse(index, 2), radical_inverse(index, 3)]
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

/// `(r, ω)` of the quasi-random interior sample `i` in angle `j`.
fn interior_point(field: &SingularField, j: usize, i: usize, seed: u64) -> (f64, f64) {
    let h = halton(seed.wrapping_add(i as u64 + 1));
    let eps = field.epsilon;
    let r = eps * (R_MIN_FRACTION + (1.0 - R_MIN_FRACTION) * h[0]);
    let w = ANGLE_FILL * field.angles[j] * (2.0 * h[1] - 1.0);
    (r, w)
}

/// Largest relative residual of `Σ a_kl ∂_k∂_l u_j` at `sample_count`
/// quasi-random points per angle, by fourth-order central differences with
/// step `1e-3 r`, normalized by `r^{Re μ − 2}`.
pub fn pde_residual(
    field: &SingularField,
    config: &ValidatedConfig,
    sample_count: usize,
    seed: u64,
) -> Result<f64, VerifyError> {
    if field.n_angles() != config.n_angles() {
        return Err(VerifyError::ShapeMismatch);
    }
    let scale = field.phi_scale();
    let mut worst: f64 = 0.0;
    for j in 0..config.n_angles() {
        let a = config.principal_parts[j];
        let amax = a.a11.norm().max(a.a12.norm()).max(a.a22.norm());
        for i in 0..sample_count {
            let (r, w) = interior_point(field, j, i, seed);
            let h = FD_STEP * r;
            let clearance = r * (field.angles[j] - w.abs()).min(core::f64::consts::FRAC_PI_2).sin();
            if r < 10.0 * h || clearance <= 2.0 * core::f64::consts::SQRT_2 * h {
                return Err(VerifyError::SamplesTooCloseToVertex { angle: j, r, h });
            }
            let y = [r * w.cos(), r * w.sin()];
            let u = |dx: f64, dy: f64| field.eval_cartesian(j, [y[0] + dx, y[1] + dy]);
            let second = |e: [f64; 2]| {
                let at = |k: f64| u(k * h * e[0], k * h * e[1]);
                (-at(2.0) + 16.0 * at(1.0) - 30.0 * at(0.0) + 16.0 * at(-1.0) - at(-2.0)) / (12.0 * h * h)
            };
            const W1: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
            let mut mixed = C64::new(0.0, 0.0);
            for &(kx, wx) in &W1 {
                for &(ky, wy) in &W1 {
                    mixed += u(kx * h, ky * h) * (wx * wy);
                }
            }
            mixed /= 144.0 * h * h;
            let lu = a.a11 * second([1.0, 0.0]) + 2.0 * a.a12 * mixed + a.a22 * second([0.0, 1.0]);
            let norm = r.powf(field.mu().re - 2.0) * scale * amax;
            worst = worst.max(lu.norm() / norm);
        }
    }
    Ok(worst)
}

/// Largest value of `|Σ_{k,s} b(0) u_k(G y)|` on the sides, normalized by
/// `r^{Re μ}`.
pub fn nonlocal_bc_residual(
    field: &SingularField,
    config: &ValidatedConfig,
    sample_count: usize,
    seed: u64,
) -> Result<f64, VerifyError> {
    if field.n_angles() != config.n_angles() {
        return Err(VerifyError::ShapeMismatch);
    }
    let scale = field.phi_scale();
    let mut worst: f64 = 0.0;
    for side in SideId::all(config.n_angles()) {
        let theta = config.side_angle(side);
        for i in 0..sample_count {
            let h = halton(seed.wrapping_add(i as u64 + 1));
            let r = field.epsilon * (R_MIN_FRACTION + (1.0 - R_MIN_FRACTION) * h[0]);
            let mut sum = C64::new(0.0, 0.0);
            for t in config.side_terms(side) {
                let omega = if t.rotation == 0.0 {
                    theta
                } else {
                    wrap_angle(theta + t.rotation)
                };
                sum += t.coeff0 * field.eval(t.target, t.homothety * r, omega);
            }
            worst = worst.max(sum.norm() / (r.powf(field.mu().re) * scale));
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Growth {
    /// Increments shrink: the seminorm is finite.
    Convergent,
    /// `I(δ) ≈ a + b ln(1/δ)`.
    Logarithmic,
    /// `I(δ) ≈ a + b δ^{−p}`, `p > 0`.
    Power,
}

/// Truncated seminorms `I(δ) = Σ_j ∫∫_{δ<r<ε} |D^k u_j|² dy`.
#[derive(Clone, Debug, PartialEq)]
pub struct SobolevProbe {
    pub order: usize,
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
    /// Fitted `p` from the increments `I(δ_{k+1}) − I(δ_k) ∝ δ_k^{−p}`;
    /// `-∞` when every increment vanishes.
    pub exponent: f64,
    pub growth: Growth,
}

impl SobolevProbe {
    /// `I(δ_{k+1}) / I(δ_k)`.
    pub fn ratios(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Squared norm of `D^order u_j` divided by `r^{2 Re μ − 2 order}`.
fn reduced_density(field: &SingularField, j: usize, omega: f64, order: usize) -> f64 {
    let (d1, d2) = field.reduced_derivatives(j, omega);
    match order {
        1 => d1[0].norm_sqr() + d1[1].norm_sqr(),
        _ => d2[0].norm_sqr() + 2.0 * d2[1].norm_sqr() + d2[2].norm_sqr(),
    }
}

fn annulus(field: &SingularField, order: usize, lo: f64, hi: f64, qr: &GaussLegendre, qw: &GaussLegendre) -> f64 {
    let p = 2.0 * field.mu().re - 2.0 * order as f64;
    let mut total = 0.0;
    for j in 0..field.n_angles() {
        let wj = field.angles[j];
        for (r, wr) in qr.on(lo, hi) {
            // |r^{μ}|² = r^{2 Re μ}; the phase r^{i Im μ} drops out
            let radial = r.powf(p) * r * wr;
            for (w, ww) in qw.on(-wj, wj) {
                total += radial * ww * reduced_density(field, j, w, order);
            }
        }
    }
    total
}

/// Computes `I(δ)` on the given decreasing `deltas` by tensor Gauss–Legendre
/// quadrature on each dyadic annulus, checked against a refined rule.
pub fn sobolev_probe(field: &SingularField, order: usize, deltas: &[f64]) -> Result<SobolevProbe, VerifyError> {
    let eps = field.epsilon;
    if !(order == 1 || order == 2)
        || deltas.is_empty()
        || deltas.iter().any(|&d| !(d > 0.0 && d < eps))
        || deltas.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(VerifyError::InvalidDeltas);
    }
    let n = field.parts.iter().map(|p| p.phi.len()).max().unwrap_or(8);
    let (qr, qr2) = (GaussLegendre::new(16), GaussLegendre::new(32));
    let (qw, qw2) = (GaussLegendre::new(n + 16), GaussLegendre::new(2 * n + 32));
    // dyadic annuli from ε down to the smallest δ, split at every δ_k
    let mut cuts = Vec::new();
    let mut r = eps;
    let dmin = *deltas.last().unwrap_or(&eps);
    while r > dmin * (1.0 + 1e-12) {
        cuts.push(r);
        r *= 0.5;
    }
    cuts.extend(deltas.iter().copied());
    cuts.push(dmin);
    cuts.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
    cuts.retain(|&c| c >= dmin * (1.0 - 1e-12));
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(deltas.len());
    let mut next = 0;
    for pair in cuts.windows(2) {
        let (hi, lo) = (pair[0], pair[1]);
        let coarse = annulus(field, order, lo, hi, &qr, &qw);
        let fine = annulus(field, order, lo, hi, &qr2, &qw2);
        let scale = fine.abs().max(1e-300);
        let rel = (fine - coarse).abs() / scale;
        if rel > 1e-8 && (fine - coarse).abs() > 1e-20 {
            return Err(VerifyError::QuadratureNotConverged { delta: lo, rel_change: rel });
        }
        acc += fine;
        while next < deltas.len() && (deltas[next] - lo).abs() <= 1e-12 * lo {
            values.push(acc);
            next += 1;
        }
    }
    while values.len() < deltas.len() {
        values.push(acc);
    }
    let (exponent, growth) = fit_growth(deltas, &values);
    Ok(SobolevProbe {
        order,
        deltas: deltas.to_vec(),
        values,
        exponent,
        growth,
    })
}

/// Slope of `ln |ΔI_k|` against `ln(1/δ_k)`.
fn fit_growth(deltas: &[f64], values: &[f64]) -> (f64, Growth) {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pts: Vec<(f64, f64)> = deltas
        .windows(2)
        .zip(values.windows(2))
        .filter_map(|(d, v)| {
            let inc = (v[1] - v[0]).abs() / (d[0] / d[1]).ln();
            (inc > 1e-14 * scale.max(f64::MIN_POSITIVE) && inc > 0.0).then(|| ((1.0 / d[0]).ln(), inc.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return (f64::NEG_INFINITY, Growth::Convergent);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let p = sxy / sxx;
    let growth = if p.abs() < 0.05 {
        Growth::Logarithmic
    } else if p < 0.0 {
        Growth::Convergent
    } else {
        Growth::Power
    };
    (p, growth)
}

/// Residuals of one eigenbasis member.
#[derive(Clone, Debug, PartialEq)]
pub struct Corroboration {
    pub lambda0: C64,
    pub member: usize,
    pub pde: f64,
    pub bc: f64,
}

impl Corroboration {
    pub fn passed(&self) -> bool {
        self.pde < RESIDUAL_TOL && self.bc < RESIDUAL_TOL
    }
}

/// Checks every eigenpair of a band result and moves records with a
/// failing member to the unstable list.
pub fn corroborate(
    config: &ValidatedConfig,
    band: &mut BandResult,
    sample_count: usize,
    seed: u64,
) -> Result<Vec<Corroboration>, VerifyError> {
    let mut out = Vec::new();
    let mut keep = Vec::with_capacity(band.records.len());
    for rec in core::mem::take(&mut band.records) {
        let mut ok = true;
        for m in 0..rec.eigenbasis.multiplicity() {
            let field = SingularField::from_record(config, &rec, m)?;
            let c = Corroboration {
                lambda0: rec.lambda0,
                member: m,
                pde: pde_residual(&field, config, sample_count, seed)?,
                bc: nonlocal_bc_residual(&field, config, sample_count, seed)?,
            };
            ok &= c.passed();
            out.push(c);
        }
        if ok {
            keep.push(rec);
        } else {
            band.unstable.push(rec.root);
        }
    }
    band.records = keep;
    Ok(out)
}
