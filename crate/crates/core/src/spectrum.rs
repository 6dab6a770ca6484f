//! Eigenvalues of the pencil in a horizontal band.
//!
//! Zeros of `det M_n(λ)` are counted with the argument principle on
//! rectangles, isolated by recursive subdivision, refined by Newton's method
//! on `log det` (contour moments for clusters), and re-refined on a grid of
//! size `2n` to filter discretization artefacts. Each surviving eigenvalue
//! gets an eigenbasis, an associated-vector test and a polynomial test, which
//! together decide whether it is proper.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{dot_h, lstsq, vec_norm, wrap_angle, CMat, Svd};
use crate::orbit::ValidatedConfig;
use crate::pencil::{DiscretizedPencil, PencilError};
use crate::{C64, I};

/// Relative singular-value threshold for null spaces and ranks.
pub const NULL_TOL: f64 = 1e-8;
/// Grid-refinement movement below which a root is called stable.
pub const STABLE_TOL: f64 = 1e-8;
/// Grid-refinement movement above which a root is discarded as spurious.
pub const UNSTABLE_TOL: f64 = 1e-6;
/// Roots closer than this are the same root.
pub const DEDUP_TOL: f64 = 1e-8;
/// Padding of the search rectangle beyond the band edges.
const BAND_PAD: f64 = 1e-3;
/// Newton step cap when homing in on a cluster.
const CLUSTER_DIAG: f64 = 0.05;
/// Newton is not attempted on cells larger than this.
const NEWTON_DIAG: f64 = 2.0;
const MAX_NEWTON: usize = 30;

#[derive(Clone, Debug, PartialEq)]
pub enum SpectrumError {
    InvalidBand,
    ContourTooCloseToZero { attempts: usize },
    CountMismatch { winding: usize, located: usize },
    RefinementFailed { near: C64 },
    NotAnEigenvalue { sigma_ratio: f64 },
    Pencil(PencilError),
}

impl fmt::Display for SpectrumError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectrumError::InvalidBand => write!(f, "band needs c1 < c2 and a positive real half-width"),
            SpectrumError::ContourTooCloseToZero { attempts } => {
                write!(f, "contour passes too close to a zero of det M (after {attempts} perturbations)")
            }
            SpectrumError::CountMismatch { winding, located } => {
                write!(f, "winding number {winding} but {located} zeros located")
            }
            SpectrumError::RefinementFailed { near } => write!(f, "root refinement failed near {near}"),
            SpectrumError::NotAnEigenvalue { sigma_ratio } => {
                write!(f, "not an eigenvalue: smallest relative singular value {sigma_ratio:e}")
            }
            SpectrumError::Pencil(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SpectrumError {}

impl From<PencilError> for SpectrumError {
    fn from(e: PencilError) -> Self {
        SpectrumError::Pencil(e)
    }
}

/// Closed rectangle `[re0, re1] × [im0, im1]` in the λ-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
}

impl Rect {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Self {
        Rect { re0, re1, im0, im1 }
    }

    pub fn width(&self) -> f64 {
        self.re1 - self.re0
    }

    pub fn height(&self) -> f64 {
        self.im1 - self.im0
    }

    pub fn diag(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.re0 + self.re1), 0.5 * (self.im0 + self.im1))
    }

    pub fn contains(&self, z: C64, slack: f64) -> bool {
        z.re >= self.re0 - slack && z.re <= self.re1 + slack && z.im >= self.im0 - slack && z.im <= self.im1 + slack
    }

    fn grown(&self, d: f64) -> Rect {
        Rect::new(self.re0 - d, self.re1 + d, self.im0 - d, self.im1 + d)
    }

    /// Splits the longer side at `fraction`.
    fn split(&self, fraction: f64) -> (Rect, Rect) {
        if self.width() >= self.height() {
            let x = self.re0 + fraction * self.width();
            (
                Rect::new(self.re0, x, self.im0, self.im1),
                Rect::new(x, self.re1, self.im0, self.im1),
            )
        } else {
            let y = self.im0 + fraction * self.height();
            (
                Rect::new(self.re0, self.re1, self.im0, y),
                Rect::new(self.re0, self.re1, y, self.im1),
            )
        }
    }
}

/// Search parameters for `c1 ≤ Im λ < c2`, `|Re λ| ≤ re_half_width`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandQuery {
    pub c1: f64,
    pub c2: f64,
    pub re_half_width: f64,
    pub n: usize,
    pub tol_root: f64,
    pub delta_edge: f64,
}

impl Default for BandQuery {
    fn default() -> Self {
        BandQuery {
            c1: -1.0,
            c2: 0.0,
            re_half_width: 10.0,
            n: 48,
            tol_root: 1e-10,
            delta_edge: 1e-9,
        }
    }
}

impl BandQuery {
    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_band(mut self, c1: f64, c2: f64) -> Self {
        self.c1 = c1;
        self.c2 = c2;
        self
    }

    pub fn with_re_half_width(mut self, r: f64) -> Self {
        self.re_half_width = r;
        self
    }

    /// The padded rectangle searched for zeros.
    pub fn search_rect(&self) -> Rect {
        Rect::new(
            -self.re_half_width,
            self.re_half_width,
            self.c1 - BAND_PAD,
            self.c2 + BAND_PAD,
        )
    }
}

/// Winding number of `det M` around the boundary of `rect`, by adaptive
/// phase tracking. A segment is accepted when the log-derivative varies
/// little along it and predicts the observed phase change, so a zero close
/// to the contour cannot alias. Fails when the contour comes too close to a
/// zero.
fn winding(pencil: &DiscretizedPencil, rect: &Rect) -> Result<i64, SpectrumError> {
    if rect.width() <= 0.0 || rect.height() <= 0.0 {
        return Ok(0);
    }
    let corners = [
        C64::new(rect.re0, rect.im0),
        C64::new(rect.re1, rect.im0),
        C64::new(rect.re1, rect.im1),
        C64::new(rect.re0, rect.im1),
    ];
    let min_len = 1e-11 * (1.0 + rect.diag());
    let too_close = SpectrumError::ContourTooCloseToZero { attempts: 0 };
    let jet = |z: &C64| {
        pencil
            .log_derivative(*z)
            .map(|j| (*z, j.phase, j.dlog))
            .map_err(|_| too_close.clone())
    };
    let mut points = Vec::new();
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        let pieces = ((b - a).norm() / 0.5).ceil().max(2.0) as usize;
        points.extend((0..pieces).map(|k| a + (b - a) * (k as f64 / pieces as f64)));
    }
    let samples = par_map(&points, jet).into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut total = 0.0;
    let mut stack = Vec::new();
    for k in (0..samples.len()).rev() {
        stack.push((samples[k], samples[(k + 1) % samples.len()]));
    }
    while let Some((s0, s1)) = stack.pop() {
        let (z0, p0, g0) = s0;
        let (z1, p1, g1) = s1;
        let dz = z1 - z0;
        let d = wrap_angle(p1 - p0);
        let predicted = (0.5 * (g0 + g1) * dz).im;
        if (g1 - g0).norm() * dz.norm() < 0.25 && (predicted - d).abs() < 0.1 && d.abs() < PI / 2.0 {
            total += d;
            continue;
        }
        if dz.norm() < min_len {
            return Err(too_close);
        }
        let m = jet(&(z0 + 0.5 * dz))?;
        stack.push((m, s1));
        stack.push((s0, m));
    }
    let w = total / (2.0 * PI);
    let r = w.round();
    if (w - r).abs() > 0.05 {
        return Err(too_close);
    }
    Ok(r as i64)
}

/// Number of zeros (with multiplicity) of `det M_n` inside `rect`. Edges are
/// pushed outward by `1e-6 · diag` up to three times if the contour is too
/// close to a zero.
pub fn count_zeros_with(pencil: &DiscretizedPencil, rect: &Rect) -> Result<usize, SpectrumError> {
    if rect.width() <= 0.0 || rect.height() <= 0.0 {
        return Ok(0);
    }
    let step = 1e-6 * rect.diag();
    for attempt in 0..=3 {
        match winding(pencil, &rect.grown(step * attempt as f64)) {
            Ok(w) => return Ok(w.max(0) as usize),
            Err(SpectrumError::ContourTooCloseToZero { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(SpectrumError::ContourTooCloseToZero { attempts: 3 })
}

pub fn count_zeros(config: &ValidatedConfig, rect: &Rect, n: usize) -> Result<usize, SpectrumError> {
    count_zeros_with(&DiscretizedPencil::new(config, n)?, rect)
}

/// Newton's method on `log det M` for a zero of multiplicity `mult`:
/// `λ ← λ − mult / trace(M⁻¹M′)`, with a secant fallback on `det` when
/// Newton does not settle within 30 steps.
pub fn refine_root(
    pencil: &DiscretizedPencil,
    start: C64,
    mult: usize,
    tol: f64,
    max_step: f64,
) -> Result<C64, SpectrumError> {
    let mut z = start;
    for _ in 0..MAX_NEWTON {
        let jet = match pencil.log_derivative(z) {
            Ok(j) => j,
            Err(PencilError::ExactSingular) => return Ok(z),
            Err(e) => return Err(e.into()),
        };
        if !(jet.dlog.norm() > 0.0) || !jet.dlog.re.is_finite() {
            break;
        }
        let mut step = mult as f64 / jet.dlog;
        if step.norm() > max_step {
            step *= max_step / step.norm();
        }
        z -= step;
        if step.norm() < tol * z.norm().max(1.0) {
            return Ok(z);
        }
    }
    secant(pencil, start, tol).ok_or(SpectrumError::RefinementFailed { near: start })
}

fn secant(pencil: &DiscretizedPencil, start: C64, tol: f64) -> Option<C64> {
    let (l0, p0) = pencil.det_log(start).ok()?;
    let f = |z: C64| -> Option<C64> {
        match pencil.det_log(z) {
            Ok((l, p)) => Some(C64::from_polar((l - l0).exp(), p - p0)),
            Err(_) => Some(C64::new(0.0, 0.0)),
        }
    };
    let mut a = start;
    let mut b = start + C64::new(1e-4, 1e-4);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    for _ in 0..100 {
        if fb.norm() == 0.0 {
            return Some(b);
        }
        let denom = fb - fa;
        if denom.norm() == 0.0 {
            return None;
        }
        let c = b - fb * (b - a) / denom;
        if !c.re.is_finite() || !c.im.is_finite() {
            return None;
        }
        if (c - b).norm() < tol * c.norm().max(1.0) {
            return Some(c);
        }
        a = b;
        fa = fb;
        b = c;
        fb = f(b)?;
    }
    None
}

/// Contour moments of `det M` on a circle: `(count, Σ zᵢ, Σ zᵢ²)` over the
/// zeros inside, by the trapezoidal rule on `K` points.
fn circle_moments(pencil: &DiscretizedPencil, center: C64, radius: f64) -> Result<[C64; 3], SpectrumError> {
    const K: usize = 48;
    let mut m = [C64::new(0.0, 0.0); 3];
    for k in 0..K {
        let e = C64::from_polar(1.0, 2.0 * PI * k as f64 / K as f64);
        let z = center + radius * e;
        let g = pencil.log_derivative(z)?.dlog * radius * e / K as f64;
        let dz = z - center;
        m[0] += g;
        m[1] += g * dz;
        m[2] += g * dz * dz;
    }
    // moments were taken about the center
    let s1 = m[1] + m[0] * center;
    let s2 = m[2] + 2.0 * center * m[1] + center * center * m[0];
    Ok([m[0], s1, s2])
}

/// Refines a cluster of `mult` zeros near `guess` to their mean. Returns
/// `None` when the zeros are visibly distinct.
fn refine_cluster(
    pencil: &DiscretizedPencil,
    guess: C64,
    mult: usize,
    tol: f64,
) -> Result<Option<C64>, SpectrumError> {
    let z = refine_root(pencil, guess, mult, tol, CLUSTER_DIAG)?;
    for &radius in &[1e-3, 3e-3, 3e-4] {
        let [count, s1, s2] = match circle_moments(pencil, z, radius) {
            Ok(m) => m,
            Err(_) => continue,
        };
        if (count - C64::new(mult as f64, 0.0)).norm() > 0.1 {
            continue;
        }
        let mean = s1 / mult as f64;
        let var = s2 / mult as f64 - mean * mean;
        if var.norm().sqrt() > 1e-5 {
            return Ok(None);
        }
        return Ok(Some(mean));
    }
    Ok(None)
}

/// A zero of `det M_n` with its grid-refinement check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocatedRoot {
    /// Position on the base grid.
    pub lambda: C64,
    /// Position on the doubled grid.
    pub lambda_fine: C64,
    /// `|lambda_fine − lambda|`.
    pub movement: f64,
    /// Algebraic multiplicity from the winding number.
    pub multiplicity: usize,
}

impl LocatedRoot {
    pub fn is_stable(&self) -> bool {
        self.movement < STABLE_TOL
    }

    pub fn is_unstable(&self) -> bool {
        !(self.movement <= UNSTABLE_TOL)
    }
}

enum CellOutcome {
    Root(C64, usize),
    Split(Vec<(Rect, usize)>),
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, U>(items: &[T], f: impl Fn(&T) -> U) -> Vec<U> {
    items.iter().map(f).collect()
}

fn process_cell(
    pencil: &DiscretizedPencil,
    rect: &Rect,
    count: usize,
    tol: f64,
) -> Result<CellOutcome, SpectrumError> {
    let diag = rect.diag();
    if count == 1 && diag < NEWTON_DIAG {
        if let Ok(z) = refine_root(pencil, rect.center(), 1, tol, diag) {
            if rect.contains(z, 1e-12) {
                return Ok(CellOutcome::Root(z, 1));
            }
        }
    }
    if count >= 2 && diag < NEWTON_DIAG {
        if let Ok(Some(z)) = refine_cluster(pencil, rect.center(), count, tol) {
            if rect.contains(z, 1e-9) {
                return Ok(CellOutcome::Root(z, count));
            }
        }
    }
    if diag < 1e-9 {
        return Ok(CellOutcome::Root(rect.center(), count));
    }
    let mut last_err = SpectrumError::ContourTooCloseToZero { attempts: 0 };
    for (attempt, &fraction) in [0.5371, 0.4629, 0.5913, 0.4187].iter().enumerate() {
        let (a, b) = rect.split(fraction);
        let ca = winding(pencil, &a);
        let cb = winding(pencil, &b);
        match (ca, cb) {
            (Ok(ca), Ok(cb)) if ca >= 0 && cb >= 0 && (ca + cb) as usize == count => {
                let mut v = Vec::new();
                if ca > 0 {
                    v.push((a, ca as usize));
                }
                if cb > 0 {
                    v.push((b, cb as usize));
                }
                return Ok(CellOutcome::Split(v));
            }
            (Err(e), _) | (_, Err(e)) => last_err = e,
            _ => {
                last_err = SpectrumError::ContourTooCloseToZero { attempts: attempt + 1 };
            }
        }
    }
    Err(last_err)
}

/// Isolates and refines every zero of `det M_n` inside `rect`.
pub fn find_zeros(pencil: &DiscretizedPencil, rect: &Rect, tol: f64) -> Result<(usize, Vec<(C64, usize)>), SpectrumError> {
    let total = count_zeros_with(pencil, rect)?;
    let mut roots: Vec<(C64, usize)> = Vec::new();
    let mut frontier = if total > 0 { vec![(*rect, total)] } else { Vec::new() };
    while !frontier.is_empty() {
        let outcomes = par_map(&frontier, |(r, c)| process_cell(pencil, r, *c, tol));
        let mut next = Vec::new();
        for o in outcomes {
            match o? {
                CellOutcome::Root(z, m) => {
                    if let Some(existing) = roots.iter_mut().find(|(w, _)| (*w - z).norm() < DEDUP_TOL) {
                        existing.1 += m;
                    } else {
                        roots.push((z, m));
                    }
                }
                CellOutcome::Split(children) => next.extend(children),
            }
        }
        frontier = next;
    }
    let located: usize = roots.iter().map(|r| r.1).sum();
    if located != total {
        return Err(SpectrumError::CountMismatch { winding: total, located });
    }
    Ok((total, roots))
}

/// Heuristic evidence that no zeros sit beyond `|Re λ| = R`: `log|det|`
/// grows outward along the mid-band line on both sides.
pub fn growth_check(pencil: &DiscretizedPencil, query: &BandQuery) -> bool {
    let y = 0.5 * (query.c1 + query.c2);
    let r = query.re_half_width;
    [-1.0, 1.0].iter().all(|&s| {
        let vals: Vec<f64> = [1.0, 1.5, 2.0]
            .iter()
            .filter_map(|&f| pencil.det_log(C64::new(s * f * r, y)).ok().map(|v| v.0))
            .collect();
        vals.len() == 3 && vals[0] < vals[1] && vals[1] < vals[2]
    })
}

/// Eigenbasis at `λ0`: per basis member, per angle, the samples on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenbasis {
    pub vectors: Vec<Vec<Vec<C64>>>,
    /// `σ_min / σ_max` of `M_n(λ0)`.
    pub sigma_ratio: f64,
    /// Singular ratios of the basis members.
    pub null_ratios: Vec<f64>,
    /// Number of singular ratios below the threshold before any cap.
    pub raw_nullity: usize,
}

impl Eigenbasis {
    pub fn multiplicity(&self) -> usize {
        self.vectors.len()
    }

    /// Stacked form of member `k`.
    pub fn stacked(&self, k: usize) -> Vec<C64> {
        self.vectors[k].iter().flatten().copied().collect()
    }
}

fn normalize_representative(v: &mut [C64]) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        // first index attaining the maximum, up to rounding
        if z.norm() > best_abs * (1.0 + 1e-12) {
            best_abs = z.norm();
            best = i;
        }
    }
    if best_abs <= 0.0 {
        return;
    }
    let rot = v[best].conj() / (best_abs * best_abs);
    for z in v.iter_mut() {
        *z *= rot;
    }
    v[best] = C64::new(1.0, 0.0);
}

/// Right null space of `M_n(λ0)`; at most `cap` vectors when given.
pub fn eigenbasis_with(
    pencil: &DiscretizedPencil,
    lambda0: C64,
    cap: Option<usize>,
) -> Result<Eigenbasis, SpectrumError> {
    let m = pencil.assemble(lambda0);
    let svd = Svd::new(&m);
    let smax = svd.max_singular();
    let dim = m.cols();
    let ratios: Vec<f64> = svd.s.iter().map(|s| s / smax).collect();
    let sigma_ratio = ratios[dim - 1];
    let raw_nullity = ratios.iter().filter(|&&r| r < NULL_TOL).count();
    if raw_nullity == 0 {
        return Err(SpectrumError::NotAnEigenvalue { sigma_ratio });
    }
    let take = cap.map_or(raw_nullity, |c| raw_nullity.min(c.max(1)));
    let n = pencil.n();
    let mut vectors = Vec::new();
    let mut null_ratios = Vec::new();
    for k in (dim - take..dim).rev() {
        let mut v = svd.v.column(k);
        normalize_representative(&mut v);
        vectors.push(v.chunks(n).map(<[C64]>::to_vec).collect());
        null_ratios.push(ratios[k]);
    }
    Ok(Eigenbasis {
        vectors,
        sigma_ratio,
        null_ratios,
        raw_nullity,
    })
}

pub fn eigenbasis(config: &ValidatedConfig, lambda0: C64, n: usize) -> Result<Eigenbasis, SpectrumError> {
    eigenbasis_with(&DiscretizedPencil::new(config, n)?, lambda0, None)
}

fn orthonormalize(vs: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = dot_h(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let nrm = vec_norm(&w);
        if nrm > 1e-12 * vec_norm(v).max(f64::MIN_POSITIVE) {
            out.push(w.into_iter().map(|z| z / nrm).collect());
        }
    }
    out
}

/// True iff some eigenvector at `λ0` has an associated vector: with `W` a
/// basis of the left null space, `W^H M′(λ0) V` is rank deficient.
pub fn has_associated_with(
    pencil: &DiscretizedPencil,
    lambda0: C64,
    basis: &Eigenbasis,
) -> Result<bool, SpectrumError> {
    let g = basis.multiplicity();
    if g == 0 {
        return Err(SpectrumError::NotAnEigenvalue { sigma_ratio: 1.0 });
    }
    let v = orthonormalize(&(0..g).map(|k| basis.stacked(k)).collect::<Vec<_>>());
    let m = pencil.assemble(lambda0);
    let left = Svd::new(&m.adjoint());
    let dim = m.rows();
    let ratio = left.s[dim - 1] / left.max_singular();
    if ratio >= NULL_TOL {
        return Err(SpectrumError::NotAnEigenvalue { sigma_ratio: ratio });
    }
    let w: Vec<Vec<C64>> = (dim - g..dim).map(|k| left.v.column(k)).collect();
    let dm = pencil.derivative(lambda0);
    let dmv: Vec<Vec<C64>> = v.iter().map(|x| dm.mul_vec(x)).collect();
    let gmat = CMat::from_fn(g, v.len(), |i, j| dot_h(&w[i], &dmv[j]));
    let scale = dm.norm_fro().max(f64::MIN_POSITIVE);
    let s = Svd::new(&gmat).s;
    let rank = s.iter().filter(|&&x| x > NULL_TOL * scale).count();
    Ok(rank < g)
}

pub fn has_associated(
    config: &ValidatedConfig,
    lambda0: C64,
    basis: &Eigenbasis,
    n: usize,
) -> Result<bool, SpectrumError> {
    has_associated_with(&DiscretizedPencil::new(config, n)?, lambda0, basis)
}

/// Result of a successful polynomial test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolynomialFit {
    /// Degree `m = iλ0` of the homogeneous polynomials.
    pub degree: usize,
    /// Largest relative projection residual over basis members and angles.
    pub residual: f64,
}

/// Relative residual of projecting samples of `phi` at `nodes` onto the
/// restrictions to the unit circle of homogeneous polynomials of degree `m`,
/// `span{cos((m−2l)ω), sin((m−2l)ω)}`.
pub fn polynomial_residual(m: usize, nodes: &[f64], phi: &[C64]) -> f64 {
    let nrm = vec_norm(phi);
    if nrm == 0.0 {
        return 0.0;
    }
    let mut freqs: Vec<usize> = (0..=m).map(|l| (m as i64 - 2 * l as i64).unsigned_abs() as usize).collect();
    freqs.sort_unstable();
    freqs.dedup();
    let mut cols: Vec<Vec<C64>> = Vec::new();
    for &f in &freqs {
        cols.push(nodes.iter().map(|&w| C64::new((f as f64 * w).cos(), 0.0)).collect());
        if f > 0 {
            cols.push(nodes.iter().map(|&w| C64::new((f as f64 * w).sin(), 0.0)).collect());
        }
    }
    let a = CMat::from_columns(&cols);
    lstsq(&a, phi, 1e-13).residual / nrm
}

/// Tests whether `r^{iλ0} φ_j(ω)` is a polynomial in `y₁, y₂` for every basis
/// member and every angle. `nodes[j]` are the sample positions of angle `j`.
pub fn polynomial_degree_test(
    lambda0: C64,
    basis: &Eigenbasis,
    nodes: &[&[f64]],
    tol: f64,
) -> Option<PolynomialFit> {
    let il = I * lambda0;
    let m = il.re.round();
    if m < 0.0 || (il - C64::new(m, 0.0)).norm() >= tol {
        return None;
    }
    let m = m as usize;
    let mut worst: f64 = 0.0;
    for member in &basis.vectors {
        for (phi, nd) in member.iter().zip(nodes) {
            let r = polynomial_residual(m, nd, phi);
            worst = worst.max(r);
        }
    }
    (worst < tol).then_some(PolynomialFit {
        degree: m,
        residual: worst,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Proper,
    Improper,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Proper => "Proper",
            Classification::Improper => "Improper",
        })
    }
}

/// Eigenvalue in the band with everything the classification needs.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenvalueRecord {
    pub lambda0: C64,
    pub root: LocatedRoot,
    pub stable: bool,
    /// Within `δ_edge` of the closed lower band edge.
    pub edge_bottom: bool,
    pub geometric_multiplicity: usize,
    pub algebraic_multiplicity: usize,
    pub eigenbasis: Eigenbasis,
    /// `‖M_n(λ0) v‖ / ‖v‖` per basis member.
    pub residuals: Vec<f64>,
    pub has_associated: bool,
    pub polynomial: Option<PolynomialFit>,
    pub classification: Classification,
}

impl EigenvalueRecord {
    /// Winding and SVD multiplicities disagree, which signals a Jordan
    /// block.
    pub fn multiplicity_discrepancy(&self) -> bool {
        self.algebraic_multiplicity != self.geometric_multiplicity
    }
}

pub fn classify(has_associated: bool, polynomial: Option<&PolynomialFit>) -> Classification {
    if !has_associated && polynomial.is_some() {
        Classification::Proper
    } else {
        Classification::Improper
    }
}

/// Builds the full record for a located root.
pub fn analyze_root(
    pencil: &DiscretizedPencil,
    root: LocatedRoot,
    edge_bottom: bool,
) -> Result<EigenvalueRecord, SpectrumError> {
    let lambda0 = root.lambda;
    let basis = eigenbasis_with(pencil, lambda0, Some(root.multiplicity))?;
    let m = pencil.assemble(lambda0);
    let residuals = (0..basis.multiplicity())
        .map(|k| {
            let v = basis.stacked(k);
            vec_norm(&m.mul_vec(&v)) / vec_norm(&v)
        })
        .collect();
    let has_assoc = has_associated_with(pencil, lambda0, &basis)?;
    let nodes: Vec<&[f64]> = (0..pencil.n_angles()).map(|j| pencil.grid(j).nodes()).collect();
    let polynomial = polynomial_degree_test(lambda0, &basis, &nodes, 1e-7);
    let classification = classify(has_assoc, polynomial.as_ref());
    Ok(EigenvalueRecord {
        lambda0,
        stable: root.is_stable(),
        edge_bottom,
        geometric_multiplicity: basis.multiplicity(),
        algebraic_multiplicity: root.multiplicity,
        eigenbasis: basis,
        residuals,
        has_associated: has_assoc,
        polynomial,
        classification,
        root,
    })
}

/// Everything found while searching one band.
#[derive(Clone, Debug, PartialEq)]
pub struct BandResult {
    pub query: BandQuery,
    /// Eigenvalues in `c1 − δ_edge < Im λ < c2 − δ_edge`, sorted by `(Re, Im)`.
    pub records: Vec<EigenvalueRecord>,
    /// Stable roots within `δ_edge` of the open upper edge; excluded.
    pub ambiguous_top: Vec<LocatedRoot>,
    /// Roots that moved more than `1e-6` under grid doubling; excluded.
    pub unstable: Vec<LocatedRoot>,
    /// Roots found in the padded search rectangle but outside the band.
    pub outside: Vec<LocatedRoot>,
    /// Winding number of the padded search rectangle.
    pub winding_total: usize,
    pub growth_ok: bool,
}

impl BandResult {
    /// Sum of multiplicities of every root found in the padded rectangle.
    pub fn located_total(&self) -> usize {
        self.records.iter().map(|r| r.algebraic_multiplicity).sum::<usize>()
            + [&self.ambiguous_top, &self.unstable, &self.outside]
                .iter()
                .flat_map(|v| v.iter())
                .map(|r| r.multiplicity)
                .sum::<usize>()
    }
}

fn sort_key(a: &C64, b: &C64) -> core::cmp::Ordering {
    a.re.partial_cmp(&b.re)
        .unwrap_or(core::cmp::Ordering::Equal)
        .then(a.im.partial_cmp(&b.im).unwrap_or(core::cmp::Ordering::Equal))
}

pub fn locate_eigenvalues(config: &ValidatedConfig, query: &BandQuery) -> Result<BandResult, SpectrumError> {
    if !(query.c1 < query.c2) || !(query.re_half_width > 0.0) {
        return Err(SpectrumError::InvalidBand);
    }
    let coarse = DiscretizedPencil::new(config, query.n)?;
    let fine = DiscretizedPencil::new(config, 2 * query.n)?;
    let rect = query.search_rect();
    let (winding_total, mut roots) = find_zeros(&coarse, &rect, query.tol_root)?;
    roots.sort_by(|a, b| sort_key(&a.0, &b.0));
    let located: Vec<Result<LocatedRoot, SpectrumError>> = par_map(&roots, |&(z, m)| {
        let zf = if m == 1 {
            refine_root(&fine, z, 1, query.tol_root, 1e-2)?
        } else {
            refine_cluster(&fine, z, m, query.tol_root)?.unwrap_or(C64::new(f64::NAN, f64::NAN))
        };
        let movement = (zf - z).norm();
        Ok(LocatedRoot {
            lambda: z,
            lambda_fine: zf,
            movement: if movement.is_finite() { movement } else { f64::INFINITY },
            multiplicity: m,
        })
    });
    let mut result = BandResult {
        query: *query,
        records: Vec::new(),
        ambiguous_top: Vec::new(),
        unstable: Vec::new(),
        outside: Vec::new(),
        winding_total,
        growth_ok: growth_check(&coarse, query),
    };
    let mut in_band = Vec::new();
    for root in located {
        let root = root?;
        let im = root.lambda.im;
        if root.is_unstable() {
            let inside = im > query.c1 - query.delta_edge && im < query.c2 + query.delta_edge;
            if inside {
                result.unstable.push(root);
            } else {
                result.outside.push(root);
            }
        } else if (im - query.c2).abs() < query.delta_edge {
            result.ambiguous_top.push(root);
        } else if im > query.c2 || im <= query.c1 - query.delta_edge {
            result.outside.push(root);
        } else {
            in_band.push((root, (im - query.c1).abs() < query.delta_edge));
        }
    }
    let records = par_map(&in_band, |&(root, edge)| analyze_root(&coarse, root, edge));
    for r in records {
        result.records.push(r?);
    }
    result.records.sort_by(|a, b| sort_key(&a.lambda0, &b.lambda0));
    Ok(result)
}
