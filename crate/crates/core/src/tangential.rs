//! The tangential operator system and the consistency conditions on traces.
//!
//! Differentiating `Σ b U_k(G y)` along a side `γ_{jσ}` and dropping the
//! composition with `G` gives the first-order operators
//! `B̂_{jσ} = Σ_k T_{jσ}[k] · ∇U_k`, with
//!
//! ```text
//! T_{jσ}[k] = Σ_{s : target = k} b_{jσks}(0) χ_{jσks} R(ω_{jσks}) τ_{jσ}.
//! ```
//!
//! Whenever this system of `2N` operators is linearly dependent, every
//! dependent member `B̂_{jσ} = Σ β B̂_{j′σ′}` forces a compatibility relation
//! on boundary data: `g = Z⁰_{jσ} − Σ β Z⁰_{j′σ′}` must satisfy
//! `∫₀^ε r⁻¹ |g′(r)|² dr < ∞`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{dot_h, lstsq, null_space, vec_norm, CMat};
use crate::orbit::{side_tangent, transform_matrix, OrbitConfig, SideId, ValidatedConfig};
use crate::quadrature::GaussLegendre;
use crate::C64;

/// Relative residual above which a row is independent of the pivots.
pub const PIVOT_TOL: f64 = 1e-10;
/// Relative residuals between this and [`PIVOT_TOL`] are flagged.
pub const WARN_TOL: f64 = 1e-12;
/// Smooth traces are consistent iff `|g′(0)|` is below this.
pub const TOL_CONS: f64 = 1e-9;
/// Log-slope of `F(δ)` above which a sampled combination diverges.
pub const SLOPE_LIMIT: f64 = 0.5;
/// Minimum length of a graded mesh.
pub const MIN_SAMPLES: usize = 16;
/// Dyadic levels used for smooth traces.
const SMOOTH_LEVELS: usize = 40;
/// Residual of the admissibility system above which `v` is not admissible.
pub const ADMISSIBLE_TOL: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub enum TangentialError {
    InsufficientSamples { side: SideId, got: usize },
    MismatchedDomains { detail: &'static str },
    MissingTrace { side: SideId },
    DuplicateTrace { side: SideId },
}

impl fmt::Display for TangentialError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TangentialError::InsufficientSamples { side, got } => {
                write!(f, "trace on side {side} has {got} samples, need at least {MIN_SAMPLES}")
            }
            TangentialError::MismatchedDomains { detail } => write!(f, "traces live on different domains: {detail}"),
            TangentialError::MissingTrace { side } => write!(f, "no trace given for side {side}"),
            TangentialError::DuplicateTrace { side } => write!(f, "two traces given for side {side}"),
        }
    }
}

impl core::error::Error for TangentialError {}

/// Expression of a dependent operator through the pivots.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaRow {
    pub side: SideId,
    /// `β_{jσ}^{j′σ′}`, aligned with [`TangentialSystem::pivots`].
    pub coeffs: Vec<C64>,
    /// `‖T_{jσ} − Σ β T_{j′σ′}‖`.
    pub residual: f64,
    /// Relative distance to the pivot span fell between `1e-12` and `1e-10`.
    pub near_threshold: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentialSystem {
    n_angles: usize,
    /// `operators[side.flat_index()][k] = T_{jσ}[k]`.
    operators: Vec<Vec<[C64; 2]>>,
    pivots: Vec<SideId>,
    beta: Vec<BetaRow>,
}

impl TangentialSystem {
    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    /// `T_{jσ}` as `N` rows of `(∂₁, ∂₂)` coefficients.
    pub fn operator(&self, side: SideId) -> &[[C64; 2]] {
        &self.operators[side.flat_index()]
    }

    /// `T_{jσ}` flattened to a `2N`-vector.
    pub fn flattened(&self, side: SideId) -> Vec<C64> {
        self.operator(side).iter().flatten().copied().collect()
    }

    /// Maximal independent subsystem in lexicographic scan order.
    pub fn pivots(&self) -> &[SideId] {
        &self.pivots
    }

    /// One row per dependent operator.
    pub fn beta(&self) -> &[BetaRow] {
        &self.beta
    }

    pub fn beta_for(&self, side: SideId) -> Option<&BetaRow> {
        self.beta.iter().find(|b| b.side == side)
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_dependent(&self) -> bool {
        self.pivots.len() < 2 * self.n_angles
    }

    pub fn max_reconstruction_residual(&self) -> f64 {
        self.beta.iter().map(|b| b.residual).fold(0.0, f64::max)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &BetaRow> {
        self.beta.iter().filter(|b| b.near_threshold)
    }
}

/// Builds `T_{jσ}` for every side, the pivot set and the `β` rows.
pub fn tangential_system(config: &ValidatedConfig) -> TangentialSystem {
    let n = config.n_angles();
    let operators: Vec<Vec<[C64; 2]>> = SideId::all(n)
        .map(|side| {
            let tau = side_tangent(side, config);
            let mut rows = vec![[ZERO; 2]; n];
            for term in config.side_terms(side) {
                let g = transform_matrix(term);
                let d = [g[0][0] * tau[0] + g[0][1] * tau[1], g[1][0] * tau[0] + g[1][1] * tau[1]];
                rows[term.target][0] += term.coeff0 * d[0];
                rows[term.target][1] += term.coeff0 * d[1];
            }
            rows
        })
        .collect();
    let flat = |s: SideId| -> Vec<C64> { operators[s.flat_index()].iter().flatten().copied().collect() };
    // size of each operator before cancellation between addends
    let gross = |s: SideId| -> f64 {
        config
            .side_terms(s)
            .iter()
            .map(|t| t.coeff0.norm() * t.homothety)
            .sum()
    };

    let mut pivots = Vec::new();
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut dependent = Vec::new();
    for side in SideId::all(n) {
        let v = flat(side);
        let nv = gross(side).max(vec_norm(&v));
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot_h(q, &r);
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= c * qi;
                }
            }
        }
        let rel = if nv > 0.0 { vec_norm(&r) / nv } else { 0.0 };
        if rel > PIVOT_TOL {
            let nr = vec_norm(&r);
            basis.push(r.into_iter().map(|z| z / nr).collect());
            pivots.push(side);
        } else {
            dependent.push((side, rel));
        }
    }
    let pivot_cols: Vec<Vec<C64>> = pivots.iter().map(|&p| flat(p)).collect();
    let beta = dependent
        .into_iter()
        .map(|(side, rel)| {
            let v = flat(side);
            let (coeffs, residual) = if pivot_cols.is_empty() {
                (Vec::new(), vec_norm(&v))
            } else {
                let ls = lstsq(&CMat::from_columns(&pivot_cols), &v, 1e-14);
                (ls.x, ls.residual)
            };
            BetaRow {
                side,
                coeffs,
                residual,
                near_threshold: rel > WARN_TOL,
            }
        })
        .collect();
    TangentialSystem {
        n_angles: n,
        operators,
        pivots,
        beta,
    }
}

/// A complex function of arclength `r` on a side.
pub type TraceFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

#[derive(Clone)]
pub enum TraceData {
    /// Closed form with its derivative.
    Smooth { value: TraceFn, derivative: TraceFn },
    /// Values on the graded mesh `r_i = ε 2^{−i/4}`, `i = 0, 1, …`.
    Sampled { epsilon: f64, values: Vec<C64> },
}

impl fmt::Debug for TraceData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceData::Smooth { value, .. } => write!(f, "Smooth {{ value(0) = {} }}", value(0.0)),
            TraceData::Sampled { epsilon, values } => f
                .debug_struct("Sampled")
                .field("epsilon", epsilon)
                .field("len", &values.len())
                .finish(),
        }
    }
}

/// Boundary data `Z_{jσ}` restricted to side `side`, as a function of the
/// distance to the vertex.
#[derive(Clone, Debug)]
pub struct Trace {
    pub side: SideId,
    pub data: TraceData,
}

/// `r_i = ε 2^{−i/4}` for `i < m`.
pub fn graded_mesh(epsilon: f64, m: usize) -> Vec<f64> {
    (0..m).map(|i| epsilon * (-(i as f64) * 0.25 * LN_2).exp()).collect()
}

impl Trace {
    pub fn smooth(
        side: SideId,
        value: impl Fn(f64) -> C64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        Trace {
            side,
            data: TraceData::Smooth {
                value: Arc::new(value),
                derivative: Arc::new(derivative),
            },
        }
    }

    /// `Σ c_k r^k`.
    pub fn polynomial(side: SideId, coeffs: &[C64]) -> Self {
        let c: Vec<C64> = coeffs.to_vec();
        let dc: Vec<C64> = coeffs.iter().enumerate().skip(1).map(|(k, &a)| a * k as f64).collect();
        let horner = |c: Vec<C64>| move |r: f64| c.iter().rev().fold(ZERO, |acc, &a| acc * r + a);
        Trace::smooth(side, horner(c), horner(dc))
    }

    pub fn zero(side: SideId) -> Self {
        Trace::polynomial(side, &[])
    }

    pub fn sampled(side: SideId, epsilon: f64, values: Vec<C64>) -> Self {
        Trace {
            side,
            data: TraceData::Sampled { epsilon, values },
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self.data, TraceData::Smooth { .. })
    }

    /// Samples a smooth trace on the graded mesh of length `m`.
    pub fn to_sampled(&self, epsilon: f64, m: usize) -> Trace {
        match &self.data {
            TraceData::Smooth { value, .. } => Trace::sampled(
                self.side,
                epsilon,
                graded_mesh(epsilon, m).into_iter().map(|r| value(r)).collect(),
            ),
            TraceData::Sampled { .. } => self.clone(),
        }
    }

    /// Value at the vertex; sampled traces are extrapolated by the
    /// quadratic through the three innermost samples.
    pub fn value_at_zero(&self) -> C64 {
        match &self.data {
            TraceData::Smooth { value, .. } => value(0.0),
            TraceData::Sampled { epsilon, values } => {
                let m = values.len();
                if m < 3 {
                    return values.last().copied().unwrap_or(ZERO);
                }
                let r = graded_mesh(*epsilon, m);
                let x = [r[m - 3], r[m - 2], r[m - 1]];
                let y = [values[m - 3], values[m - 2], values[m - 1]];
                (0..3)
                    .map(|a| {
                        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                        y[a] * (x[b] * x[c] / ((x[a] - x[b]) * (x[a] - x[c])))
                    })
                    .sum()
            }
        }
    }

    /// `self + a0 + a1 r`.
    pub fn plus_linear(&self, a0: C64, a1: C64) -> Trace {
        match &self.data {
            TraceData::Smooth { value, derivative } => {
                let (v, d) = (value.clone(), derivative.clone());
                Trace::smooth(self.side, move |r| v(r) + a0 + a1 * r, move |r| d(r) + a1)
            }
            TraceData::Sampled { epsilon, values } => {
                let r = graded_mesh(*epsilon, values.len());
                Trace::sampled(
                    self.side,
                    *epsilon,
                    values.iter().zip(r).map(|(&z, r)| z + a0 + a1 * r).collect(),
                )
            }
        }
    }
}

/// Looks up one trace per side.
fn by_side(traces: &[Trace], n_angles: usize) -> Result<Vec<&Trace>, TangentialError> {
    let mut out: Vec<Option<&Trace>> = vec![None; 2 * n_angles];
    for t in traces {
        let slot = out
            .get_mut(t.side.flat_index())
            .ok_or(TangentialError::MismatchedDomains {
                detail: "trace side outside the configuration",
            })?;
        if slot.is_some() {
            return Err(TangentialError::DuplicateTrace { side: t.side });
        }
        *slot = Some(t);
    }
    SideId::all(n_angles)
        .map(|s| out[s.flat_index()].ok_or(TangentialError::MissingTrace { side: s }))
        .collect()
}

/// `Σ c_i Z_i` for traces on a common domain.
fn combine(parts: &[(C64, &Trace)], epsilon: f64) -> Result<TraceData, TangentialError> {
    let mesh_len = parts.iter().find_map(|(_, t)| match &t.data {
        TraceData::Sampled { values, .. } => Some(values.len()),
        _ => None,
    });
    for (_, t) in parts {
        if let TraceData::Sampled { epsilon: e, values } = &t.data {
            if (e - epsilon).abs() > 1e-12 * epsilon {
                return Err(TangentialError::MismatchedDomains {
                    detail: "trace epsilon differs from the configuration",
                });
            }
            if values.len() < MIN_SAMPLES {
                return Err(TangentialError::InsufficientSamples {
                    side: t.side,
                    got: values.len(),
                });
            }
            if Some(values.len()) != mesh_len {
                return Err(TangentialError::MismatchedDomains {
                    detail: "graded meshes of different length",
                });
            }
        }
    }
    match mesh_len {
        None => {
            let fs: Vec<(C64, TraceFn, TraceFn)> = parts
                .iter()
                .map(|(c, t)| match &t.data {
                    TraceData::Smooth { value, derivative } => (*c, value.clone(), derivative.clone()),
                    TraceData::Sampled { .. } => unreachable!(),
                })
                .collect();
            let fs2 = fs.clone();
            Ok(TraceData::Smooth {
                value: Arc::new(move |r| fs.iter().map(|(c, v, _)| c * v(r)).sum()),
                derivative: Arc::new(move |r| fs2.iter().map(|(c, _, d)| c * d(r)).sum()),
            })
        }
        Some(m) => {
            let mut acc = vec![ZERO; m];
            for (c, t) in parts {
                if let TraceData::Sampled { values, .. } = &t.to_sampled(epsilon, m).data {
                    for (a, v) in acc.iter_mut().zip(values) {
                        *a += c * v;
                    }
                }
            }
            Ok(TraceData::Sampled { epsilon, values: acc })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Consistency {
    Consistent,
    Inconsistent,
}

/// Evidence for one dependent combination `g = Z⁰_{jσ} − Σ β Z⁰_{j′σ′}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinationReport {
    pub side: SideId,
    pub g_prime_zero: C64,
    /// Tolerance applied to `|g′(0)|`.
    pub tolerance: f64,
    /// `δ_k = ε 2^{−k}`, decreasing.
    pub deltas: Vec<f64>,
    /// `F(δ_k) = ∫_{δ_k}^ε r⁻¹ |g′(r)|² dr`.
    pub partial_integrals: Vec<f64>,
    /// Least-squares slope of `F` against `ln(1/δ)` over the last four
    /// decades of `δ`.
    pub log_slope: f64,
    pub sampled: bool,
    pub verdict: Consistency,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub epsilon: f64,
    pub entries: Vec<CombinationReport>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.entries.iter().all(|e| e.verdict == Consistency::Consistent)
    }

    pub fn first_inconsistent(&self) -> Option<&CombinationReport> {
        self.entries.iter().find(|e| e.verdict == Consistency::Inconsistent)
    }
}

fn log_slope(deltas: &[f64], values: &[f64]) -> f64 {
    let Some(&last) = deltas.last() else { return 0.0 };
    let pts: Vec<(f64, f64)> = deltas
        .iter()
        .zip(values)
        .filter(|(&d, _)| d <= last * 1e4)
        .map(|(&d, &f)| (-d.ln(), f))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

fn analyse(side: SideId, g: &TraceData, epsilon: f64) -> CombinationReport {
    match g {
        TraceData::Smooth { derivative, .. } => {
            let rule = GaussLegendre::new(16);
            let mut deltas = Vec::with_capacity(SMOOTH_LEVELS);
            let mut values = Vec::with_capacity(SMOOTH_LEVELS);
            let mut acc = 0.0;
            let mut hi = epsilon.ln();
            for _ in 0..SMOOTH_LEVELS {
                let lo = hi - LN_2;
                acc += rule.integrate(lo, hi, |t| derivative(t.exp()).norm_sqr());
                deltas.push(lo.exp());
                values.push(acc);
                hi = lo;
            }
            let g0 = derivative(0.0);
            CombinationReport {
                side,
                g_prime_zero: g0,
                tolerance: TOL_CONS,
                log_slope: log_slope(&deltas, &values),
                deltas,
                partial_integrals: values,
                sampled: false,
                verdict: if g0.norm() < TOL_CONS {
                    Consistency::Consistent
                } else {
                    Consistency::Inconsistent
                },
            }
        }
        TraceData::Sampled { values, .. } => {
            let m = values.len();
            let r = graded_mesh(epsilon, m);
            let d = |i: usize| -> C64 {
                let (a, b) = if i == 0 {
                    (0, 2)
                } else if i == m - 1 {
                    (m - 3, m - 1)
                } else {
                    (i - 1, i + 1)
                };
                lagrange_derivative(&r[a..=b], &values[a..=b], r[i])
            };
            let dg: Vec<C64> = (0..m).map(d).collect();
            let g0 = lagrange_derivative(&r[m - 3..], &values[m - 3..], 0.0);
            let h = 0.25 * LN_2;
            let mut deltas = Vec::new();
            let mut partial = Vec::new();
            let mut acc = 0.0;
            for i in 1..m {
                acc += 0.5 * h * (dg[i - 1].norm_sqr() + dg[i].norm_sqr());
                if i % 4 == 0 {
                    deltas.push(r[i]);
                    partial.push(acc);
                }
            }
            let tolerance = 1e-6 * (1.0 + dg.iter().map(|z| z.norm()).fold(0.0, f64::max));
            let slope = log_slope(&deltas, &partial);
            CombinationReport {
                side,
                g_prime_zero: g0,
                tolerance,
                deltas,
                partial_integrals: partial,
                log_slope: slope,
                sampled: true,
                verdict: if g0.norm() > tolerance || slope > SLOPE_LIMIT {
                    Consistency::Inconsistent
                } else {
                    Consistency::Consistent
                },
            }
        }
    }
}

/// Derivative at `x` of the interpolating polynomial through `(xs, ys)`.
fn lagrange_derivative(xs: &[f64], ys: &[C64], x: f64) -> C64 {
    let k = xs.len();
    let mut out = ZERO;
    for a in 0..k {
        let denom: f64 = (0..k).filter(|&b| b != a).map(|b| xs[a] - xs[b]).product();
        let mut num = 0.0;
        for skip in 0..k {
            if skip == a {
                continue;
            }
            num += (0..k)
                .filter(|&b| b != a && b != skip)
                .map(|b| x - xs[b])
                .product::<f64>();
        }
        out += ys[a] * (num / denom);
    }
    out
}

/// Checks the compatibility relation for every dependent operator.
pub fn consistency_check(
    system: &TangentialSystem,
    traces: &[Trace],
    epsilon: f64,
) -> Result<ConsistencyReport, TangentialError> {
    let z = by_side(traces, system.n_angles())?;
    let mut entries = Vec::with_capacity(system.beta().len());
    for row in system.beta() {
        let mut parts = vec![(C64::new(1.0, 0.0), z[row.side.flat_index()])];
        for (&p, &b) in system.pivots().iter().zip(&row.coeffs) {
            parts.push((-b, z[p.flat_index()]));
        }
        let g = combine(&parts, epsilon)?;
        entries.push(analyse(row.side, &g, epsilon));
    }
    // every trace still has to live on the common domain
    if system.beta().is_empty() {
        let all: Vec<(C64, &Trace)> = z.iter().map(|&t| (C64::new(1.0, 0.0), t)).collect();
        combine(&all, epsilon)?;
    }
    Ok(ConsistencyReport { epsilon, entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    InS,
    NotInS,
}

/// Whether right-hand-side traces belong to the space of consistent data.
pub fn rhs_membership(
    system: &TangentialSystem,
    traces: &[Trace],
    epsilon: f64,
) -> Result<(Membership, ConsistencyReport), TangentialError> {
    let report = consistency_check(system, traces, epsilon)?;
    let m = if report.is_consistent() {
        Membership::InS
    } else {
        Membership::NotInS
    };
    Ok((m, report))
}

/// `d_{jσ}[k] = Σ_{s : target = k} ∂_r b_{jσks}(0)`.
fn coeff_derivative_sums(config: &OrbitConfig, side: SideId) -> Vec<C64> {
    let mut d = vec![ZERO; config.n_angles()];
    for t in config.side_terms(side) {
        d[t.target] += t.coeff_r_deriv0;
    }
    d
}

/// `A[(jσ), k] = Σ_{s : target = k} b_{jσks}(0)`.
fn coeff_sums(config: &OrbitConfig, side: SideId) -> Vec<C64> {
    let mut a = vec![ZERO; config.n_angles()];
    for t in config.side_terms(side) {
        a[t.target] += t.coeff0;
    }
    a
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConstantVectorCheck {
    Holds,
    Fails {
        side: SideId,
        /// Index `k` of the witness `C = e_k`.
        witness: usize,
        /// `w_{jσ}`, the coefficients of `g′(0)` in `C`.
        w: Vec<C64>,
    },
}

/// For constant `C`, `g′(0) = w_{jσ} · C` with
/// `w_{jσ} = d_{jσ} − Σ β d_{j′σ′}`; the check is exact over the basis
/// vectors.
pub fn constant_vector_consistency(config: &ValidatedConfig, system: &TangentialSystem) -> ConstantVectorCheck {
    for row in system.beta() {
        let mut w = coeff_derivative_sums(config, row.side);
        for (&p, &b) in system.pivots().iter().zip(&row.coeffs) {
            for (wk, dk) in w.iter_mut().zip(coeff_derivative_sums(config, p)) {
                *wk -= b * dk;
            }
        }
        if let Some(k) = w.iter().position(|z| z.norm() >= TOL_CONS) {
            return ConstantVectorCheck::Fails {
                side: row.side,
                witness: k,
                w,
            };
        }
    }
    ConstantVectorCheck::Holds
}

#[derive(Clone, Debug, PartialEq)]
pub enum AdmissibleSet {
    /// No `C` solves the system.
    Empty { residual: f64 },
    /// `C* + span(null_basis)`.
    Affine {
        particular: Vec<C64>,
        null_basis: Vec<Vec<C64>>,
        residual: f64,
    },
}

/// Solves `Σ_{k,s} b_{jσks}(0) C_k = −B^v_{jσ}(0)` over all sides.
/// `bv0` is indexed by [`SideId::flat_index`].
pub fn admissible_vectors(config: &ValidatedConfig, bv0: &[C64]) -> AdmissibleSet {
    let n = config.n_angles();
    assert_eq!(bv0.len(), 2 * n, "one value per side");
    let a = CMat::from_rows(&SideId::all(n).map(|s| coeff_sums(config, s)).collect::<Vec<_>>());
    let rhs: Vec<C64> = bv0.iter().map(|z| -z).collect();
    let ls = lstsq(&a, &rhs, 1e-10);
    let scale = 1.0 + vec_norm(bv0);
    if ls.residual > ADMISSIBLE_TOL * scale {
        return AdmissibleSet::Empty { residual: ls.residual };
    }
    let (null_basis, _) = null_space(&a, 1e-10);
    AdmissibleSet::Affine {
        particular: ls.x,
        null_basis,
        residual: ls.residual,
    }
}

/// Why a condition failed.
#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    /// `C = e_k` breaks the relation on `side`.
    ConstantVector { side: SideId, basis_index: usize, w: Vec<C64> },
    /// Sample `sample` of `v` (with the constant vector `c`, zero for
    /// Condition 4) breaks the relation on `side`.
    Sample {
        sample: Option<usize>,
        c: Vec<C64>,
        side: SideId,
        g_prime_zero: C64,
        log_slope: f64,
    },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::ConstantVector { side, basis_index, .. } => {
                write!(f, "constant vector C = e{} on side {side}", basis_index + 1)
            }
            Witness::Sample {
                sample,
                c,
                side,
                g_prime_zero,
                log_slope,
            } => {
                match sample {
                    Some(i) => write!(f, "v sample {}", i + 1)?,
                    None => write!(f, "v = 0")?,
                }
                write!(f, " with C = [")?;
                for (i, z) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{z}")?;
                }
                write!(f, "] on side {side}: g'(0) = {g_prime_zero}, log-slope {log_slope:.3}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConditionResult {
    /// No witness among the exhaustive constant-vector part and the
    /// supplied samples of `v`.
    HoldsOnEvidence { samples_checked: usize, samples_skipped: usize },
    Fails(Witness),
}

impl ConditionResult {
    pub fn holds(&self) -> bool {
        matches!(self, ConditionResult::HoldsOnEvidence { .. })
    }
}

fn sample_witness(sample: Option<usize>, c: Vec<C64>, report: &ConsistencyReport) -> Option<Witness> {
    report.first_inconsistent().map(|e| Witness::Sample {
        sample,
        c,
        side: e.side,
        g_prime_zero: e.g_prime_zero,
        log_slope: e.log_slope,
    })
}

/// Condition 4: the constant-vector part exactly, then each supplied trace
/// set `B^v`.
pub fn check_condition4(
    config: &ValidatedConfig,
    system: &TangentialSystem,
    v_samples: &[Vec<Trace>],
) -> Result<ConditionResult, TangentialError> {
    if let ConstantVectorCheck::Fails { side, witness, w } = constant_vector_consistency(config, system) {
        return Ok(ConditionResult::Fails(Witness::ConstantVector {
            side,
            basis_index: witness,
            w,
        }));
    }
    for (i, traces) in v_samples.iter().enumerate() {
        let report = consistency_check(system, traces, config.epsilon)?;
        if let Some(w) = sample_witness(Some(i), vec![ZERO; config.n_angles()], &report) {
            return Ok(ConditionResult::Fails(w));
        }
    }
    Ok(ConditionResult::HoldsOnEvidence {
        samples_checked: v_samples.len(),
        samples_skipped: 0,
    })
}

/// One candidate `v` for Condition 4′: its traces and, optionally, the
/// values `B^v_{jσ}(0)` (otherwise read off the traces).
#[derive(Clone, Debug)]
pub struct AdmissibleSample {
    pub traces: Vec<Trace>,
    pub bv0: Option<Vec<C64>>,
}

/// Traces of `B^v_{jσ} + B_{jσ} C` with `b(r) ≈ b(0) + r ∂_r b(0)`.
fn with_constant(config: &OrbitConfig, traces: &[&Trace], c: &[C64]) -> Vec<Trace> {
    SideId::all(config.n_angles())
        .map(|side| {
            let (mut a0, mut a1) = (ZERO, ZERO);
            for t in config.side_terms(side) {
                a0 += t.coeff0 * c[t.target];
                a1 += t.coeff_r_deriv0 * c[t.target];
            }
            traces[side.flat_index()].plus_linear(a0, a1)
        })
        .collect()
}

/// Condition 4′: for every admissible pair `(v, C)`, the combined traces
/// are consistent. `v = 0` with every `C` in the kernel is always checked.
pub fn check_condition4prime(
    config: &ValidatedConfig,
    system: &TangentialSystem,
    admissible_samples: &[AdmissibleSample],
) -> Result<ConditionResult, TangentialError> {
    let n = config.n_angles();
    let zeros: Vec<Trace> = SideId::all(n).map(Trace::zero).collect();
    let mut candidates: Vec<(Option<usize>, &[Trace], Vec<C64>)> = vec![(None, &zeros, vec![ZERO; 2 * n])];
    for (i, s) in admissible_samples.iter().enumerate() {
        let bv0 = match &s.bv0 {
            Some(b) => b.clone(),
            None => {
                let z = by_side(&s.traces, n)?;
                z.iter().map(|t| t.value_at_zero()).collect()
            }
        };
        candidates.push((Some(i), &s.traces, bv0));
    }
    let mut checked = 0;
    let mut skipped = 0;
    for (sample, traces, bv0) in candidates {
        let (particular, null_basis) = match admissible_vectors(config, &bv0) {
            AdmissibleSet::Empty { .. } => {
                skipped += 1;
                continue;
            }
            AdmissibleSet::Affine {
                particular, null_basis, ..
            } => (particular, null_basis),
        };
        let z = by_side(traces, n)?;
        // (v, C*) and, by linearity, (0, C0) for each kernel vector
        let mut pairs = vec![(z.clone(), particular)];
        let zero_refs: Vec<&Trace> = zeros.iter().collect();
        for c0 in null_basis {
            pairs.push((zero_refs.clone(), c0));
        }
        for (base, c) in pairs {
            let combined = with_constant(config, &base, &c);
            let report = consistency_check(system, &combined, config.epsilon)?;
            if let Some(w) = sample_witness(sample, c, &report) {
                return Ok(ConditionResult::Fails(w));
            }
        }
        if sample.is_some() {
            checked += 1;
        }
    }
    Ok(ConditionResult::HoldsOnEvidence {
        samples_checked: checked,
        samples_skipped: skipped,
    })
}
