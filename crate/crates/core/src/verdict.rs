//! The W² smoothness decision.
//!
//! The outcome is a pure function of a [`Certificate`], which records every
//! piece of evidence it rests on: the band eigenvalues and their
//! classification, the roots that were excluded, the tangential system and
//! the result of the consistency condition that applies to the chosen mode.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use crate::orbit::{SideId, ValidatedConfig};
use crate::spectrum::{BandQuery, BandResult, Classification};
use crate::tangential::{
    check_condition4, check_condition4prime, AdmissibleSample, ConditionResult, TangentialError, TangentialSystem,
    Trace,
};
use crate::C64;

/// A proper band eigenvalue must be `−i` up to this distance.
pub const MINUS_I_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum VerdictError {
    /// The Condition-3 branch was reached without tangential data.
    MissingEvidence,
    /// A proper band eigenvalue other than `−i`.
    BranchPrecondition { lambda: C64 },
    Tangential(TangentialError),
    Parse(String),
}

impl fmt::Display for VerdictError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerdictError::MissingEvidence => {
                write!(f, "the only band eigenvalue is the proper eigenvalue -i; tangential evidence is required")
            }
            VerdictError::BranchPrecondition { lambda } => {
                write!(f, "proper band eigenvalue {lambda} differs from -i")
            }
            VerdictError::Tangential(e) => write!(f, "{e}"),
            VerdictError::Parse(s) => write!(f, "cannot parse report: {s}"),
        }
    }
}

impl core::error::Error for VerdictError {}

impl From<TangentialError> for VerdictError {
    fn from(e: TangentialError) -> Self {
        VerdictError::Tangential(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhsMode {
    /// Right-hand sides restricted to consistent data; Condition 4 applies.
    Nonhomogeneous,
    /// Homogeneous nonlocal conditions; Condition 4′ applies.
    Homogeneous,
}

impl RhsMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RhsMode::Nonhomogeneous => "nonhomogeneous",
            RhsMode::Homogeneous => "homogeneous",
        }
    }

    pub fn parse(s: &str) -> Option<RhsMode> {
        match s {
            "nonhomogeneous" => Some(RhsMode::Nonhomogeneous),
            "homogeneous" => Some(RhsMode::Homogeneous),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConditionLabel {
    HoldsOnEvidence,
    Fails,
}

impl ConditionLabel {
    fn as_str(self) -> &'static str {
        match self {
            ConditionLabel::HoldsOnEvidence => "holds-on-evidence",
            ConditionLabel::Fails => "fails",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conclusion {
    SmoothForS,
    NotSmoothExists,
}

/// Why no decision could be made.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IndeterminateReason {
    /// A root within `δ_edge` of the open upper band edge.
    AmbiguousTopEdge(C64),
    /// A root that moved by more than `1e-6` under grid doubling.
    UnstableRoot(C64),
    /// A band root that moved by more than `1e-8` but at most `1e-6`.
    UnsettledRoot(C64),
    /// Condition 3 holds but the tangential system is independent.
    IndependentTangentialSystem,
}

impl fmt::Display for IndeterminateReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (tag, z) = match self {
            IndeterminateReason::AmbiguousTopEdge(z) => ("ambiguous-top-edge", z),
            IndeterminateReason::UnstableRoot(z) => ("unstable-root", z),
            IndeterminateReason::UnsettledRoot(z) => ("unsettled-root", z),
            IndeterminateReason::IndependentTangentialSystem => {
                return f.write_str("independent-tangential-system");
            }
        };
        write!(f, "{tag} {:?} {:?}", z.re, z.im)
    }
}

impl IndeterminateReason {
    fn parse(s: &str) -> Option<Self> {
        let mut it = s.split_whitespace();
        let tag = it.next()?;
        if tag == "independent-tangential-system" {
            return Some(IndeterminateReason::IndependentTangentialSystem);
        }
        let re: f64 = it.next()?.parse().ok()?;
        let im: f64 = it.next()?.parse().ok()?;
        let z = C64::new(re, im);
        Some(match tag {
            "ambiguous-top-edge" => IndeterminateReason::AmbiguousTopEdge(z),
            "unstable-root" => IndeterminateReason::UnstableRoot(z),
            "unsettled-root" => IndeterminateReason::UnsettledRoot(z),
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    /// No eigenvalues in the band: every generalized solution is W².
    SmoothAlways,
    /// An improper band eigenvalue: some generalized solution is not W².
    NotSmoothImproper,
    /// The band holds only the proper eigenvalue `−i`; the answer depends on
    /// the consistency condition of the chosen mode.
    ConditionalCond3 {
        rhs_mode: RhsMode,
        condition: ConditionLabel,
        conclusion: Conclusion,
    },
    Indeterminate { reasons: Vec<IndeterminateReason> },
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::SmoothAlways => "SmoothAlways",
            Outcome::NotSmoothImproper => "NotSmooth_Improper",
            Outcome::ConditionalCond3 { .. } => "Conditional_Cond3",
            Outcome::Indeterminate { .. } => "Indeterminate",
        }
    }

    /// 0 when smoothness is established, 2 when it fails, 3 when undecided.
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::SmoothAlways => 0,
            Outcome::ConditionalCond3 {
                conclusion: Conclusion::SmoothForS,
                ..
            } => 0,
            Outcome::NotSmoothImproper
            | Outcome::ConditionalCond3 {
                conclusion: Conclusion::NotSmoothExists,
                ..
            } => 2,
            Outcome::Indeterminate { .. } => 3,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        match self {
            Outcome::ConditionalCond3 {
                rhs_mode,
                condition,
                conclusion,
            } => write!(
                f,
                " mode={} condition={} conclusion={}",
                rhs_mode.as_str(),
                condition.as_str(),
                match conclusion {
                    Conclusion::SmoothForS => "SmoothForS",
                    Conclusion::NotSmoothExists => "NotSmoothExists",
                }
            ),
            _ => Ok(()),
        }
    }
}

/// Eigenvalue data the decision uses.
#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedEigenvalue {
    pub lambda0: C64,
    pub classification: Classification,
    pub stable: bool,
    pub movement: f64,
    pub edge_bottom: bool,
    pub algebraic_multiplicity: usize,
    pub geometric_multiplicity: usize,
    pub has_associated: bool,
    pub polynomial_degree: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentialSummary {
    pub rank: usize,
    pub n_operators: usize,
    pub pivots: Vec<SideId>,
    pub beta: Vec<(SideId, Vec<C64>)>,
    pub max_residual: f64,
}

impl TangentialSummary {
    pub fn from_system(system: &TangentialSystem) -> Self {
        TangentialSummary {
            rank: system.rank(),
            n_operators: 2 * system.n_angles(),
            pivots: system.pivots().to_vec(),
            beta: system.beta().iter().map(|b| (b.side, b.coeffs.clone())).collect(),
            max_residual: system.max_reconstruction_residual(),
        }
    }

    pub fn is_dependent(&self) -> bool {
        self.rank < self.n_operators
    }
}

/// Everything the outcome is derived from.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub band: BandQuery,
    pub eigenvalues: Vec<CertifiedEigenvalue>,
    pub ambiguous_top: Vec<C64>,
    pub unstable: Vec<C64>,
    pub winding_total: usize,
    pub growth_ok: bool,
    pub mode: RhsMode,
    pub tangential: Option<TangentialSummary>,
    pub condition: Option<ConditionResult>,
}

impl Certificate {
    pub fn from_band(band: &BandResult, mode: RhsMode) -> Self {
        Certificate {
            band: band.query,
            eigenvalues: band
                .records
                .iter()
                .map(|r| CertifiedEigenvalue {
                    lambda0: r.lambda0,
                    classification: r.classification,
                    stable: r.stable,
                    movement: r.root.movement,
                    edge_bottom: r.edge_bottom,
                    algebraic_multiplicity: r.algebraic_multiplicity,
                    geometric_multiplicity: r.geometric_multiplicity,
                    has_associated: r.has_associated,
                    polynomial_degree: r.polynomial.map(|p| p.degree),
                })
                .collect(),
            ambiguous_top: band.ambiguous_top.iter().map(|r| r.lambda).collect(),
            unstable: band.unstable.iter().map(|r| r.lambda).collect(),
            winding_total: band.winding_total,
            growth_ok: band.growth_ok,
            mode,
            tangential: None,
            condition: None,
        }
    }

    /// Whether the band holds exactly the proper eigenvalue `−i` and nothing
    /// that could change that.
    pub fn condition3_certified(&self) -> bool {
        !self.eigenvalues.is_empty()
            && self.ambiguous_top.is_empty()
            && self.unstable.is_empty()
            && self.eigenvalues.iter().all(|e| {
                e.stable
                    && e.classification == Classification::Proper
                    && (e.lambda0 - C64::new(0.0, -1.0)).norm() < MINUS_I_TOL
            })
    }
}

/// The decision tree. Pure in the certificate.
pub fn outcome_from_certificate(cert: &Certificate) -> Result<Outcome, VerdictError> {
    let improper_stable = cert
        .eigenvalues
        .iter()
        .any(|e| e.stable && e.classification == Classification::Improper);
    if improper_stable {
        return Ok(Outcome::NotSmoothImproper);
    }
    let mut reasons = Vec::new();
    reasons.extend(cert.ambiguous_top.iter().map(|&z| IndeterminateReason::AmbiguousTopEdge(z)));
    reasons.extend(cert.unstable.iter().map(|&z| IndeterminateReason::UnstableRoot(z)));
    for e in &cert.eigenvalues {
        if !e.stable {
            reasons.push(IndeterminateReason::UnsettledRoot(e.lambda0));
        }
    }
    if !reasons.is_empty() {
        return Ok(Outcome::Indeterminate { reasons });
    }
    if cert.eigenvalues.is_empty() {
        return Ok(Outcome::SmoothAlways);
    }
    for e in &cert.eigenvalues {
        if (e.lambda0 - C64::new(0.0, -1.0)).norm() >= MINUS_I_TOL {
            return Err(VerdictError::BranchPrecondition { lambda: e.lambda0 });
        }
    }
    let tangential = cert.tangential.as_ref().ok_or(VerdictError::MissingEvidence)?;
    if !tangential.is_dependent() {
        return Ok(Outcome::Indeterminate {
            reasons: alloc::vec![IndeterminateReason::IndependentTangentialSystem],
        });
    }
    let condition = cert.condition.as_ref().ok_or(VerdictError::MissingEvidence)?;
    let (label, conclusion) = if condition.holds() {
        (ConditionLabel::HoldsOnEvidence, Conclusion::SmoothForS)
    } else {
        (ConditionLabel::Fails, Conclusion::NotSmoothExists)
    };
    Ok(Outcome::ConditionalCond3 {
        rhs_mode: cert.mode,
        condition: label,
        conclusion,
    })
}

/// Tangential data for the Condition-3 branch: the system plus samples of
/// `v` (Condition 4) or of admissible pairs (Condition 4′).
#[derive(Clone, Debug)]
pub struct TangentialEvidence {
    pub system: TangentialSystem,
    pub v_samples: Vec<Vec<Trace>>,
    pub admissible_samples: Vec<AdmissibleSample>,
}

impl TangentialEvidence {
    pub fn new(system: TangentialSystem) -> Self {
        TangentialEvidence {
            system,
            v_samples: Vec::new(),
            admissible_samples: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub certificate: Certificate,
}

impl Verdict {
    /// Re-runs the decision on the certificate.
    pub fn rederive(&self) -> Result<Outcome, VerdictError> {
        outcome_from_certificate(&self.certificate)
    }
}

pub fn decide(
    config: &ValidatedConfig,
    band: &BandResult,
    evidence: Option<&TangentialEvidence>,
    mode: RhsMode,
) -> Result<Verdict, VerdictError> {
    let mut cert = Certificate::from_band(band, mode);
    if let Some(ev) = evidence {
        cert.tangential = Some(TangentialSummary::from_system(&ev.system));
    }
    match outcome_from_certificate(&cert) {
        Err(VerdictError::MissingEvidence) if evidence.is_some() => {
            let ev = evidence.ok_or(VerdictError::MissingEvidence)?;
            let result = match mode {
                RhsMode::Nonhomogeneous => check_condition4(config, &ev.system, &ev.v_samples)?,
                RhsMode::Homogeneous => check_condition4prime(config, &ev.system, &ev.admissible_samples)?,
            };
            cert.condition = Some(result);
        }
        Err(e) => return Err(e),
        Ok(_) => {}
    }
    let outcome = outcome_from_certificate(&cert)?;
    Ok(Verdict {
        outcome,
        certificate: cert,
    })
}

fn clause(outcome: &Outcome) -> &'static str {
    match outcome {
        Outcome::SmoothAlways => "no eigenvalues of the pencil in the band: every generalized solution belongs to W2",
        Outcome::NotSmoothImproper => {
            "the band contains an improper eigenvalue: some generalized solution does not belong to W2"
        }
        Outcome::ConditionalCond3 {
            conclusion: Conclusion::SmoothForS,
            ..
        } => "the band holds only the proper eigenvalue -i and the consistency condition holds on the evidence supplied: generalized solutions belong to W2",
        Outcome::ConditionalCond3 { .. } => {
            "the band holds only the proper eigenvalue -i and the consistency condition fails: some generalized solution does not belong to W2"
        }
        Outcome::Indeterminate { .. } => "the evidence does not settle the decision",
    }
}

/// Plain-text report. The first line carries the outcome and is read back
/// by [`parse`].
pub fn explain(verdict: &Verdict) -> String {
    let c = &verdict.certificate;
    let mut s = String::new();
    let _ = writeln!(s, "outcome: {}", verdict.outcome);
    if let Outcome::Indeterminate { reasons } = &verdict.outcome {
        for r in reasons {
            let _ = writeln!(s, "reason: {r}");
        }
    }
    let _ = writeln!(s, "clause: {}", clause(&verdict.outcome));
    let _ = writeln!(
        s,
        "band: {} <= Im lambda < {}, |Re lambda| <= {}, n = {}",
        c.band.c1, c.band.c2, c.band.re_half_width, c.band.n
    );
    let _ = writeln!(s, "zeros in search rectangle (winding): {}", c.winding_total);
    if !c.growth_ok {
        let _ = writeln!(s, "warning: log|det| does not grow beyond |Re lambda| = {}", c.band.re_half_width);
    }
    for e in &c.eigenvalues {
        let _ = write!(
            s,
            "eigenvalue: {} {} (algebraic {}, geometric {}",
            fmt_c(e.lambda0),
            e.classification,
            e.algebraic_multiplicity,
            e.geometric_multiplicity
        );
        if e.has_associated {
            s.push_str(", associated vector");
        }
        if let Some(m) = e.polynomial_degree {
            let _ = write!(s, ", polynomial degree {m}");
        }
        if e.edge_bottom {
            s.push_str(", on lower band edge");
        }
        if !e.stable {
            let _ = write!(s, ", moved {:e} under refinement", e.movement);
        }
        s.push_str(")\n");
    }
    for z in &c.ambiguous_top {
        let _ = writeln!(s, "excluded (upper edge): {}", fmt_c(*z));
    }
    for z in &c.unstable {
        let _ = writeln!(s, "excluded (unstable): {}", fmt_c(*z));
    }
    if let Some(t) = &c.tangential {
        let _ = writeln!(s, "tangential system: rank {} of {}", t.rank, t.n_operators);
        for (side, b) in &t.beta {
            let _ = write!(s, "  {side} =");
            for (p, z) in t.pivots.iter().zip(b) {
                let _ = write!(s, " ({}) {p}", fmt_c(*z));
            }
            s.push('\n');
        }
    }
    if let Some(cond) = &c.condition {
        let which = match c.mode {
            RhsMode::Nonhomogeneous => "Condition 4",
            RhsMode::Homogeneous => "Condition 4'",
        };
        match cond {
            ConditionResult::HoldsOnEvidence {
                samples_checked,
                samples_skipped,
            } => {
                let _ = writeln!(
                    s,
                    "{which}: holds-on-evidence ({samples_checked} samples checked, {samples_skipped} not admissible)"
                );
            }
            ConditionResult::Fails(w) => {
                let _ = writeln!(s, "{which}: fails, witness {w}");
            }
        }
    }
    s
}

fn fmt_c(z: C64) -> String {
    format!("{:.10}{:+.10}i", z.re, z.im)
}

/// Recovers the outcome from an [`explain`] report.
pub fn parse(report: &str) -> Result<Outcome, VerdictError> {
    let err = |m: &str| VerdictError::Parse(m.to_string());
    let first = report
        .lines()
        .find_map(|l| l.strip_prefix("outcome: "))
        .ok_or_else(|| err("no outcome line"))?;
    let mut words = first.split_whitespace();
    let name = words.next().ok_or_else(|| err("empty outcome"))?;
    match name {
        "SmoothAlways" => Ok(Outcome::SmoothAlways),
        "NotSmooth_Improper" => Ok(Outcome::NotSmoothImproper),
        "Indeterminate" => {
            let reasons = report
                .lines()
                .filter_map(|l| l.strip_prefix("reason: "))
                .map(|r| IndeterminateReason::parse(r).ok_or_else(|| err(r)))
                .collect::<Result<_, _>>()?;
            Ok(Outcome::Indeterminate { reasons })
        }
        "Conditional_Cond3" => {
            let mut mode = None;
            let mut condition = None;
            let mut conclusion = None;
            for w in words {
                match w.split_once('=') {
                    Some(("mode", v)) => mode = RhsMode::parse(v),
                    Some(("condition", "holds-on-evidence")) => condition = Some(ConditionLabel::HoldsOnEvidence),
                    Some(("condition", "fails")) => condition = Some(ConditionLabel::Fails),
                    Some(("conclusion", "SmoothForS")) => conclusion = Some(Conclusion::SmoothForS),
                    Some(("conclusion", "NotSmoothExists")) => conclusion = Some(Conclusion::NotSmoothExists),
                    _ => return Err(err(w)),
                }
            }
            Ok(Outcome::ConditionalCond3 {
                rhs_mode: mode.ok_or_else(|| err("mode"))?,
                condition: condition.ok_or_else(|| err("condition"))?,
                conclusion: conclusion.ok_or_else(|| err("conclusion"))?,
            })
        }
        other => Err(err(other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cert(eigs: Vec<CertifiedEigenvalue>) -> Certificate {
        Certificate {
            band: BandQuery::default(),
            eigenvalues: eigs,
            ambiguous_top: vec![],
            unstable: vec![],
            winding_total: 0,
            growth_ok: true,
            mode: RhsMode::Homogeneous,
            tangential: None,
            condition: None,
        }
    }

    fn eig(lambda0: C64, classification: Classification) -> CertifiedEigenvalue {
        CertifiedEigenvalue {
            lambda0,
            classification,
            stable: true,
            movement: 0.0,
            edge_bottom: false,
            algebraic_multiplicity: 1,
            geometric_multiplicity: 1,
            has_associated: false,
            polynomial_degree: None,
        }
    }

    #[test]
    fn empty_band_is_smooth() {
        assert_eq!(outcome_from_certificate(&cert(vec![])).unwrap(), Outcome::SmoothAlways);
    }

    #[test]
    fn improper_dominates() {
        let mut c = cert(vec![eig(C64::new(0.0, -0.5), Classification::Improper)]);
        c.unstable.push(C64::new(3.0, -0.2));
        c.ambiguous_top.push(C64::new(0.0, 0.0));
        assert_eq!(outcome_from_certificate(&c).unwrap(), Outcome::NotSmoothImproper);
    }

    #[test]
    fn condition3_needs_evidence() {
        let c = cert(vec![eig(C64::new(0.0, -1.0), Classification::Proper)]);
        assert_eq!(outcome_from_certificate(&c), Err(VerdictError::MissingEvidence));
        assert!(c.condition3_certified());
    }

    #[test]
    fn unstable_root_blocks_smooth() {
        let mut c = cert(vec![]);
        c.unstable.push(C64::new(1.0, -0.3));
        match outcome_from_certificate(&c).unwrap() {
            Outcome::Indeterminate { reasons } => {
                assert_eq!(reasons, vec![IndeterminateReason::UnstableRoot(C64::new(1.0, -0.3))])
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn report_round_trip() {
        let outcomes = [
            Outcome::SmoothAlways,
            Outcome::NotSmoothImproper,
            Outcome::ConditionalCond3 {
                rhs_mode: RhsMode::Nonhomogeneous,
                condition: ConditionLabel::Fails,
                conclusion: Conclusion::NotSmoothExists,
            },
            Outcome::Indeterminate {
                reasons: vec![
                    IndeterminateReason::AmbiguousTopEdge(C64::new(0.1, -1e-10)),
                    IndeterminateReason::IndependentTangentialSystem,
                ],
            },
        ];
        for o in outcomes {
            let v = Verdict {
                outcome: o.clone(),
                certificate: cert(vec![]),
            };
            assert_eq!(parse(&explain(&v)).unwrap(), o);
        }
    }
}
