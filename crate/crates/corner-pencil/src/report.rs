//! JSON documents emitted by the command-line tool. Objects are built as
//! `serde_json::Value`, whose maps keep keys sorted.

use corner_pencil_core::spectrum::LocatedRoot;
use corner_pencil_core::tangential::{
    AdmissibleSet, CombinationReport, Consistency, ConsistencyReport, ConstantVectorCheck, Membership, Witness,
};
use corner_pencil_core::verdict::{
    Certificate, ConditionLabel, IndeterminateReason, TangentialSummary, Verdict,
};
use corner_pencil_core::verify::{Corroboration, Growth, SobolevProbe};
use corner_pencil_core::{
    BandQuery, BandResult, EigenvalueRecord, Outcome, SideId, TangentialSystem, ValidatedConfig, C64,
};
use corner_pencil_core::tangential::ConditionResult;
use serde_json::{json, Value};

use crate::config::SCHEMA_VERSION;

pub fn c(z: C64) -> Value {
    json!([z.re, z.im])
}

fn cs(v: &[C64]) -> Value {
    Value::Array(v.iter().map(|&z| c(z)).collect())
}

fn side(s: SideId) -> Value {
    json!(s.to_string())
}

/// `f64::INFINITY` and NaN have no JSON form.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

/// Adds the schema version to a top-level object.
pub fn document(mut v: Value) -> Value {
    v["schema_version"] = json!(SCHEMA_VERSION);
    v
}

pub fn config_summary(config: &ValidatedConfig) -> Value {
    let sides: Vec<Value> = SideId::all(config.n_angles())
        .map(|s| {
            json!({
                "side": side(s),
                "terms": config.side_terms(s).len(),
                "images": config.side_terms(s).iter().skip(1).map(|t| num(config.image_angle(s, t))).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "status": "valid",
        "n": config.n_angles(),
        "angles": config.angles,
        "epsilon": config.epsilon,
        "real_coefficients": config.has_real_coefficients(),
        "sides": sides,
    })
}

pub fn band_query(q: &BandQuery) -> Value {
    json!({
        "c1": q.c1,
        "c2": q.c2,
        "re_range": q.re_half_width,
        "n": q.n,
        "tol_root": q.tol_root,
        "delta_edge": q.delta_edge,
    })
}

pub fn located_root(r: &LocatedRoot) -> Value {
    json!({
        "lambda": c(r.lambda),
        "lambda_refined": c(r.lambda_fine),
        "movement": num(r.movement),
        "multiplicity": r.multiplicity,
    })
}

pub fn eigenvalue_record(r: &EigenvalueRecord) -> Value {
    json!({
        "lambda": c(r.lambda0),
        "classification": r.classification.to_string(),
        "algebraic_multiplicity": r.algebraic_multiplicity,
        "geometric_multiplicity": r.geometric_multiplicity,
        "multiplicity_discrepancy": r.multiplicity_discrepancy(),
        "has_associated": r.has_associated,
        "polynomial_degree": r.polynomial.map(|p| p.degree),
        "residuals": r.residuals,
        "stable": r.stable,
        "movement": num(r.root.movement),
        "edge_bottom": r.edge_bottom,
    })
}

pub fn corroboration(c_: &Corroboration) -> Value {
    json!({
        "lambda": c(c_.lambda0),
        "member": c_.member + 1,
        "pde_residual": num(c_.pde),
        "bc_residual": num(c_.bc),
        "passed": c_.passed(),
    })
}

pub fn band(b: &BandResult, checks: &[Corroboration]) -> Value {
    json!({
        "band": band_query(&b.query),
        "eigenvalues": b.records.iter().map(eigenvalue_record).collect::<Vec<_>>(),
        "ambiguous_top": b.ambiguous_top.iter().map(located_root).collect::<Vec<_>>(),
        "unstable": b.unstable.iter().map(located_root).collect::<Vec<_>>(),
        "outside": b.outside.iter().map(located_root).collect::<Vec<_>>(),
        "winding_total": b.winding_total,
        "growth_ok": b.growth_ok,
        "corroboration": checks.iter().map(corroboration).collect::<Vec<_>>(),
    })
}

pub fn tangential(sys: &TangentialSystem) -> Value {
    let n = sys.n_angles();
    let operators: serde_json::Map<String, Value> = SideId::all(n)
        .map(|s| {
            let rows: Vec<Value> = sys.operator(s).iter().map(|t| json!([c(t[0]), c(t[1])])).collect();
            (s.to_string(), Value::Array(rows))
        })
        .collect();
    let beta: Vec<Value> = sys
        .beta()
        .iter()
        .map(|b| {
            json!({
                "side": side(b.side),
                "coeffs": cs(&b.coeffs),
                "residual": b.residual,
                "near_threshold": b.near_threshold,
            })
        })
        .collect();
    json!({
        "rank": sys.rank(),
        "n_operators": 2 * n,
        "dependent": sys.is_dependent(),
        "pivots": sys.pivots().iter().map(|&s| side(s)).collect::<Vec<_>>(),
        "operators": operators,
        "beta": beta,
        "max_residual": sys.max_reconstruction_residual(),
    })
}

fn consistency_word(v: Consistency) -> &'static str {
    match v {
        Consistency::Consistent => "consistent",
        Consistency::Inconsistent => "inconsistent",
    }
}

pub fn combination(e: &CombinationReport) -> Value {
    json!({
        "side": side(e.side),
        "g_prime_zero": c(e.g_prime_zero),
        "tolerance": e.tolerance,
        "deltas": e.deltas,
        "partial_integrals": e.partial_integrals.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "log_slope": num(e.log_slope),
        "sampled": e.sampled,
        "verdict": consistency_word(e.verdict),
    })
}

pub fn consistency(r: &ConsistencyReport, m: Membership) -> Value {
    json!({
        "epsilon": r.epsilon,
        "entries": r.entries.iter().map(combination).collect::<Vec<_>>(),
        "consistent": r.is_consistent(),
        "membership": match m {
            Membership::InS => "InS",
            Membership::NotInS => "NotInS",
        },
    })
}

pub fn constant_vector(check: &ConstantVectorCheck) -> Value {
    match check {
        ConstantVectorCheck::Holds => json!({ "holds": true }),
        ConstantVectorCheck::Fails { side: s, witness, w } => json!({
            "holds": false,
            "side": side(*s),
            "witness": witness + 1,
            "w": cs(w),
        }),
    }
}

pub fn admissible(set: &AdmissibleSet) -> Value {
    match set {
        AdmissibleSet::Empty { residual } => json!({ "empty": true, "residual": residual }),
        AdmissibleSet::Affine {
            particular,
            null_basis,
            residual,
        } => json!({
            "empty": false,
            "particular": cs(particular),
            "null_basis": null_basis.iter().map(|v| cs(v)).collect::<Vec<_>>(),
            "residual": residual,
        }),
    }
}

fn witness(w: &Witness) -> Value {
    let mut v = match w {
        Witness::ConstantVector {
            side: s,
            basis_index,
            w: coeffs,
        } => json!({
            "kind": "constant-vector",
            "side": side(*s),
            "basis_index": basis_index + 1,
            "w": cs(coeffs),
        }),
        Witness::Sample {
            sample,
            c: cv,
            side: s,
            g_prime_zero,
            log_slope,
        } => json!({
            "kind": "sample",
            "sample": sample.map(|i| i + 1),
            "c": cs(cv),
            "side": side(*s),
            "g_prime_zero": c(*g_prime_zero),
            "log_slope": num(*log_slope),
        }),
    };
    v["text"] = json!(w.to_string());
    v
}

fn condition(r: &ConditionResult) -> Value {
    match r {
        ConditionResult::HoldsOnEvidence {
            samples_checked,
            samples_skipped,
        } => json!({
            "result": "holds-on-evidence",
            "samples_checked": samples_checked,
            "samples_skipped": samples_skipped,
        }),
        ConditionResult::Fails(w) => json!({ "result": "fails", "witness": witness(w) }),
    }
}

fn reason(r: &IndeterminateReason) -> Value {
    let (tag, z) = match r {
        IndeterminateReason::AmbiguousTopEdge(z) => ("ambiguous-top-edge", Some(z)),
        IndeterminateReason::UnstableRoot(z) => ("unstable-root", Some(z)),
        IndeterminateReason::UnsettledRoot(z) => ("unsettled-root", Some(z)),
        IndeterminateReason::IndependentTangentialSystem => ("independent-tangential-system", None),
    };
    json!({ "reason": tag, "lambda": z.map(|&z| c(z)) })
}

pub fn outcome(o: &Outcome) -> Value {
    let mut v = json!({ "name": o.name(), "exit_code": o.exit_code() });
    match o {
        Outcome::ConditionalCond3 {
            rhs_mode,
            condition,
            conclusion,
        } => {
            v["rhs_mode"] = json!(rhs_mode.as_str());
            v["condition"] = json!(match condition {
                ConditionLabel::HoldsOnEvidence => "holds-on-evidence",
                ConditionLabel::Fails => "fails",
            });
            v["conclusion"] = json!(format!("{conclusion:?}"));
        }
        Outcome::Indeterminate { reasons } => {
            v["reasons"] = Value::Array(reasons.iter().map(reason).collect());
        }
        _ => {}
    }
    v
}

fn tangential_summary(t: &TangentialSummary) -> Value {
    json!({
        "rank": t.rank,
        "n_operators": t.n_operators,
        "pivots": t.pivots.iter().map(|&s| side(s)).collect::<Vec<_>>(),
        "beta": t.beta.iter().map(|(s, b)| json!({ "side": side(*s), "coeffs": cs(b) })).collect::<Vec<_>>(),
        "max_residual": t.max_residual,
    })
}

pub fn certificate(cert: &Certificate) -> Value {
    let eigenvalues: Vec<Value> = cert
        .eigenvalues
        .iter()
        .map(|e| {
            json!({
                "lambda": c(e.lambda0),
                "classification": e.classification.to_string(),
                "stable": e.stable,
                "movement": num(e.movement),
                "edge_bottom": e.edge_bottom,
                "algebraic_multiplicity": e.algebraic_multiplicity,
                "geometric_multiplicity": e.geometric_multiplicity,
                "has_associated": e.has_associated,
                "polynomial_degree": e.polynomial_degree,
            })
        })
        .collect();
    json!({
        "band": band_query(&cert.band),
        "eigenvalues": eigenvalues,
        "ambiguous_top": cs(&cert.ambiguous_top),
        "unstable": cs(&cert.unstable),
        "winding_total": cert.winding_total,
        "growth_ok": cert.growth_ok,
        "mode": cert.mode.as_str(),
        "condition3_certified": cert.condition3_certified(),
        "tangential": cert.tangential.as_ref().map(tangential_summary),
        "condition": cert.condition.as_ref().map(condition),
    })
}

pub fn verdict(v: &Verdict, checks: &[Corroboration]) -> Value {
    json!({
        "outcome": outcome(&v.outcome),
        "certificate": certificate(&v.certificate),
        "corroboration": checks.iter().map(corroboration).collect::<Vec<_>>(),
        "report": corner_pencil_core::verdict::explain(v),
    })
}

fn growth(g: Growth) -> &'static str {
    match g {
        Growth::Convergent => "convergent",
        Growth::Logarithmic => "logarithmic",
        Growth::Power => "power",
    }
}

pub fn probe(p: &SobolevProbe) -> Value {
    json!({
        "order": p.order,
        "deltas": p.deltas,
        "values": p.values.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "ratios": p.ratios().into_iter().map(num).collect::<Vec<_>>(),
        "exponent": num(p.exponent),
        "growth": growth(p.growth),
    })
}
