mod common;

use common::{c, dirichlet, random_config};
use corner_pencil_core::linalg::{CMat, Svd};
use corner_pencil_core::orbit::{validate, ConfigError};
use corner_pencil_core::tangential::{
    admissible_vectors, check_condition4, check_condition4prime, consistency_check, constant_vector_consistency,
    rhs_membership, tangential_system, AdmissibleSample, AdmissibleSet, Consistency, ConditionResult,
    ConstantVectorCheck, Membership, TangentialError, Witness,
};
use corner_pencil_core::{NonlocalTerm, OrbitConfig, SideId, Sigma, Trace, ValidatedConfig, C64};
use rand::rngs::StdRng;
use rand::SeedableRng;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

const S11: SideId = SideId { angle: 0, sigma: Sigma::One };
const S12: SideId = SideId { angle: 0, sigma: Sigma::Two };

fn half_plane() -> ValidatedConfig {
    dirichlet(&[PI / 2.0])
}

fn poly(side: SideId, coeffs: &[f64]) -> Trace {
    let c: Vec<C64> = coeffs.iter().map(|&x| C64::new(x, 0.0)).collect();
    Trace::polynomial(side, &c)
}

/// `d/dr Σ b U_k(χ R(ω) r τ)` at `r = 0` for `U_k(y) = y_l` and every other
/// `U` zero, evaluated on the linear monomials themselves.
fn chain_rule_row(cfg: &OrbitConfig, side: SideId, k: usize, l: usize) -> C64 {
    let theta = cfg.side_angle(side);
    let h = 1e-3;
    let b_u = |r: f64| -> C64 {
        cfg.side_terms(side)
            .iter()
            .filter(|t| t.target == k)
            .map(|t| {
                let phi = theta + t.rotation;
                let y = [t.homothety * r * phi.cos(), t.homothety * r * phi.sin()];
                t.coeff0 * y[l]
            })
            .sum()
    };
    (b_u(h) - b_u(0.0)) / h
}

#[test]
fn operators_match_chain_rule_on_monomials() {
    let mut configs = vec![validate(
        OrbitConfig::dirichlet(&[PI / 2.0])
            .with_term(S11, NonlocalTerm::new(0, PI / 2.0, 0.5, c(-0.5, 0.0))),
    )
    .unwrap()];
    let mut rng = StdRng::seed_from_u64(9);
    configs.extend((0..10).map(|_| random_config(&mut rng)));
    for cfg in configs {
        let sys = tangential_system(&cfg);
        for side in SideId::all(cfg.n_angles()) {
            for k in 0..cfg.n_angles() {
                for l in 0..2 {
                    let want = chain_rule_row(&cfg, side, k, l);
                    let got = sys.operator(side)[k][l];
                    assert!((got - want).norm() < 1e-10, "{side} k={k} l={l}: {got} vs {want}");
                }
            }
        }
    }
    // the worked example: τ₁₁ = (0, −1), R(π/2)τ₁₁ = (1, 0)
    let cfg = validate(
        OrbitConfig::dirichlet(&[PI / 2.0])
            .with_term(S11, NonlocalTerm::new(0, PI / 2.0, 0.5, c(-0.5, 0.0))),
    )
    .unwrap();
    let t = tangential_system(&cfg).operator(S11)[0];
    assert!((t[0] - c(-0.25, 0.0)).norm() < 1e-15);
    assert!((t[1] - c(-1.0, 0.0)).norm() < 1e-15);
}

#[test]
fn half_plane_and_quarter_plane_systems() {
    let sys = tangential_system(&half_plane());
    assert_eq!(sys.pivots(), &[S11]);
    assert_eq!(sys.beta().len(), 1);
    let row = sys.beta_for(S12).unwrap();
    assert!((row.coeffs[0] - c(-1.0, 0.0)).norm() < 1e-14);
    assert!(row.residual < 1e-12);

    let sys = tangential_system(&dirichlet(&[PI / 4.0]));
    assert_eq!(sys.rank(), 2);
    assert!(sys.beta().is_empty());
    assert!(!sys.is_dependent());
}

#[test]
fn rank_matches_singular_values() {
    let mut rng = StdRng::seed_from_u64(31);
    for _ in 0..50 {
        let cfg = random_config(&mut rng);
        let sys = tangential_system(&cfg);
        let rows: Vec<Vec<C64>> = SideId::all(cfg.n_angles()).map(|s| sys.flattened(s)).collect();
        let svd = Svd::new(&CMat::from_rows(&rows));
        let s = &svd.s;
        let rank = s.iter().filter(|&&x| x > 1e-10 * s[0]).count();
        assert_eq!(sys.rank(), rank);
        assert!(sys.max_reconstruction_residual() < 1e-12);
    }
}

#[test]
fn consistency_closed_forms() {
    let sys = tangential_system(&half_plane());
    let eps = 1.0;

    let rep = consistency_check(&sys, &[poly(S11, &[0.0, 1.0]), poly(S12, &[0.0, 1.0])], eps).unwrap();
    let e = &rep.entries[0];
    assert_eq!(e.verdict, Consistency::Inconsistent);
    assert!((e.g_prime_zero - c(2.0, 0.0)).norm() < 1e-15);
    assert!((e.log_slope - 4.0).abs() < 0.2);
    for (&d, &f) in e.deltas.iter().zip(&e.partial_integrals) {
        assert!((f - 4.0 * (eps / d).ln()).abs() < 1e-8 * (1.0 + f));
    }

    let rep = consistency_check(&sys, &[poly(S11, &[0.0, 1.0]), poly(S12, &[0.0, -1.0, 1.0])], eps).unwrap();
    let e = &rep.entries[0];
    assert_eq!(e.verdict, Consistency::Consistent);
    let last = *e.partial_integrals.last().unwrap();
    assert!((last - 2.0 * eps * eps).abs() < 0.01 * 2.0 * eps * eps);

    let rep = consistency_check(&sys, &[Trace::zero(S11), Trace::zero(S12)], eps).unwrap();
    assert!(rep.is_consistent());
    assert!(rep.entries[0].partial_integrals.iter().all(|&f| f == 0.0));
}

#[test]
fn smooth_and_sampled_pathways_agree() {
    let sys = tangential_system(&half_plane());
    let cases: [(&[f64], &[f64]); 4] = [
        (&[0.0, 1.0], &[0.0, 1.0]),
        (&[0.0, 1.0], &[0.0, -1.0, 1.0]),
        (&[0.3, 0.0, 2.0], &[-0.3, 0.0, 1.0]),
        (&[1.0, -2.0], &[0.5, 1.0, 4.0]),
    ];
    for (a, b) in cases {
        let smooth = [poly(S11, a), poly(S12, b)];
        let sampled: Vec<Trace> = smooth.iter().map(|t| t.to_sampled(1.0, 160)).collect();
        let v1 = consistency_check(&sys, &smooth, 1.0).unwrap().entries[0].verdict;
        let v2 = consistency_check(&sys, &sampled, 1.0).unwrap().entries[0].verdict;
        assert_eq!(v1, v2, "{a:?} {b:?}");
    }
}

#[test]
fn consistency_errors() {
    let sys = tangential_system(&half_plane());
    let short = Trace::sampled(S11, 1.0, vec![C64::new(0.0, 0.0); 8]);
    assert!(matches!(
        consistency_check(&sys, &[short, poly(S12, &[1.0])], 1.0),
        Err(TangentialError::InsufficientSamples { .. })
    ));
    let a = Trace::sampled(S11, 1.0, vec![C64::new(0.0, 0.0); 40]);
    let b = Trace::sampled(S12, 0.5, vec![C64::new(0.0, 0.0); 40]);
    assert!(matches!(
        consistency_check(&sys, &[a, b], 1.0),
        Err(TangentialError::MismatchedDomains { .. })
    ));
    assert!(matches!(
        consistency_check(&sys, &[poly(S11, &[1.0])], 1.0),
        Err(TangentialError::MissingTrace { .. })
    ));
}

#[test]
fn right_hand_side_membership() {
    let sys = tangential_system(&half_plane());
    let (m, _) = rhs_membership(&sys, &[Trace::zero(S11), Trace::zero(S12)], 1.0).unwrap();
    assert_eq!(m, Membership::InS);
    let (m, _) = rhs_membership(&sys, &[poly(S11, &[0.0, 1.0]), poly(S12, &[0.0, 1.0])], 1.0).unwrap();
    assert_eq!(m, Membership::NotInS);
    let sys = tangential_system(&dirichlet(&[PI / 4.0]));
    let (m, rep) = rhs_membership(&sys, &[poly(S11, &[0.0, 1.0]), poly(S12, &[0.0, 5.0])], 1.0).unwrap();
    assert_eq!(m, Membership::InS);
    assert!(rep.entries.is_empty());
}

/// Half-plane Dirichlet plus a zero-valued term on `γ₁₂` whose coefficient
/// has unit radial derivative.
fn half_plane_with_slope() -> ValidatedConfig {
    validate(
        OrbitConfig::dirichlet(&[PI / 2.0])
            .with_term(S12, NonlocalTerm::new(0, -PI / 4.0, 1.0, c(0.0, 0.0)).with_r_deriv(c(1.0, 0.0))),
    )
    .unwrap()
}

#[test]
fn constant_vector_check() {
    let cfg = half_plane();
    assert_eq!(constant_vector_consistency(&cfg, &tangential_system(&cfg)), ConstantVectorCheck::Holds);

    let cfg = half_plane_with_slope();
    match constant_vector_consistency(&cfg, &tangential_system(&cfg)) {
        ConstantVectorCheck::Fails { side, witness, w } => {
            assert_eq!(side, S12);
            assert_eq!(witness, 0);
            assert!((w[0] - c(1.0, 0.0)).norm() < 1e-15);
        }
        other => panic!("{other:?}"),
    }

    // the identity coefficient is identically one
    let bad = OrbitConfig::dirichlet(&[PI / 2.0]);
    let mut bad = bad;
    bad.terms[0][1][0] = NonlocalTerm::identity(0).with_r_deriv(c(1.0, 0.0));
    assert!(matches!(validate(bad), Err(ConfigError::MissingIdentityTerm { .. })));

    let cfg = validate(
        OrbitConfig::dirichlet(&[PI / 4.0])
            .with_term(S12, NonlocalTerm::new(0, -PI / 4.0, 0.5, c(0.0, 0.0)).with_r_deriv(c(3.0, 0.0))),
    )
    .unwrap();
    assert_eq!(constant_vector_consistency(&cfg, &tangential_system(&cfg)), ConstantVectorCheck::Holds);
}

#[test]
fn admissible_sets() {
    let cfg = half_plane();
    let zero = [C64::new(0.0, 0.0); 2];
    match admissible_vectors(&cfg, &zero) {
        AdmissibleSet::Affine {
            particular, null_basis, ..
        } => {
            assert!(particular[0].norm() < 1e-15);
            assert!(null_basis.is_empty());
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        admissible_vectors(&cfg, &[c(1.0, 0.0), c(0.0, 0.0)]),
        AdmissibleSet::Empty { .. }
    ));

    let cancelling = validate(
        OrbitConfig::dirichlet(&[PI / 2.0])
            .with_term(S11, NonlocalTerm::new(0, PI / 2.0, 0.5, c(-1.0, 0.0)))
            .with_term(S12, NonlocalTerm::new(0, -PI / 2.0, 0.5, c(-1.0, 0.0))),
    )
    .unwrap();
    match admissible_vectors(&cancelling, &zero) {
        AdmissibleSet::Affine { null_basis, .. } => assert_eq!(null_basis.len(), 1),
        other => panic!("{other:?}"),
    }
}

/// Every side coefficient sums to zero at the vertex and both tangential
/// operators vanish; the coefficient of `γ₁₂` has a radial slope.
fn condition4prime_failure() -> ValidatedConfig {
    let d = c(1.0, 0.0);
    validate(
        OrbitConfig::dirichlet(&[PI / 2.0])
            .with_term(S12, NonlocalTerm::new(0, -PI / 4.0, 1.0 / (2.0 * SQRT_2), c(-2.0, 0.0)).with_r_deriv(d))
            .with_term(S12, NonlocalTerm::new(0, -3.0 * PI / 4.0, FRAC_1_SQRT_2, c(1.0, 0.0)))
            .with_term(S11, NonlocalTerm::new(0, PI / 4.0, 1.0 / (2.0 * SQRT_2), c(-2.0, 0.0)))
            .with_term(S11, NonlocalTerm::new(0, 3.0 * PI / 4.0, FRAC_1_SQRT_2, c(1.0, 0.0))),
    )
    .unwrap()
}

#[test]
fn condition4_examples() {
    let cfg = half_plane();
    let sys = tangential_system(&cfg);
    assert!(check_condition4(&cfg, &sys, &[]).unwrap().holds());
    let v = vec![poly(S11, &[0.0, 1.0]), poly(S12, &[0.0, 1.0])];
    match check_condition4(&cfg, &sys, &[v]).unwrap() {
        ConditionResult::Fails(Witness::Sample { sample, side, .. }) => {
            assert_eq!(sample, Some(0));
            assert_eq!(side, S12);
        }
        other => panic!("{other:?}"),
    }
    let cfg = half_plane_with_slope();
    let sys = tangential_system(&cfg);
    assert!(matches!(
        check_condition4(&cfg, &sys, &[]).unwrap(),
        ConditionResult::Fails(Witness::ConstantVector { basis_index: 0, .. })
    ));
}

#[test]
fn condition4prime_examples() {
    let cfg = half_plane();
    let sys = tangential_system(&cfg);
    assert!(check_condition4prime(&cfg, &sys, &[]).unwrap().holds());
    // not admissible, skipped
    let s = AdmissibleSample {
        traces: vec![poly(S11, &[1.0, 1.0]), poly(S12, &[0.0, 1.0])],
        bv0: None,
    };
    assert_eq!(
        check_condition4prime(&cfg, &sys, &[s]).unwrap(),
        ConditionResult::HoldsOnEvidence {
            samples_checked: 0,
            samples_skipped: 1
        }
    );

    let cfg = condition4prime_failure();
    let sys = tangential_system(&cfg);
    assert_eq!(sys.rank(), 0);
    match check_condition4prime(&cfg, &sys, &[]).unwrap() {
        ConditionResult::Fails(Witness::Sample { sample, c: w, side, g_prime_zero, .. }) => {
            assert_eq!(sample, None);
            assert_eq!(side, S12);
            assert!((w[0].norm() - 1.0).abs() < 1e-12);
            assert!((g_prime_zero.norm() - 1.0).abs() < 1e-12);
        }
        other => panic!("{other:?}"),
    }
}
