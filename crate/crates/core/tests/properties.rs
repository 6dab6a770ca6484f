mod common;

use common::{c, random_config};
use corner_pencil_core::chebyshev::ChebGrid;
use corner_pencil_core::linalg::{lstsq, CMat, Svd};
use corner_pencil_core::orbit::{side_tangent, transform_matrix, validate, ConfigError, PrincipalPart};
use corner_pencil_core::pencil::mellin_symbol;
use corner_pencil_core::spectrum::{classify, locate_eigenvalues, Classification, PolynomialFit};
use corner_pencil_core::tangential::{consistency_check, tangential_system, Consistency};
use corner_pencil_core::verdict::{decide, explain, parse, IndeterminateReason, RhsMode};
use corner_pencil_core::verify::SingularField;
use corner_pencil_core::{
    BandQuery, DiscretizedPencil, NonlocalTerm, OrbitConfig, Outcome, SideId, Sigma, Trace, C64, I,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use std::f64::consts::PI;

fn config_from(seed: u64) -> corner_pencil_core::ValidatedConfig {
    random_config(&mut StdRng::seed_from_u64(seed))
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn validation_is_idempotent(seed in any::<u64>()) {
        let cfg = config_from(seed);
        let again = validate(cfg.clone().into_inner()).unwrap();
        prop_assert_eq!(cfg, again);
    }

    #[test]
    fn transformed_sides_keep_length_and_direction(seed in any::<u64>()) {
        let cfg = config_from(seed);
        for side in SideId::all(cfg.n_angles()) {
            let tau = side_tangent(side, &cfg);
            prop_assert!((tau[0].hypot(tau[1]) - 1.0).abs() < 1e-15);
            for term in cfg.side_terms(side) {
                let g = transform_matrix(term);
                let v = [g[0][0] * tau[0] + g[0][1] * tau[1], g[1][0] * tau[0] + g[1][1] * tau[1]];
                prop_assert!((v[0].hypot(v[1]) - term.homothety).abs() < 1e-12);
                let want = cfg.side_angle(side) + term.rotation;
                prop_assert!(angle_diff(v[1].atan2(v[0]), want) < 1e-12);
            }
        }
    }

    #[test]
    fn images_outside_the_target_are_rejected(w in 0.1f64..3.0, excess in 0.0f64..0.5, sign in prop::bool::ANY) {
        let s = if sign { 1.0 } else { -1.0 };
        let image = s * (w + excess).min(PI - 1e-3);
        let side = SideId::new(0, Sigma::Two);
        let rotation = image - w;
        let cfg = OrbitConfig::dirichlet(&[w]).with_term(side, NonlocalTerm::new(0, rotation, 0.5, c(1.0, 0.0)));
        let rejected = matches!(validate(cfg), Err(ConfigError::ImageOutsideTargetAngle { .. }));
        prop_assert!(rejected);
    }

    #[test]
    fn degenerate_principal_parts_are_not_elliptic(a11 in 0.1f64..3.0, a22 in 0.1f64..3.0, k in 1.0f64..3.0) {
        let a12 = k * (a11 * a22).sqrt();
        prop_assert!(!PrincipalPart::real(a11, a12, a22).is_elliptic());
        prop_assert!(PrincipalPart::real(a11, a12 / (k + 0.1), a22).is_elliptic());
    }

    #[test]
    fn laplacian_symbol_is_polar_laplacian(w in -3.0f64..3.0, re in -3.0f64..3.0, im in -2.0f64..1.0) {
        let s = mellin_symbol(PrincipalPart::laplacian()).unwrap();
        let mu = I * c(re, im);
        let (phi, dphi, d2phi) = (c(0.3, 0.1), c(-1.0, 2.0), c(0.5, -0.7));
        let want = d2phi + mu * mu * phi;
        prop_assert!((s.apply(w, mu, phi, dphi, d2phi) - want).norm() < 1e-12 * (1.0 + want.norm()));
    }

    #[test]
    fn boundary_rows_reproduce_the_nonlocal_conditions(seed in any::<u64>(), re in -2.0f64..2.0, im in -1.0f64..0.5) {
        let cfg = config_from(seed);
        let n = 32;
        let p = DiscretizedPencil::new(&cfg, n).unwrap();
        let phi = |j: usize, w: f64| c((0.7 * w + j as f64).cos(), (1.3 * w).sin() * 0.5);
        let v: Vec<C64> = (0..cfg.n_angles())
            .flat_map(|j| p.grid(j).nodes().iter().map(move |&w| phi(j, w)).collect::<Vec<_>>())
            .collect();
        let lambda = c(re, im);
        let mv = p.assemble(lambda).mul_vec(&v);
        for side in SideId::all(cfg.n_angles()) {
            let want: C64 = cfg
                .side_terms(side)
                .iter()
                .map(|t| (I * lambda * t.homothety.ln()).exp() * t.coeff0 * phi(t.target, cfg.side_angle(side) + t.rotation))
                .sum();
            let got = mv[p.boundary_row_index(side)];
            prop_assert!((got - want).norm() < 1e-10 * (1.0 + want.norm()), "{} vs {}", got, want);
        }
    }

    #[test]
    fn real_configs_have_conjugate_symmetric_determinants(seed in any::<u64>(), re in -3.0f64..3.0, im in -1.0f64..0.0) {
        let cfg = config_from(seed);
        let p = DiscretizedPencil::new(&cfg, 16).unwrap();
        let z = c(re, im);
        let (a, pa) = p.det_log(z).unwrap();
        let (b, pb) = p.det_log(-z.conj()).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        prop_assert!(angle_diff(pa, -pb) < 1e-7);
    }

    #[test]
    fn tangential_beta_reconstructs_dependent_rows(seed in any::<u64>()) {
        let cfg = config_from(seed);
        let sys = tangential_system(&cfg);
        prop_assert!(sys.rank() <= 2 * cfg.n_angles());
        prop_assert_eq!(sys.rank() + sys.beta().len(), 2 * cfg.n_angles());
        prop_assert!(sys.max_reconstruction_residual() < 1e-12);
        let rows: Vec<Vec<C64>> = SideId::all(cfg.n_angles()).map(|s| sys.flattened(s)).collect();
        prop_assert_eq!(Svd::new(&CMat::from_rows(&rows)).rank(1e-10), sys.rank());
    }

    #[test]
    fn smooth_consistency_is_decided_by_the_slope_at_zero(a in -2.0f64..2.0, b in -2.0f64..2.0, d in -1.0f64..1.0) {
        let cfg = common::dirichlet(&[PI / 2.0]);
        let sys = tangential_system(&cfg);
        let s11 = SideId::new(0, Sigma::One);
        let s12 = SideId::new(0, Sigma::Two);
        // g = Z₁₂ + Z₁₁ = a r + b r² + d
        let traces = [
            Trace::polynomial(s11, &[c(d, 0.0), c(0.5 * a, 0.0)]),
            Trace::polynomial(s12, &[c(0.0, 0.0), c(0.5 * a, 0.0), c(b, 0.0)]),
        ];
        let smooth = consistency_check(&sys, &traces, 1.0).unwrap().entries[0].verdict;
        let expected = if a.abs() < 1e-9 { Consistency::Consistent } else { Consistency::Inconsistent };
        prop_assert_eq!(smooth, expected);
        if a.abs() > 0.05 {
            let sampled: Vec<Trace> = traces.iter().map(|t| t.to_sampled(1.0, 160)).collect();
            prop_assert_eq!(consistency_check(&sys, &sampled, 1.0).unwrap().entries[0].verdict, smooth);
        }
    }

    #[test]
    fn singular_fields_are_homogeneous(kappa in 0.05f64..1.0, lre in -0.5f64..0.5, r in 0.01f64..0.4, t in -0.9f64..0.9) {
        let w1 = 0.7 * PI;
        let cfg = common::dirichlet(&[w1]);
        let lambda0 = c(lre, -kappa);
        let f = SingularField::from_fn(&cfg, lambda0, 24, |_, w| c(1.0 + 0.3 * w, (2.0 * w).sin())).unwrap();
        let w = t * w1;
        let ratio = f.eval(0, 2.0 * r, w).norm() / f.eval(0, r, w).norm();
        prop_assert!((ratio - 2f64.powf((I * lambda0).re)).abs() < 1e-10);
    }

    #[test]
    fn chebyshev_differentiation_is_exact_on_polynomials(coeffs in prop::collection::vec(-1.0f64..1.0, 1..12), half in 0.2f64..3.0) {
        let g = ChebGrid::new(16, half);
        let p = |x: f64| coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a);
        let dp = |x: f64| coeffs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, &a)| acc * x + a * k as f64);
        let f: Vec<C64> = g.nodes().iter().map(|&x| c(p(x), 0.0)).collect();
        let d = g.differentiate(&f);
        let scale = coeffs.iter().map(|a| a.abs()).sum::<f64>() * (1.0 + half).powi(coeffs.len() as i32);
        for (x, dx) in g.nodes().iter().zip(&d) {
            prop_assert!((dx.re - dp(*x)).abs() < 1e-10 * scale);
        }
        let x = 0.37 * half;
        prop_assert!((g.interpolate(&f, x).re - p(x)).abs() < 1e-12 * scale);
    }

    #[test]
    fn least_squares_recovers_consistent_systems(seed in any::<u64>(), rows in 3usize..7, cols in 1usize..4) {
        use rand::Rng;
        let mut rng = StdRng::seed_from_u64(seed);
        let a = CMat::from_fn(rows, cols, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let x: Vec<C64> = (0..cols).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let b = a.mul_vec(&x);
        let ls = lstsq(&a, &b, 1e-12);
        prop_assert!(ls.residual < 1e-10);
        for (u, v) in ls.x.iter().zip(&x) {
            prop_assert!((u - v).norm() < 1e-8);
        }
    }

    #[test]
    fn classification_rule(assoc in prop::bool::ANY, poly in prop::option::of(0usize..4)) {
        let fit = poly.map(|degree| PolynomialFit { degree, residual: 0.0 });
        let want = if !assoc && fit.is_some() { Classification::Proper } else { Classification::Improper };
        prop_assert_eq!(classify(assoc, fit.as_ref()), want);
    }

    #[test]
    fn reports_round_trip(re in -10.0f64..10.0, im in -1.0f64..0.0, which in 0usize..4) {
        let z = c(re, im);
        let reasons = match which {
            0 => vec![IndeterminateReason::AmbiguousTopEdge(z)],
            1 => vec![IndeterminateReason::UnstableRoot(z), IndeterminateReason::UnsettledRoot(-z)],
            2 => vec![IndeterminateReason::IndependentTangentialSystem],
            _ => vec![IndeterminateReason::UnsettledRoot(z), IndeterminateReason::IndependentTangentialSystem],
        };
        let mut v = base_verdict();
        v.outcome = Outcome::Indeterminate { reasons };
        prop_assert_eq!(parse(&explain(&v)).unwrap(), v.outcome);
    }
}

fn base_verdict() -> corner_pencil_core::Verdict {
    let cfg = common::dirichlet(&[PI / 4.0]);
    let band = locate_eigenvalues(&cfg, &BandQuery::default()).unwrap();
    decide(&cfg, &band, None, RhsMode::Nonhomogeneous).unwrap()
}
