mod common;

use common::{c, dirichlet, random_config};
use corner_pencil_core::orbit::validate;
use corner_pencil_core::spectrum::{
    count_zeros, eigenbasis, has_associated, locate_eigenvalues, Rect, SpectrumError,
};
use corner_pencil_core::verdict::{decide, RhsMode};
use corner_pencil_core::{BandQuery, Classification, NonlocalTerm, OrbitConfig, Outcome, SideId, Sigma, ValidatedConfig};
use rand::rngs::StdRng;
use rand::SeedableRng;
use std::f64::consts::PI;

/// Two right angles; side `γ₂₁` also sees angle 1 along its bisector.
/// The determinant has a double zero at `−i` with a one-dimensional kernel.
fn jordan_config() -> ValidatedConfig {
    validate(
        OrbitConfig::dirichlet(&[PI / 2.0, PI / 2.0])
            .with_term(SideId::new(1, Sigma::One), NonlocalTerm::new(0, PI / 2.0, 1.0, c(1.0, 0.0))),
    )
    .unwrap()
}

#[test]
fn jordan_block_is_detected() {
    let cfg = jordan_config();
    assert_eq!(count_zeros(&cfg, &Rect::new(-0.5, 0.5, -1.3, -0.7), 48).unwrap(), 2);
    let band = locate_eigenvalues(&cfg, &BandQuery::default()).unwrap();
    assert_eq!(band.records.len(), 1);
    let r = &band.records[0];
    assert!((r.lambda0 - c(0.0, -1.0)).norm() < 1e-8);
    assert_eq!(r.algebraic_multiplicity, 2);
    assert_eq!(r.geometric_multiplicity, 1);
    assert!(r.multiplicity_discrepancy());
    assert!(r.has_associated);
    assert_eq!(r.classification, Classification::Improper);
    let v = decide(&cfg, &band, None, RhsMode::Nonhomogeneous).unwrap();
    assert_eq!(v.outcome, Outcome::NotSmoothImproper);
}

#[test]
fn simple_dirichlet_root_has_no_associated_vector() {
    let cfg = dirichlet(&[0.75 * PI]);
    let lambda = c(0.0, -2.0 / 3.0);
    let basis = eigenbasis(&cfg, lambda, 48).unwrap();
    assert_eq!(basis.multiplicity(), 1);
    assert!(!has_associated(&cfg, lambda, &basis, 48).unwrap());
}

#[test]
fn non_eigenvalue_is_rejected() {
    let cfg = dirichlet(&[PI / 2.0]);
    assert!(matches!(
        eigenbasis(&cfg, c(0.0, -0.5), 48),
        Err(SpectrumError::NotAnEigenvalue { .. })
    ));
}

#[test]
fn eigenpairs_satisfy_the_discrete_pencil() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..6 {
        let cfg = random_config(&mut rng);
        let band = locate_eigenvalues(&cfg, &BandQuery::default()).unwrap();
        for r in &band.records {
            assert!(r.residuals.iter().all(|&x| x < 1e-7), "{:?}", r.residuals);
            let proper = !r.has_associated && r.polynomial.is_some();
            assert_eq!(r.classification == Classification::Proper, proper);
            if proper {
                assert!((r.lambda0 - c(0.0, -1.0)).norm() < 1e-8);
            }
        }
    }
}

#[test]
fn count_matches_located_multiplicities() {
    let mut configs = vec![
        dirichlet(&[PI / 4.0]),
        dirichlet(&[PI / 2.0]),
        dirichlet(&[0.9 * PI]),
        jordan_config(),
    ];
    configs.extend(common::nonlocal_oracle_configs().into_iter().map(|c| validate(c).unwrap()));
    for cfg in configs {
        let q = BandQuery::default();
        let band = locate_eigenvalues(&cfg, &q).unwrap();
        assert_eq!(band.located_total(), band.winding_total);
        assert_eq!(count_zeros(&cfg, &q.search_rect(), q.n).unwrap(), band.winding_total);
    }
}

#[test]
fn upper_edge_roots_are_excluded_and_lower_edge_roots_flagged() {
    // Dirichlet at ω = π has −i/2 and −i in the band; shifting the band so
    // that −i/2 sits on the open top edge excludes it.
    let cfg = dirichlet(&[0.99 * PI]);
    let top = -PI / (2.0 * 0.99 * PI);
    let band = locate_eigenvalues(&cfg, &BandQuery::default().with_band(-1.2, top)).unwrap();
    assert_eq!(band.ambiguous_top.len(), 1);
    assert!(band.records.iter().all(|r| (r.lambda0.im - top).abs() > 1e-6));

    let band = locate_eigenvalues(&dirichlet(&[PI / 2.0]), &BandQuery::default()).unwrap();
    assert_eq!(band.records.len(), 1);
    assert!(band.records[0].edge_bottom);
}

#[test]
fn invalid_band_is_rejected() {
    let cfg = dirichlet(&[PI / 2.0]);
    assert_eq!(
        locate_eigenvalues(&cfg, &BandQuery::default().with_band(0.0, -1.0)),
        Err(SpectrumError::InvalidBand)
    );
    assert_eq!(
        locate_eigenvalues(&cfg, &BandQuery::default().with_re_half_width(0.0)),
        Err(SpectrumError::InvalidBand)
    );
}
