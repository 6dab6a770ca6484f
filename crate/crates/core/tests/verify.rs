mod common;

use common::{c, dirichlet, nonlocal_oracle_configs};
use corner_pencil_core::orbit::validate;
use corner_pencil_core::spectrum::locate_eigenvalues;
use corner_pencil_core::verify::{
    corroborate, nonlocal_bc_residual, pde_residual, sobolev_probe, Growth, SingularField, VerifyError,
};
use corner_pencil_core::{BandQuery, ValidatedConfig, C64};
use std::f64::consts::PI;

fn first_record_field(cfg: &ValidatedConfig) -> SingularField {
    let band = locate_eigenvalues(cfg, &BandQuery::default()).unwrap();
    SingularField::from_record(cfg, &band.records[0], 0).unwrap()
}

fn corner_field(w1: f64, perturb: f64) -> SingularField {
    let cfg = dirichlet(&[w1]);
    let kappa = PI / (2.0 * w1);
    SingularField::from_fn(&cfg, c(0.0, -kappa), 64, |_, w| {
        c((kappa * (w + w1)).sin() + perturb * (5.0 * w).cos(), 0.0)
    })
    .unwrap()
}

#[test]
fn half_plane_eigenpair_is_exact() {
    let cfg = dirichlet(&[PI / 2.0]);
    let f = first_record_field(&cfg);
    assert!(pde_residual(&f, &cfg, 50, 1).unwrap() < 1e-8);
    assert!(nonlocal_bc_residual(&f, &cfg, 50, 1).unwrap() < 1e-12);
}

#[test]
fn corner_eigenpair_and_negative_control() {
    let cfg = dirichlet(&[0.75 * PI]);
    let f = first_record_field(&cfg);
    assert!(pde_residual(&f, &cfg, 200, 7).unwrap() < 1e-6);
    assert!(nonlocal_bc_residual(&f, &cfg, 50, 7).unwrap() < 1e-10);
    let g = corner_field(0.75 * PI, 0.01);
    assert!(pde_residual(&g, &cfg, 200, 7).unwrap() > 1e-3);
}

#[test]
fn nonlocal_eigenpairs_satisfy_the_conditions() {
    for raw in nonlocal_oracle_configs() {
        let cfg = validate(raw).unwrap();
        let f = first_record_field(&cfg);
        assert!(pde_residual(&f, &cfg, 100, 3).unwrap() < 1e-6);
        assert!(nonlocal_bc_residual(&f, &cfg, 100, 3).unwrap() < 1e-7);
        // reflected eigenfunction: a wrong eigenvector for the same λ0
        let band = locate_eigenvalues(&cfg, &BandQuery::default()).unwrap();
        let rec = &band.records[0];
        let wrong = SingularField::from_fn(&cfg, rec.lambda0, 64, |j, w| f.phi(j, -w)).unwrap();
        assert!(nonlocal_bc_residual(&wrong, &cfg, 100, 3).unwrap() > 1e-3);
    }
    let cfg = dirichlet(&[PI / 2.0]);
    let wrong = SingularField::from_fn(&cfg, c(0.0, -1.0), 32, |_, w| c(w.sin(), 0.0)).unwrap();
    assert!(nonlocal_bc_residual(&wrong, &cfg, 20, 1).unwrap() > 0.5);
}

#[test]
fn fields_are_homogeneous() {
    let f = corner_field(0.75 * PI, 0.0);
    let kappa = 2.0 / 3.0;
    for &(r, w) in &[(0.1, 0.3), (0.27, -1.9), (0.4, 2.2)] {
        let ratio = f.eval(0, 2.0 * r, w).norm() / f.eval(0, r, w).norm();
        assert!((ratio - 2f64.powf(kappa)).abs() < 1e-10);
    }
}

#[test]
fn sobolev_probe_separates_w1_from_w2() {
    let f = corner_field(0.75 * PI, 0.0);
    let deltas: Vec<f64> = (5..=11).map(|k| 2f64.powi(-k)).collect();
    let p2 = sobolev_probe(&f, 2, &deltas).unwrap();
    let target = 2f64.powf(2.0 / 3.0);
    for r in &p2.ratios() {
        assert!((r - target).abs() < 0.05 * target, "ratio {r}");
    }
    assert_eq!(p2.growth, Growth::Power);
    assert!((p2.exponent - 2.0 / 3.0).abs() < 0.1 * 2.0 / 3.0);

    let p1 = sobolev_probe(&f, 1, &deltas).unwrap();
    assert_eq!(p1.growth, Growth::Convergent);
    let last = *p1.values.last().unwrap();
    let prev = p1.values[p1.values.len() - 2];
    assert!((last - prev) / last < 0.01);

    let cfg = dirichlet(&[PI / 2.0]);
    let y1 = SingularField::from_fn(&cfg, c(0.0, -1.0), 32, |_, w| c(w.cos(), 0.0)).unwrap();
    let p = sobolev_probe(&y1, 2, &deltas).unwrap();
    assert!(p.values.iter().all(|&v| v < 1e-18));
}

#[test]
fn probe_rejects_bad_deltas() {
    let f = corner_field(0.75 * PI, 0.0);
    assert_eq!(sobolev_probe(&f, 2, &[0.5, 0.6]).unwrap_err(), VerifyError::InvalidDeltas);
    assert_eq!(sobolev_probe(&f, 2, &[2.0]).unwrap_err(), VerifyError::InvalidDeltas);
    assert_eq!(sobolev_probe(&f, 3, &[0.5]).unwrap_err(), VerifyError::InvalidDeltas);
}

#[test]
fn thin_angles_leave_no_room_for_stencils() {
    let cfg = dirichlet(&[0.002]);
    let f = SingularField::from_fn(&cfg, c(0.0, -1.0), 16, |_, w| C64::new(w.cos(), 0.0)).unwrap();
    assert!(matches!(
        pde_residual(&f, &cfg, 4, 1),
        Err(VerifyError::SamplesTooCloseToVertex { .. })
    ));
}

#[test]
fn corroboration_keeps_genuine_eigenpairs() {
    for w in [PI / 2.0, 0.75 * PI, 0.9 * PI] {
        let cfg = dirichlet(&[w]);
        let mut band = locate_eigenvalues(&cfg, &BandQuery::default()).unwrap();
        let n = band.records.len();
        let checks = corroborate(&cfg, &mut band, 50, 11).unwrap();
        assert!(checks.iter().all(|c| c.passed()));
        assert_eq!(band.records.len(), n);
    }
}
