#![allow(dead_code)]

use corner_pencil_core::orbit::{validate, NonlocalTerm, OrbitConfig, PrincipalPart, SideId, Sigma};
use corner_pencil_core::{ValidatedConfig, C64};
use rand::rngs::StdRng;
use rand::Rng;
use std::f64::consts::PI;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn dirichlet(angles: &[f64]) -> ValidatedConfig {
    validate(OrbitConfig::dirichlet(angles)).unwrap()
}

/// Real symmetric positive-definite principal part.
pub fn random_principal_part(rng: &mut StdRng) -> PrincipalPart {
    let a11 = rng.gen_range(0.5..2.0);
    let a22 = rng.gen_range(0.5..2.0);
    let a12 = rng.gen_range(-0.5..0.5) * f64::sqrt(a11 * a22);
    PrincipalPart::real(a11, a12, a22)
}

/// One or two angles, random principal parts and up to three nonlocal terms
/// whose images stay well inside their target angles.
pub fn random_config(rng: &mut StdRng) -> ValidatedConfig {
    let n = rng.gen_range(1..=2);
    let angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.15..0.95) * PI).collect();
    let parts = (0..n).map(|_| random_principal_part(rng)).collect();
    let mut cfg = OrbitConfig::local(angles.clone(), parts, 1.0);
    for _ in 0..rng.gen_range(0..=3) {
        let side = SideId::new(rng.gen_range(0..n), if rng.gen_bool(0.5) { Sigma::One } else { Sigma::Two });
        let target = rng.gen_range(0..n);
        let image = rng.gen_range(-0.8..0.8) * angles[target];
        let rotation = image - cfg.side_angle(side);
        let term = NonlocalTerm::new(target, rotation, rng.gen_range(0.3..1.5), c(rng.gen_range(-0.6..0.6), 0.0));
        cfg = cfg.with_term(side, term);
    }
    validate(cfg).unwrap()
}

/// `sin(μθ)/μ`, continued to `μ = 0`.
fn sinc_mu(mu: C64, theta: f64) -> C64 {
    if mu.norm() < 1e-6 {
        let t = C64::new(theta, 0.0);
        t * (1.0 - mu * mu * theta * theta / 6.0)
    } else {
        (mu * theta).sin() / mu
    }
}

/// Closed-form characteristic determinant of a one-angle Laplacian config:
/// solutions of `φ″ + μ²φ = 0` are spanned by `cos μθ` and `sin μθ / μ`,
/// and each side condition is a linear functional on that span.
pub fn nonlocal_oracle_det(cfg: &OrbitConfig, lambda: C64) -> C64 {
    assert_eq!(cfg.n_angles(), 1);
    let mu = C64::new(0.0, 1.0) * lambda;
    let row = |sigma: Sigma| {
        let side = SideId::new(0, sigma);
        let mut r = [C64::new(0.0, 0.0); 2];
        for t in cfg.side_terms(side) {
            let theta = cfg.side_angle(side) + t.rotation;
            let f = t.coeff0 * (C64::new(0.0, 1.0) * lambda * t.homothety.ln()).exp();
            r[0] += f * (mu * theta).cos();
            r[1] += f * sinc_mu(mu, theta);
        }
        r
    };
    let (a, b) = (row(Sigma::One), row(Sigma::Two));
    a[0] * b[1] - a[1] * b[0]
}

/// Zeros of the closed-form determinant in `c1 ≤ Im λ < c2`, `|Re λ| ≤ r`,
/// by Newton's method from a lattice of starting points.
pub fn nonlocal_oracle_roots(cfg: &OrbitConfig, c1: f64, c2: f64, r: f64) -> Vec<C64> {
    let f = |z: C64| nonlocal_oracle_det(cfg, z);
    let mut roots: Vec<C64> = Vec::new();
    let steps_re = (2.0 * r / 0.25).round() as usize;
    for a in 0..=steps_re {
        for b in 0..=14 {
            let mut z = C64::new(-r + 0.25 * a as f64, c1 - 0.2 + 0.1 * b as f64);
            let mut converged = false;
            for _ in 0..60 {
                let h = 1e-6;
                let d = (f(z + h) - f(z - h)) / (2.0 * h);
                if d.norm() == 0.0 || !d.re.is_finite() {
                    break;
                }
                let step = f(z) / d;
                z -= if step.norm() > 0.5 { step * (0.5 / step.norm()) } else { step };
                if step.norm() < 1e-14 * z.norm().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if converged
                && z.im >= c1 - 1e-9
                && z.im < c2 - 1e-9
                && z.re.abs() <= r
                && !roots.iter().any(|w| (w - z).norm() < 1e-7)
            {
                roots.push(z);
            }
        }
    }
    roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    roots
}

/// One-angle Laplacian configs with nonlocal terms, each with at least one
/// zero in the critical band.
pub fn nonlocal_oracle_configs() -> Vec<OrbitConfig> {
    vec![
        OrbitConfig::dirichlet(&[PI / 2.0])
            .with_term(SideId::new(0, Sigma::One), NonlocalTerm::new(0, PI / 2.0, 0.5, c(-0.5, 0.0))),
        OrbitConfig::dirichlet(&[2.0 * PI / 3.0])
            .with_term(SideId::new(0, Sigma::Two), NonlocalTerm::new(0, -PI / 2.0, 0.7, c(0.4, 0.0))),
        OrbitConfig::dirichlet(&[0.8 * PI])
            .with_term(SideId::new(0, Sigma::One), NonlocalTerm::new(0, 0.5 * PI, 0.6, c(-0.3, 0.0)))
            .with_term(SideId::new(0, Sigma::Two), NonlocalTerm::new(0, -1.1 * PI, 1.3, c(0.25, 0.0))),
        OrbitConfig::dirichlet(&[0.4 * PI])
            .with_term(SideId::new(0, Sigma::Two), NonlocalTerm::new(0, -0.4 * PI, 1.5, c(-0.9, 0.0))),
    ]
}

/// Dirichlet eigenvalues `−imπ/(2ω)` in `−1 ≤ Im λ < 0`.
pub fn dirichlet_band_roots(omega: f64) -> Vec<C64> {
    (1..)
        .map(|m| -(m as f64) * PI / (2.0 * omega))
        .take_while(|&im| im >= -1.0 - 1e-12)
        .map(|im| c(0.0, im))
        .collect()
}
