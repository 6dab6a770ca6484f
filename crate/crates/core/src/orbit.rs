//! Geometry and coefficients of the model problem at one orbit of
//! conjugation points.
//!
//! Each orbit point `g_j` carries a plane angle `K_j = {|ω| < ω_j}` with
//! sides `γ_{j1}` (polar angle `-ω_j`) and `γ_{j2}` (polar angle `+ω_j`).
//! The boundary condition on side `(j, σ)` is
//!
//! ```text
//! Σ_{k,s} b_{jσks}(y) U_k(G_{jσks} y) = Ψ_{jσ}(y),
//! ```
//!
//! where `G_{jσks}` rotates by `ω_{jσks}` and scales by `χ_{jσks} > 0`.
//! Term `s = 0` is always the identity term `U_j(y)` with coefficient one.
//!
//! Angle indices are zero-based in the API and one-based in every
//! human-facing rendering.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::ops::Deref;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::wrap_angle;
use crate::C64;

/// Images closer than this to a side of the target angle are rejected.
pub const IMAGE_MARGIN: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sigma {
    /// Side at polar angle `-ω_j`.
    One,
    /// Side at polar angle `+ω_j`.
    Two,
}

impl Sigma {
    pub const BOTH: [Sigma; 2] = [Sigma::One, Sigma::Two];

    /// `(-1)^σ`.
    pub fn sign(self) -> f64 {
        match self {
            Sigma::One => -1.0,
            Sigma::Two => 1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Sigma::One => 0,
            Sigma::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Sigma> {
        match n {
            1 => Some(Sigma::One),
            2 => Some(Sigma::Two),
            _ => None,
        }
    }
}

/// Side `γ_{jσ}` of angle `j` (zero-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SideId {
    pub angle: usize,
    pub sigma: Sigma,
}

impl SideId {
    pub fn new(angle: usize, sigma: Sigma) -> Self {
        SideId { angle, sigma }
    }

    /// All `2N` sides in lexicographic `(j, σ)` order.
    pub fn all(n_angles: usize) -> impl Iterator<Item = SideId> {
        (0..n_angles).flat_map(|j| Sigma::BOTH.into_iter().map(move |s| SideId::new(j, s)))
    }

    /// Position in the lexicographic order.
    pub fn flat_index(self) -> usize {
        2 * self.angle + self.sigma.index()
    }
}

impl fmt::Display for SideId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.angle + 1, self.sigma.number())
    }
}

/// Frozen principal part `a11 ∂₁² + 2 a12 ∂₁∂₂ + a22 ∂₂²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrincipalPart {
    pub a11: C64,
    pub a12: C64,
    pub a22: C64,
}

impl PrincipalPart {
    pub fn new(a11: C64, a12: C64, a22: C64) -> Self {
        PrincipalPart { a11, a12, a22 }
    }

    pub fn laplacian() -> Self {
        let one = C64::new(1.0, 0.0);
        PrincipalPart::new(one, C64::new(0.0, 0.0), one)
    }

    pub fn real(a11: f64, a12: f64, a22: f64) -> Self {
        PrincipalPart::new(a11.into(), a12.into(), a22.into())
    }

    /// The symbol `Σ a_kl ξ_k ξ_l` has no real zero `ξ ≠ 0`.
    pub fn is_elliptic(&self) -> bool {
        let scale = self.a11.norm().max(self.a12.norm()).max(self.a22.norm());
        if scale == 0.0 || self.a11.norm() <= 1e-14 * scale {
            // ξ = (1, 0) is a real zero
            return false;
        }
        // roots of a11 t² + 2 a12 t + a22 (ξ = (t, 1))
        let disc = (self.a12 * self.a12 - self.a11 * self.a22).sqrt();
        [(-self.a12 + disc) / self.a11, (-self.a12 - disc) / self.a11]
            .iter()
            .all(|t| t.im.abs() > 1e-12 * (1.0 + t.norm()))
    }

    /// Symbol value on a real covector.
    pub fn form(&self, xi: [f64; 2]) -> C64 {
        self.a11 * xi[0] * xi[0] + self.a12 * 2.0 * xi[0] * xi[1] + self.a22 * xi[1] * xi[1]
    }

    pub fn is_real(&self) -> bool {
        self.a11.im == 0.0 && self.a12.im == 0.0 && self.a22.im == 0.0
    }
}

/// One addend `b_{jσks}(y) U_k(G_{jσks} y)` of a nonlocal condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonlocalTerm {
    /// Target angle `k` (zero-based).
    pub target: usize,
    /// Rotation angle `ω_{jσks}`.
    pub rotation: f64,
    /// Homothety coefficient `χ_{jσks}`.
    pub homothety: f64,
    /// `b_{jσks}(0)`.
    pub coeff0: C64,
    /// Radial derivative of `b_{jσks}` along the side at `r = 0`.
    pub coeff_r_deriv0: C64,
}

impl NonlocalTerm {
    pub fn new(target: usize, rotation: f64, homothety: f64, coeff0: C64) -> Self {
        NonlocalTerm {
            target,
            rotation,
            homothety,
            coeff0,
            coeff_r_deriv0: C64::new(0.0, 0.0),
        }
    }

    pub fn with_r_deriv(mut self, d: C64) -> Self {
        self.coeff_r_deriv0 = d;
        self
    }

    /// The `s = 0` term of side `(j, ·)`.
    pub fn identity(j: usize) -> Self {
        NonlocalTerm::new(j, 0.0, 1.0, C64::new(1.0, 0.0))
    }

    fn is_identity_for(&self, j: usize) -> bool {
        self.target == j
            && self.rotation == 0.0
            && self.homothety == 1.0
            && self.coeff0 == C64::new(1.0, 0.0)
            && self.coeff_r_deriv0 == C64::new(0.0, 0.0)
    }

    /// `ln χ`, the exponent rate of `χ^{iλ} = e^{iλ ln χ}`.
    pub fn log_homothety(&self) -> f64 {
        self.homothety.ln()
    }
}

/// `χ R(ω)` for a term.
pub fn transform_matrix(term: &NonlocalTerm) -> [[f64; 2]; 2] {
    let (s, c) = term.rotation.sin_cos();
    let h = term.homothety;
    [[h * c, -h * s], [h * s, h * c]]
}

/// Full description of the model problem.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitConfig {
    /// Half-openings `ω_j`.
    pub angles: Vec<f64>,
    pub principal_parts: Vec<PrincipalPart>,
    /// `terms[j][σ.index()]`; entry 0 is the identity term.
    pub terms: Vec<[Vec<NonlocalTerm>; 2]>,
    /// Truncation radius for traces and consistency integrals.
    pub epsilon: f64,
}

impl OrbitConfig {
    /// A local problem (identity terms only) with the given angles and
    /// principal parts.
    pub fn local(angles: Vec<f64>, principal_parts: Vec<PrincipalPart>, epsilon: f64) -> Self {
        let terms = (0..angles.len())
            .map(|j| [vec![NonlocalTerm::identity(j)], vec![NonlocalTerm::identity(j)]])
            .collect();
        OrbitConfig {
            angles,
            principal_parts,
            terms,
            epsilon,
        }
    }

    /// Local Dirichlet problem for the Laplacian in the given angles.
    pub fn dirichlet(angles: &[f64]) -> Self {
        OrbitConfig::local(angles.to_vec(), vec![PrincipalPart::laplacian(); angles.len()], 1.0)
    }

    /// Appends a non-identity term on `side`.
    pub fn with_term(mut self, side: SideId, term: NonlocalTerm) -> Self {
        self.terms[side.angle][side.sigma.index()].push(term);
        self
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    pub fn side_terms(&self, side: SideId) -> &[NonlocalTerm] {
        &self.terms[side.angle][side.sigma.index()]
    }

    /// Polar angle `(-1)^σ ω_j` of side `γ_{jσ}`.
    pub fn side_angle(&self, side: SideId) -> f64 {
        side.sigma.sign() * self.angles[side.angle]
    }

    /// Polar angle of the image of side `γ_{jσ}` under a term, wrapped to
    /// `(-π, π]`.
    pub fn image_angle(&self, side: SideId, term: &NonlocalTerm) -> f64 {
        wrap_angle(self.side_angle(side) + term.rotation)
    }

    /// True when every principal part and every `b(0)` is real, in which
    /// case `M(-λ̄) = conj M(λ)`.
    pub fn has_real_coefficients(&self) -> bool {
        self.principal_parts.iter().all(PrincipalPart::is_real)
            && self
                .terms
                .iter()
                .flat_map(|t| t.iter().flatten())
                .all(|t| t.coeff0.im == 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConfigError {
    Empty,
    ShapeMismatch { what: &'static str },
    NonpositiveEpsilon(f64),
    AngleOutOfRange { angle: usize, value: f64 },
    MissingIdentityTerm { side: SideId },
    BadTarget { side: SideId, term: usize, target: usize },
    ImageOutsideTargetAngle {
        side: SideId,
        target: usize,
        term: usize,
        /// `|(-1)^σ ω_j + ω_{jσks}|`.
        image: f64,
        /// `ω_k`.
        limit: f64,
    },
    NonElliptic { angle: usize },
    NonpositiveHomothety { side: SideId, term: usize, value: f64 },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Empty => write!(f, "configuration has no angles"),
            ConfigError::ShapeMismatch { what } => write!(f, "length mismatch: {what}"),
            ConfigError::NonpositiveEpsilon(e) => write!(f, "epsilon must be positive, got {e}"),
            ConfigError::AngleOutOfRange { angle, value } => {
                write!(f, "angle {} has half-opening {value}, outside (0, pi)", angle + 1)
            }
            ConfigError::MissingIdentityTerm { side } => write!(
                f,
                "side {side}: term s=0 must be the identity term (target j, rotation 0, homothety 1, coefficient 1 with zero derivative)"
            ),
            ConfigError::BadTarget { side, term, target } => {
                write!(f, "side {side}, term s={term}: target {} does not exist", target + 1)
            }
            ConfigError::ImageOutsideTargetAngle {
                side,
                target,
                term,
                image,
                limit,
            } => write!(
                f,
                "ImageOutsideTargetAngle at (j={}, sigma={}, k={}, s={term}): |(-1)^sigma omega_j + omega_jsks| = {image} is not < omega_k = {limit}",
                side.angle + 1,
                side.sigma.number(),
                target + 1
            ),
            ConfigError::NonElliptic { angle } => {
                write!(f, "principal part of angle {} is not elliptic", angle + 1)
            }
            ConfigError::NonpositiveHomothety { side, term, value } => {
                write!(f, "side {side}, term s={term}: homothety {value} is not positive")
            }
        }
    }
}

impl core::error::Error for ConfigError {}

/// A configuration that passed [`validate`]; the only form accepted by the
/// numerical modules.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedConfig(OrbitConfig);

impl ValidatedConfig {
    pub fn into_inner(self) -> OrbitConfig {
        self.0
    }
}

impl Deref for ValidatedConfig {
    type Target = OrbitConfig;
    fn deref(&self) -> &OrbitConfig {
        &self.0
    }
}

pub fn validate(config: OrbitConfig) -> Result<ValidatedConfig, ConfigError> {
    let n = config.n_angles();
    if n == 0 {
        return Err(ConfigError::Empty);
    }
    if config.principal_parts.len() != n {
        return Err(ConfigError::ShapeMismatch {
            what: "principal_parts vs angles",
        });
    }
    if config.terms.len() != n {
        return Err(ConfigError::ShapeMismatch { what: "terms vs angles" });
    }
    if !(config.epsilon > 0.0) || !config.epsilon.is_finite() {
        return Err(ConfigError::NonpositiveEpsilon(config.epsilon));
    }
    for (j, &w) in config.angles.iter().enumerate() {
        if !(w > 0.0 && w < PI) {
            return Err(ConfigError::AngleOutOfRange { angle: j, value: w });
        }
    }
    for (j, a) in config.principal_parts.iter().enumerate() {
        if !a.is_elliptic() {
            return Err(ConfigError::NonElliptic { angle: j });
        }
    }
    for side in SideId::all(n) {
        let terms = config.side_terms(side);
        match terms.first() {
            Some(t) if t.is_identity_for(side.angle) => {}
            _ => return Err(ConfigError::MissingIdentityTerm { side }),
        }
        for (s, term) in terms.iter().enumerate().skip(1) {
            if term.target >= n {
                return Err(ConfigError::BadTarget {
                    side,
                    term: s,
                    target: term.target,
                });
            }
            if !(term.homothety > 0.0) || !term.homothety.is_finite() {
                return Err(ConfigError::NonpositiveHomothety {
                    side,
                    term: s,
                    value: term.homothety,
                });
            }
            let image = config.image_angle(side, term).abs();
            let limit = config.angles[term.target];
            if image >= limit - IMAGE_MARGIN {
                return Err(ConfigError::ImageOutsideTargetAngle {
                    side,
                    target: term.target,
                    term: s,
                    image,
                    limit,
                });
            }
        }
    }
    Ok(ValidatedConfig(config))
}

/// Unit vector `τ_{jσ}` along the ray `γ_{jσ}`.
pub fn side_tangent(side: SideId, config: &OrbitConfig) -> [f64; 2] {
    let (s, c) = config.side_angle(side).sin_cos();
    [c, s]
}
