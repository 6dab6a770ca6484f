//! Spectral analysis of the operator pencil attached to a nonlocal elliptic
//! problem in a union of plane angles, and the W² regularity decision built
//! on top of it.
//!
//! The crate is `no_std` (it needs `alloc`). The optional `parallel` feature
//! pulls in `std` and `rayon` to refine eigenvalue candidates concurrently.
//!
//! Layout, bottom-up:
//!
//! * [`linalg`]: dense complex LU, one-sided Jacobi SVD, least squares.
//! * [`chebyshev`]: Gauss–Lobatto grids, differentiation matrices and
//!   barycentric interpolation.
//! * [`orbit`]: the validated description of the model problem.
//! * [`pencil`]: Mellin symbols and the collocation matrix `M_n(λ)`.
//! * [`spectrum`]: zero counting, eigenvalue location and classification.
//! * [`tangential`]: the tangential operator system and consistency checks.
//! * [`verify`]: singular solutions, residuals and Sobolev probes.
//! * [`verdict`]: the final smoothness decision and its certificate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(feature = "parallel")]
extern crate std;

pub mod chebyshev;
pub mod linalg;
pub mod orbit;
pub mod pencil;
pub mod quadrature;
pub mod spectrum;
pub mod tangential;
pub mod verdict;
pub mod verify;

mod error;

pub use error::Error;
pub use num_complex::Complex64 as C64;
pub use orbit::{NonlocalTerm, OrbitConfig, PrincipalPart, Sigma, SideId, ValidatedConfig};
pub use pencil::DiscretizedPencil;
pub use spectrum::{BandQuery, BandResult, Classification, EigenvalueRecord};
pub use tangential::{Trace, TangentialSystem};
pub use verdict::{Outcome, Verdict};

/// Imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);
