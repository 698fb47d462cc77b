//! Numerical laboratory for the dbar equation on pseudoconvex domains of
//! finite type in C^2.
//!
//! The crate builds, on explicit polynomial model domains:
//! Catlin normal coordinates and the nonisotropic scales `tau` / `J_delta`,
//! bumped domains with a surrogate bump function, holomorphic division
//! pairs obtained by equality-constrained weighted least squares, patched
//! Leray maps with derivative-bound certificates, Bochner-Martinelli and
//! Cauchy-Fantappie homotopy operators with residual checks, and the
//! function-space machinery (Holder-Zygmund and Littlewood-Paley norm
//! estimators, a Rychkov-type extension operator, Hardy-Littlewood and
//! commutator checks) used to verify the weighted estimates by quadrature
//! and slope fitting.

pub mod aniso;
pub mod bumping;
pub mod config;
pub mod division;
pub mod domain;
pub mod error;
pub mod estimates;
pub mod kernels;
pub mod normal_form;
pub mod poly;
pub mod quad;
pub mod spaces;
pub mod suite;

pub use error::{CoreError, Result};
