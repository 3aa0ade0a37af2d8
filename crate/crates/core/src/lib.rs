//! Solvers for the quasilinear elliptic Hamilton–Jacobi–Bellman equation
//!
//! ```text
//! -1/2 Δu + (1/p)|∇u|^p + u = f   on R^N
//! ```
//!
//! and for its weakly coupled regime-switching system.
//!
//! The crate is organised by solver family:
//!
//! * [`model`]: problem definitions, validation, conjugate exponents and the
//!   Fenchel duality oracle.
//! * [`exact`]: closed-form quadratic solutions (scalar and regime system)
//!   and the derived economic quantities.
//! * [`radial`]: the radial two-point BVP solver and the barrier checks.
//! * [`monotone`]: the expanding-ball monotone Dirichlet scheme.
//! * [`grid2d`]: the damped fixed-point finite-difference solver on a square.
//! * [`stochastic`]: Euler–Maruyama simulation and Monte Carlo verification.

// `!(x > 0.0)` is used on purpose: it also rejects NaN. Index loops mirror the
// matrix notation of the numerical kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod exact;
pub mod grid2d;
pub mod linalg;
pub mod model;
pub mod monotone;
pub mod radial;
pub mod stochastic;

pub use error::{HjbError, Result};
