//! Numerical machinery for the Bessel heat semigroup on the half-space
//! `(0,inf)^n` with the measure `prod x_i^{2*lambda_i} dx_i`, valid for the
//! full range of type indices `lambda_i > -1/2`.
//!
//! The crate provides
//!
//! * scaled modified Bessel and Bessel functions ([`specfun`]),
//! * Gauss rules for the Gegenbauer measures on `[-1,1]`, logarithmic time
//!   grids and a generic adaptive integrator ([`quadrature`]),
//! * the geometry of the underlying space of homogeneous type: the quadratic
//!   form `q`, ball volumes and their closed-form comparator ([`geometry`]),
//! * three equivalent representations of the heat kernel together with an
//!   exact term calculus for its mixed derivatives ([`heat_kernel`]),
//! * the Hankel transform, which diagonalizes the semigroup ([`hankel`]),
//! * the operator kernels built from the semigroup: maximal, square-function,
//!   Laplace / Laplace-Stieltjes multiplier and Riesz kernels, plus the
//!   subordinated Poisson kernel ([`operators`]),
//! * an empirical verifier for the growth/smoothness kernel estimates and the
//!   supporting integral lemmas ([`verifier`]).

pub mod error;
pub mod geometry;
pub mod hankel;
pub mod heat_kernel;
pub mod operators;
pub mod quadrature;
pub mod specfun;
pub mod verifier;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
