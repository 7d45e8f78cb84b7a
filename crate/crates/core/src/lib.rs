//! Hirota-Kimura discretization of the Euler top.
//!
//! The explicit map `x ↦ x̃` solving
//! `x̃_i − x_i = δ_i (x̃_j x_k + x_j x̃_k)` together with its integrals,
//! invariant density, invariant Poisson brackets and closed-form elliptic
//! solutions. Reference integrators (RK4 and an implicit midpoint-type scheme)
//! are included for comparison.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the common `f64` case.

// `!(a < b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bls;
pub mod continuous;
pub mod convergence;
pub mod elliptic;
pub mod error;
pub mod hk;
pub mod linalg;
pub mod poisson;
pub mod sampling;
pub mod scalar;
pub mod tolerance;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{det3, solve3, CyclicIndex, Matrix3, Vector3};
pub use scalar::Real;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Vec3f = Vector3<f32>;
pub type Mat3f = Matrix3<f32>;
pub type Delta = hk::DeltaParams<f64>;
pub type Alpha = continuous::AlphaParams<f64>;
pub type Bracket = poisson::PoissonTensor<f64>;
pub type Solution = elliptic::EllipticSolution<f64>;
pub type Modulus = elliptic::EllipticModulus<f64>;
