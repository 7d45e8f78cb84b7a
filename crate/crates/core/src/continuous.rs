//! The continuous-time Euler top `ẋ_i = α_i x_j x_k`.
//!
//! Quadratic integrals `H^(β)` and `G_i`, the linear Poisson brackets
//! `{x_i, x_j} = γ_k x_k`, and a fixed-step RK4 reference integrator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CyclicIndex, Matrix3, Vector3};
use crate::scalar::{lit, Real};

/// Principal moments of inertia.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inertia<T>(Vector3<T>);

impl<T: Real> Inertia<T> {
    pub fn new(moments: Vector3<T>) -> Result<Self> {
        if moments.0.iter().all(|&m| m > T::zero() && m.is_finite()) {
            Ok(Self(moments))
        } else {
            Err(Error::NonPositiveInertia)
        }
    }

    pub fn moments(&self) -> Vector3<T> {
        self.0
    }
}

/// Which physical variables the coordinates `x_i` stand for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    /// Angular velocities `Ω_i`; `α_i = (I_j − I_k)/I_i`.
    Velocity,
    /// Angular momenta `M_i`; `α_i = 1/I_k − 1/I_j`.
    Momentum,
    /// Coefficients given directly.
    Raw,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaParams<T> {
    pub alpha: Vector3<T>,
    pub formulation: Formulation,
}

impl<T: Real> AlphaParams<T> {
    pub fn raw(alpha: Vector3<T>) -> Self {
        Self { alpha, formulation: Formulation::Raw }
    }
}

/// Coefficients of the Euler top for a body with the given inertia.
pub fn alpha_from_inertia<T: Real>(inertia: &Inertia<T>, formulation: Formulation) -> Result<AlphaParams<T>> {
    let m = inertia.moments();
    let mut alpha = Vector3::zero();
    for c in CyclicIndex::ALL {
        let (i, j, k) = c.ijk();
        alpha[i] = match formulation {
            Formulation::Velocity => (m[j] - m[k]) / m[i],
            Formulation::Momentum => T::one() / m[k] - T::one() / m[j],
            Formulation::Raw => {
                return Err(Error::InvalidInput("raw formulation has no inertia formula".into()))
            }
        };
    }
    Ok(AlphaParams { alpha, formulation })
}

/// `(α₁x₂x₃, α₂x₃x₁, α₃x₁x₂)`.
pub fn euler_rhs<T: Real>(x: Vector3<T>, alpha: Vector3<T>) -> Vector3<T> {
    Vector3([alpha[0] * x[1] * x[2], alpha[1] * x[2] * x[0], alpha[2] * x[0] * x[1]])
}

/// `H^(β) = ½ Σ β_i x_i²`.
pub fn integral_hbeta<T: Real>(x: Vector3<T>, beta: Vector3<T>) -> T {
    lit::<T>(0.5) * (beta[0] * x[0] * x[0] + beta[1] * x[1] * x[1] + beta[2] * x[2] * x[2])
}

pub fn grad_hbeta<T: Real>(x: Vector3<T>, beta: Vector3<T>) -> Vector3<T> {
    beta.zip_with(x, |b, v| b * v)
}

/// `G_i = ½(α_j x_k² − α_k x_j²)`.
pub fn integral_g<T: Real>(x: Vector3<T>, alpha: Vector3<T>, idx: CyclicIndex) -> T {
    let (_, j, k) = idx.ijk();
    lit::<T>(0.5) * (alpha[j] * x[k] * x[k] - alpha[k] * x[j] * x[j])
}

pub fn integrals_g<T: Real>(x: Vector3<T>, alpha: Vector3<T>) -> Vector3<T> {
    Vector3(CyclicIndex::ALL.map(|c| integral_g(x, alpha, c)))
}

/// Antisymmetric matrix of `{x_i, x_j} = γ_k x_k`.
pub fn linear_bracket_matrix<T: Real>(x: Vector3<T>, gamma: Vector3<T>) -> Matrix3<T> {
    let mut p = Matrix3::zero();
    for c in CyclicIndex::ALL {
        let (i, j, k) = c.ijk();
        p.0[i][j] = gamma[k] * x[k];
        p.0[j][i] = -(gamma[k] * x[k]);
    }
    p
}

/// Classical fourth-order Runge–Kutta step of length `h`.
pub fn rk4_step<T: Real>(x: Vector3<T>, alpha: Vector3<T>, h: T) -> Vector3<T> {
    let half = lit::<T>(0.5);
    let k1 = euler_rhs(x, alpha);
    let k2 = euler_rhs(x + k1 * (h * half), alpha);
    let k3 = euler_rhs(x + k2 * (h * half), alpha);
    let k4 = euler_rhs(x + k3 * h, alpha);
    let sixth = h / lit(6.0);
    x + (k1 + k2 * lit(2.0) + k3 * lit(2.0) + k4) * sixth
}

/// Two linearly independent vectors orthogonal to `v`.
pub fn orthogonal_basis<T: Real>(v: Vector3<T>) -> Result<(Vector3<T>, Vector3<T>)> {
    if v.max_abs() == T::zero() || !v.is_finite() {
        return Err(Error::ZeroVector);
    }
    // cross with the axis least aligned with v
    let axis = (0..3)
        .min_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap())
        .unwrap();
    let u = v.cross(Vector3::unit(axis));
    let w = v.cross(u);
    let scale = |a: Vector3<T>| a * (T::one() / a.norm());
    Ok((scale(u), scale(w)))
}

/// A Hamiltonian `H^(β)` paired with a linear bracket `{·,·}^(γ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonianForm<T> {
    pub name: &'static str,
    pub beta: Vector3<T>,
    pub gamma: Vector3<T>,
}

impl<T: Real> HamiltonianForm<T> {
    /// `P^(γ)(x) ∇H^(β)(x)`, the generated vector field.
    pub fn vector_field(&self, x: Vector3<T>) -> Vector3<T> {
        linear_bracket_matrix(x, self.gamma).mul_vec(grad_hbeta(x, self.beta))
    }

    /// `α_i = β_j γ_k − β_k γ_j`.
    pub fn alpha(&self) -> Vector3<T> {
        self.beta.cross(self.gamma)
    }
}

/// The two classical Hamiltonian descriptions of the top in the given
/// variables.
///
/// Each pair `(β, γ)` satisfies `β × γ = α`, so the generated field is
/// exactly `euler_rhs` under `ẋ = {x, H}`. Relative to the commonly quoted
/// brackets `{Ω_i,Ω_j} = I_k/(I_i I_j) Ω_k` and `{M_i,M_j} = M_k`, the first
/// form in each pair carries the opposite bracket sign; with the quoted sign
/// those two generate the time-reversed field.
pub fn hamiltonian_forms<T: Real>(inertia: &Inertia<T>, formulation: Formulation) -> Result<[HamiltonianForm<T>; 2]> {
    let m = inertia.moments();
    let one = T::one();
    let inv = m.map(|v| one / v);
    let cyc = |f: &dyn Fn(usize, usize, usize) -> T| Vector3(CyclicIndex::ALL.map(|c| {
        let (i, j, k) = c.ijk();
        f(i, j, k)
    }));
    match formulation {
        Formulation::Velocity => Ok([
            HamiltonianForm {
                name: "velocity: H = 1/2 sum I_i W_i^2",
                beta: m,
                // {W_i,W_j} = -I_k/(I_i I_j) W_k
                gamma: cyc(&|i, j, k| -m[i] / (m[j] * m[k])),
            },
            HamiltonianForm {
                name: "velocity: H = 1/2 sum I_i^2 W_i^2",
                beta: m.map(|v| v * v),
                gamma: cyc(&|_, j, k| one / (m[j] * m[k])),
            },
        ]),
        Formulation::Momentum => Ok([
            HamiltonianForm {
                name: "momentum: H = 1/2 sum M_i^2 / I_i",
                beta: inv,
                // {M_i,M_j} = -M_k
                gamma: Vector3::splat(-one),
            },
            HamiltonianForm {
                name: "momentum: H = 1/2 sum M_i^2",
                beta: Vector3::splat(one),
                gamma: inv,
            },
        ]),
        Formulation::Raw => Err(Error::InvalidInput("raw formulation has no Hamiltonian forms".into())),
    }
}
