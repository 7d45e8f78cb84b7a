//! Invariant Poisson structures of the HK map.
//!
//! The cubic family
//!
//! ```text
//! {x_i, x_j} = C_i δ_j x_k (1 − δ_k δ_i x_j²) − C_j δ_i x_k (1 − δ_j δ_k x_i²)
//! ```
//!
//! arises from contracting the invariant trivector `φ(x) ∂₁∧∂₂∧∂₃` with
//! `d log F_i`. All derivatives used by the verifiers are analytic.

use crate::continuous::linear_bracket_matrix;
use crate::error::{Error, Result};
use crate::hk::{grad_f, hk_step, integral_f, jacobian_matrix, DeltaParams};
use crate::linalg::{CyclicIndex, Matrix3, Vector3};
use crate::scalar::{lit, Real};

/// A bivector field on ℝ³ with analytic first derivatives.
pub trait Bivector<T: Real> {
    /// The antisymmetric matrix `P_ab(x) = {x_a, x_b}`.
    fn matrix(&self, x: Vector3<T>) -> Matrix3<T>;

    /// `[∂P/∂x₁, ∂P/∂x₂, ∂P/∂x₃]`.
    fn derivative(&self, x: Vector3<T>) -> [Matrix3<T>; 3];
}

/// Member of the cubic bracket family with coefficients `C`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonTensor<T> {
    pub c: Vector3<T>,
    pub delta: DeltaParams<T>,
}

impl<T: Real> PoissonTensor<T> {
    pub fn new(c: Vector3<T>, delta: DeltaParams<T>) -> Self {
        Self { c, delta }
    }

    /// The `i`-th basis bracket (`C = e_i`), whose Casimir is `F_i`.
    pub fn basis(idx: CyclicIndex, delta: DeltaParams<T>) -> Self {
        Self { c: Vector3::unit(idx.i()), delta }
    }
}

impl<T: Real> Bivector<T> for PoissonTensor<T> {
    fn matrix(&self, x: Vector3<T>) -> Matrix3<T> {
        let (c, d) = (self.c, &self.delta);
        let mut p = Matrix3::zero();
        for idx in CyclicIndex::ALL {
            let (i, j, k) = idx.ijk();
            let v = c[i] * d[j] * x[k] * (T::one() - d[k] * d[i] * x[j] * x[j])
                - c[j] * d[i] * x[k] * (T::one() - d[j] * d[k] * x[i] * x[i]);
            p.0[i][j] = v;
            p.0[j][i] = -v;
        }
        p
    }

    fn derivative(&self, x: Vector3<T>) -> [Matrix3<T>; 3] {
        let (c, d) = (self.c, &self.delta);
        let two = lit::<T>(2.0);
        let mut dp = [Matrix3::zero(); 3];
        for idx in CyclicIndex::ALL {
            let (i, j, k) = idx.ijk();
            let mut g = Vector3::zero();
            g[k] = c[i] * d[j] * (T::one() - d[k] * d[i] * x[j] * x[j]) - c[j] * d[i] * (T::one() - d[j] * d[k] * x[i] * x[i]);
            g[j] = -two * c[i] * d[i] * d[j] * d[k] * x[k] * x[j];
            g[i] = two * c[j] * d[i] * d[j] * d[k] * x[k] * x[i];
            for l in 0..3 {
                dp[l].0[i][j] = g[l];
                dp[l].0[j][i] = -g[l];
            }
        }
        dp
    }
}

/// The linear bracket `{x_i, x_j} = γ_k x_k` of the continuous top.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearBracket<T> {
    pub gamma: Vector3<T>,
}

impl<T: Real> Bivector<T> for LinearBracket<T> {
    fn matrix(&self, x: Vector3<T>) -> Matrix3<T> {
        linear_bracket_matrix(x, self.gamma)
    }

    fn derivative(&self, _x: Vector3<T>) -> [Matrix3<T>; 3] {
        let mut dp = [Matrix3::zero(); 3];
        for idx in CyclicIndex::ALL {
            let (i, j, k) = idx.ijk();
            dp[k].0[i][j] = self.gamma[k];
            dp[k].0[j][i] = -self.gamma[k];
        }
        dp
    }
}

/// `base + shift · x` in vector form, i.e. `{x_j, x_k} += shift · x_i`.
///
/// Not Poisson for generic `base`; serves as a negative control for the
/// Jacobi verifier.
#[derive(Clone, Copy, Debug)]
pub struct ShiftedBivector<B, T> {
    pub base: B,
    pub shift: T,
}

impl<T: Real, B: Bivector<T>> Bivector<T> for ShiftedBivector<B, T> {
    fn matrix(&self, x: Vector3<T>) -> Matrix3<T> {
        self.base.matrix(x) + linear_bracket_matrix(x, Vector3::splat(self.shift))
    }

    fn derivative(&self, x: Vector3<T>) -> [Matrix3<T>; 3] {
        let extra = LinearBracket { gamma: Vector3::splat(self.shift) }.derivative(x);
        let base = self.base.derivative(x);
        [base[0] + extra[0], base[1] + extra[1], base[2] + extra[2]]
    }
}

/// `bracket_matrix(P, x)`.
pub fn bracket_matrix<T: Real>(p: &PoissonTensor<T>, x: Vector3<T>) -> Matrix3<T> {
    p.matrix(x)
}

/// Largest component of the Jacobiator
/// `Σ_l (P_al ∂_l P_bc + P_bl ∂_l P_ca + P_cl ∂_l P_ab)` over all index triples.
pub fn jacobi_residual<T: Real, B: Bivector<T> + ?Sized>(p: &B, x: Vector3<T>) -> T {
    let m = p.matrix(x);
    let dp = p.derivative(x);
    let mut worst = T::zero();
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let mut s = T::zero();
                for (l, dl) in dp.iter().enumerate() {
                    s = s + m.0[a][l] * dl.0[b][c] + m.0[b][l] * dl.0[c][a] + m.0[c][l] * dl.0[a][b];
                }
                worst = worst.max(s.abs());
            }
        }
    }
    worst
}

/// `max |DΦ(x) P(x) DΦ(x)ᵀ − P(Φ(x))|` for the HK map `Φ`.
pub fn invariance_residual<T: Real, B: Bivector<T> + ?Sized>(p: &B, x: Vector3<T>, delta: &DeltaParams<T>) -> Result<T> {
    let jac = jacobian_matrix(x, delta)?;
    let pushed = jac * p.matrix(x) * jac.transpose();
    let x_next = hk_step(x, delta)?;
    Ok((pushed - p.matrix(x_next)).max_abs())
}

/// `max |P_i(x) ∇F_i(x)|` for the basis bracket `P_i`.
pub fn casimir_residual<T: Real>(idx: CyclicIndex, x: Vector3<T>, delta: &DeltaParams<T>) -> Result<T> {
    let p = PoissonTensor::basis(idx, *delta);
    Ok(p.matrix(x).mul_vec(grad_f(x, delta, idx)?).max_abs())
}

/// Coefficients `(C_i, C_j, C_k) = (δ_i/F_j, δ_j F_i, δ_k)` placed by `idx`.
pub fn dependence_coefficients<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>, idx: CyclicIndex) -> Result<Vector3<T>> {
    let (i, j, k) = idx.ijk();
    let fi = integral_f(x, delta, idx)?;
    let fj = integral_f(x, delta, idx.next())?;
    if fj == T::zero() {
        return Err(Error::DenominatorVanishes { value: 0.0 });
    }
    let mut c = Vector3::zero();
    c[i] = delta[i] / fj;
    c[j] = delta[j] * fi;
    c[k] = delta[k];
    Ok(c)
}

/// Largest entry of the bracket combination with integral-valued coefficients
/// from [`dependence_coefficients`]; it vanishes identically.
pub fn dependence_residual<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>, idx: CyclicIndex) -> Result<T> {
    let c = dependence_coefficients(x, delta, idx)?;
    Ok(PoissonTensor::new(c, *delta).matrix(x).max_abs())
}

/// A scalar function with an analytic gradient.
pub struct ScalarField<'a, T> {
    value: Box<dyn Fn(Vector3<T>) -> T + Send + Sync + 'a>,
    gradient: Box<dyn Fn(Vector3<T>) -> Vector3<T> + Send + Sync + 'a>,
}

impl<'a, T: Real> ScalarField<'a, T> {
    pub fn new(
        value: impl Fn(Vector3<T>) -> T + Send + Sync + 'a,
        gradient: impl Fn(Vector3<T>) -> Vector3<T> + Send + Sync + 'a,
    ) -> Self {
        Self { value: Box::new(value), gradient: Box::new(gradient) }
    }

    pub fn constant(c: T) -> Self {
        Self::new(move |_| c, |_| Vector3::zero())
    }

    /// `log F_i`, meaningful where `F_i > 0`.
    pub fn log_f(delta: DeltaParams<T>, idx: CyclicIndex) -> Self {
        Self::new(
            move |x| integral_f(x, &delta, idx).map(|f| f.ln()).unwrap_or(T::nan()),
            move |x| match (grad_f(x, &delta, idx), integral_f(x, &delta, idx)) {
                (Ok(g), Ok(f)) => g * (T::one() / f),
                _ => Vector3::splat(T::nan()),
            },
        )
    }

    pub fn value(&self, x: Vector3<T>) -> T {
        (self.value)(x)
    }

    pub fn gradient(&self, x: Vector3<T>) -> Vector3<T> {
        (self.gradient)(x)
    }
}

/// `{x_i, x_j} = φ(x) ∂I/∂x_k`: the bivector `φ ∂₁∧∂₂∧∂₃ ⌟ dI`.
pub fn bracket_from_density<T: Real>(phi: T, integral: &ScalarField<'_, T>, x: Vector3<T>) -> Matrix3<T> {
    let g = integral.gradient(x);
    let mut p = Matrix3::zero();
    for idx in CyclicIndex::ALL {
        let (i, j, k) = idx.ijk();
        p.0[i][j] = phi * g[k];
        p.0[j][i] = -(phi * g[k]);
    }
    p
}

/// Density paired with `log F_i` that reproduces the basis bracket `P_i`:
/// `(1 − δ_kδ_i x_j²)(1 − δ_iδ_j x_k²) / (2δ_i)`.
pub fn log_f_density<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>, idx: CyclicIndex) -> Result<T> {
    let (i, j, k) = idx.ijk();
    if delta[i] == T::zero() {
        return Err(Error::DegenerateInstance(format!("delta_{} vanishes", idx.label())));
    }
    let dj = T::one() - delta[k] * delta[i] * x[j] * x[j];
    let dk = T::one() - delta[i] * delta[j] * x[k] * x[k];
    Ok(dj * dk / (lit::<T>(2.0) * delta[i]))
}

/// `γ` of the linear bracket that `P_i` tends to: `e_i × α`.
pub fn limit_gamma<T: Real>(alpha: Vector3<T>, idx: CyclicIndex) -> Vector3<T> {
    Vector3::unit(idx.i()).cross(alpha)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuumLimit<T> {
    /// `max |P_i(x; εα/2) − (ε/2) P^(γ_i)(x)|` per step size.
    pub remainders: Vec<T>,
    /// Fitted order of the remainder; `None` when every remainder is zero.
    pub order: Option<T>,
}

pub fn continuum_limit_check<T: Real>(x: Vector3<T>, alpha: Vector3<T>, idx: CyclicIndex, eps_list: &[T]) -> Result<ContinuumLimit<T>> {
    if eps_list.len() < 2 || eps_list.windows(2).any(|w| !(w[1] < w[0])) || !(eps_list[eps_list.len() - 1] > T::zero()) {
        return Err(Error::InvalidInput("step sizes must be positive and decreasing".into()));
    }
    let gamma = limit_gamma(alpha, idx);
    let half = lit::<T>(0.5);
    let remainders = eps_list
        .iter()
        .map(|&eps| {
            let p = PoissonTensor::basis(idx, DeltaParams::from_alpha(alpha, eps)?);
            Ok((p.matrix(x) - linear_bracket_matrix(x, gamma) * (eps * half)).max_abs())
        })
        .collect::<Result<Vec<T>>>()?;
    let order = if remainders.iter().all(|r| *r == T::zero()) {
        None
    } else {
        Some(crate::convergence::fit_order(eps_list, &remainders)?)
    };
    Ok(ContinuumLimit { remainders, order })
}
