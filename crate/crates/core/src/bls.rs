//! Implicit discretization `x̃_i − x_i = γ α_i (x̃_j + x_j)(x̃_k + x_k)` with
//! constant `γ = ε/4`.
//!
//! Each step is a Newton solve of three quadratic equations. The map conserves
//! the continuous integrals `G_i` exactly.

use crate::continuous::{euler_rhs, AlphaParams};
use crate::error::{Error, Result};
use crate::linalg::{CyclicIndex, Matrix3, Vector3};
use crate::scalar::{lit, to_f64, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlsConfig<T> {
    pub alpha: AlphaParams<T>,
    pub eps: T,
    pub gamma: T,
    pub newton_tol: T,
    pub max_iter: usize,
}

impl<T: Real> BlsConfig<T> {
    /// `γ = ε/4`, tolerance `1e-13`, at most 50 iterations.
    pub fn new(alpha: AlphaParams<T>, eps: T) -> Result<Self> {
        let cfg = Self { alpha, eps, gamma: eps * lit(0.25), newton_tol: lit(1e-13), max_iter: 50 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_gamma(mut self, gamma: T) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > T::zero()) {
            return Err(Error::InvalidInput("time step must be positive".into()));
        }
        if !(self.newton_tol > T::zero()) {
            return Err(Error::InvalidInput("Newton tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Residual of the defining relations for the pair `(x, x̃)`.
pub fn bls_residual<T: Real>(x: Vector3<T>, x_next: Vector3<T>, alpha: Vector3<T>, gamma: T) -> Vector3<T> {
    let s = x + x_next;
    Vector3(CyclicIndex::ALL.map(|c| {
        let (i, j, k) = c.ijk();
        x_next[i] - x[i] - gamma * alpha[i] * s[j] * s[k]
    }))
}

/// Derivative of the residual with respect to either argument; the two differ
/// only in the sign of the identity part.
fn sum_jacobian<T: Real>(s: Vector3<T>, alpha: Vector3<T>, gamma: T) -> Matrix3<T> {
    let mut m = Matrix3::zero();
    for c in CyclicIndex::ALL {
        let (i, j, k) = c.ijk();
        m.0[i][j] = -(gamma * alpha[i] * s[k]);
        m.0[i][k] = -(gamma * alpha[i] * s[j]);
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonReport<T> {
    pub solution: Vector3<T>,
    pub iterations: usize,
    pub residual: T,
}

/// Newton solve for the unknown end of the pair.
///
/// With `forward = true` the unknown is `x̃` given `x = known`; otherwise the
/// unknown is `x` given `x̃ = known`.
fn newton<T: Real>(known: Vector3<T>, guess: Vector3<T>, cfg: &BlsConfig<T>, forward: bool) -> Result<NewtonReport<T>> {
    let alpha = cfg.alpha.alpha;
    let residual = |u: Vector3<T>| {
        if forward {
            bls_residual(known, u, alpha, cfg.gamma)
        } else {
            bls_residual(u, known, alpha, cfg.gamma)
        }
    };
    let identity_sign = if forward { T::one() } else { -T::one() };

    let mut u = guess;
    let mut r = residual(u);
    let mut iterations = 0;
    let mut polished = false;
    loop {
        if r.max_abs() < cfg.newton_tol {
            // one extra correction takes the quadratically convergent
            // iterate down to rounding level
            if polished || iterations >= cfg.max_iter {
                return Ok(NewtonReport { solution: u, iterations, residual: r.max_abs() });
            }
            polished = true;
        }
        if iterations >= cfg.max_iter || !r.is_finite() {
            return Err(Error::NewtonDiverged { iterations, residual: to_f64(r.max_abs()) });
        }
        let jac = Matrix3::identity() * identity_sign + sum_jacobian(known + u, alpha, cfg.gamma);
        let step = jac.solve(r).map_err(|_| Error::SingularJacobian)?;
        let next = u - step;
        let r_next = residual(next);
        iterations += 1;
        if polished && r_next.max_abs() > r.max_abs() {
            return Ok(NewtonReport { solution: u, iterations, residual: r.max_abs() });
        }
        u = next;
        r = r_next;
    }
}

/// One step, with Newton statistics.
pub fn bls_step_report<T: Real>(x: Vector3<T>, cfg: &BlsConfig<T>) -> Result<NewtonReport<T>> {
    cfg.validate()?;
    let guess = x + euler_rhs(x, cfg.alpha.alpha) * cfg.eps;
    newton(x, guess, cfg, true)
}

pub fn bls_step<T: Real>(x: Vector3<T>, cfg: &BlsConfig<T>) -> Result<Vector3<T>> {
    bls_step_report(x, cfg).map(|r| r.solution)
}

/// Recovers `x` from `x̃` by solving the same relations for the other end.
pub fn bls_inverse_step<T: Real>(x_next: Vector3<T>, cfg: &BlsConfig<T>) -> Result<Vector3<T>> {
    cfg.validate()?;
    let guess = x_next - euler_rhs(x_next, cfg.alpha.alpha) * cfg.eps;
    newton(x_next, guess, cfg, false).map(|r| r.solution)
}
