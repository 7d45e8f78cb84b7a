//! Observed convergence order of one-step maps against a fine RK4 reference.

use serde::{Deserialize, Serialize};

use crate::bls::{bls_step, BlsConfig};
use crate::continuous::{rk4_step, AlphaParams};
use crate::error::{Error, Result};
use crate::hk::{hk_step, DeltaParams};
use crate::linalg::Vector3;
use crate::scalar::{lit, Real};

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope<T: Real>(xs: &[T], ys: &[T]) -> Result<T> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidInput("slope fit needs at least two paired points".into()));
    }
    if ys.iter().chain(xs).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInstance("non-finite value in slope fit".into()));
    }
    let n = T::from_usize(xs.len()).unwrap();
    let mx = xs.iter().fold(T::zero(), |a, &b| a + b) / n;
    let my = ys.iter().fold(T::zero(), |a, &b| a + b) / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
    }
    if sxx == T::zero() {
        return Err(Error::DegenerateInstance("abscissae coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Slope of `log(err)` against `log(h)`.
pub fn fit_order<T: Real>(steps: &[T], errors: &[T]) -> Result<T> {
    let xs: Vec<T> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<T> = errors.iter().map(|e| e.ln()).collect();
    fit_slope(&xs, &ys)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Hk,
    Bls,
    Rk4,
}

/// Advances `x0` to time `final_time` with constant steps `eps`.
///
/// `final_time / eps` must be (close to) an integer.
pub fn integrate<T: Real>(method: Integrator, x0: Vector3<T>, alpha: Vector3<T>, eps: T, final_time: T) -> Result<Vector3<T>> {
    let steps_f = (final_time / eps).round();
    if ((steps_f * eps - final_time) / final_time).abs() > lit(1e-9) {
        return Err(Error::InvalidInput("final time must be an integer multiple of the step".into()));
    }
    let steps = steps_f.to_usize().unwrap();
    let mut x = x0;
    match method {
        Integrator::Rk4 => {
            for _ in 0..steps {
                x = rk4_step(x, alpha, eps);
            }
        }
        Integrator::Hk => {
            let delta = DeltaParams::from_alpha(alpha, eps)?;
            for _ in 0..steps {
                x = hk_step(x, &delta)?;
            }
        }
        Integrator::Bls => {
            let cfg = BlsConfig::new(AlphaParams::raw(alpha), eps)?;
            for _ in 0..steps {
                x = bls_step(x, &cfg)?;
            }
        }
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderStudy {
    pub method: Integrator,
    pub final_time: f64,
    pub reference_step: f64,
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    pub observed_order: f64,
}

/// Integrates to `final_time` with each step size and fits the global order
/// against RK4 with step `min(eps) / 64`.
pub fn order_study(method: Integrator, x0: Vector3<f64>, alpha: Vector3<f64>, eps_list: &[f64], final_time: f64) -> Result<OrderStudy> {
    if eps_list.len() < 4 || eps_list.windows(2).any(|w| !(w[1] < w[0])) || !(eps_list[eps_list.len() - 1] > 0.0) {
        return Err(Error::InvalidInput("need at least four positive decreasing step sizes".into()));
    }
    let h_ref = eps_list[eps_list.len() - 1] / 64.0;
    let reference = integrate(Integrator::Rk4, x0, alpha, h_ref, final_time)?;
    let errors = eps_list
        .iter()
        .map(|&eps| Ok((integrate(method, x0, alpha, eps, final_time)? - reference).max_abs()))
        .collect::<Result<Vec<f64>>>()?;
    let observed_order = fit_order(eps_list, &errors)?;
    Ok(OrderStudy {
        method,
        final_time,
        reference_step: h_ref,
        steps: eps_list.to_vec(),
        errors,
        observed_order,
    })
}
