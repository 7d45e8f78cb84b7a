use serde::Serialize;

use super::{arcsn, jacobi_sn_cn_dn, phase_from_sn_cn, EllipticModulus};
use crate::error::{Error, Result};
use crate::hk::{hk_step, one_minus_f, one_minus_inv_f, DeltaParams};
use crate::linalg::{CyclicIndex, Vector3};
use crate::scalar::{lit, scaled_tol, to_f64, Real};

/// `|F₂ − 1|` below which the initial point counts as on the separatrix.
pub const SEPARATRIX_TOL: f64 = 1e-10;
/// Largest modulus accepted by [`fit_solution`].
pub const MAX_MODULUS: f64 = 0.999;
const REPRODUCTION_TOL: f64 = 1e-10;

/// Which Jacobi function drives each component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Ansatz {
    /// `x = (A₁ cn, A₂ sn, A₃ dn)`, realised when `F₂ > 1`.
    CnSnDn,
    /// `x = (A₁ dn, A₂ sn, A₃ cn)`, realised when `F₂ < 1`.
    DnSnCn,
}

impl Ansatz {
    /// Components carrying `(cn, dn)`.
    fn cn_dn_axes(self) -> (usize, usize) {
        match self {
            Ansatz::CnSnDn => (0, 2),
            Ansatz::DnSnCn => (2, 0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticSolution<T> {
    pub ansatz: Ansatz,
    pub amplitudes: Vector3<T>,
    pub modulus: EllipticModulus<T>,
    pub nu: T,
    pub phi0: T,
}

pub fn eval_solution<T: Real>(sol: &EllipticSolution<T>, n: i64) -> Vector3<T> {
    let u = sol.nu * T::from_i64(n).unwrap() + sol.phi0;
    let (s, c, d) = jacobi_sn_cn_dn(u, &sol.modulus);
    let (ic, id) = sol.ansatz.cn_dn_axes();
    let mut x = Vector3::zero();
    x[ic] = sol.amplitudes[ic] * c;
    x[1] = sol.amplitudes[1] * s;
    x[id] = sol.amplitudes[id] * d;
    x
}

fn admissible<T: Real>(name: &str, v: T, ok: bool) -> Result<T> {
    if ok && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InconsistentInitialData(format!("{name} = {} outside its admissible range", to_f64(v))))
    }
}

/// Relative residual of the three amplitude relations linking `A` to `ν/2`.
fn product_residual<T: Real>(ansatz: Ansatz, a: Vector3<T>, half: (T, T, T), m: &EllipticModulus<T>, delta: &DeltaParams<T>) -> T {
    let (s, c, d) = half;
    let k2 = m.k2();
    let (r1, r3) = match ansatz {
        Ansatz::CnSnDn => (c / (s * d), d / (k2 * s * c)),
        Ansatz::DnSnCn => (d / (k2 * s * c), c / (s * d)),
    };
    let r2 = c * d / s;
    let rel = |lhs: T, rhs: T| (lhs - rhs).abs() / (T::one() + lhs.abs());
    rel(a[0], -delta[0] * a[1] * a[2] * r1)
        .max(rel(a[1], delta[1] * a[0] * a[2] * r2))
        .max(rel(a[2], -delta[2] * a[0] * a[1] * r3))
}

/// Expresses the orbit through `x0` as Jacobi elliptic functions of the step
/// index.
///
/// Amplitude signs, the phase branch and the sign of `ν` are chosen by search:
/// the first candidate that reproduces `x0`, the next iterate and the
/// amplitude relations wins.
pub fn fit_solution<T: Real>(x0: Vector3<T>, delta: &DeltaParams<T>) -> Result<EllipticSolution<T>> {
    if !(delta[0] < T::zero() && delta[1] > T::zero() && delta[2] < T::zero()) {
        return Err(Error::WrongSignPattern);
    }
    if !x0.is_finite() {
        return Err(Error::InvalidInput("initial state must be finite".into()));
    }
    use CyclicIndex::{One, Three, Two};
    let (d1, d2, d3) = (delta[0], delta[1], delta[2]);
    let f2_gap = -one_minus_f(x0, delta, Two)?;
    if f2_gap.abs() < lit(SEPARATRIX_TOL) {
        return Err(Error::RegimeBoundary(format!("|F2 - 1| = {:e}", to_f64(f2_gap.abs()))));
    }
    let ansatz = if f2_gap > T::zero() { Ansatz::CnSnDn } else { Ansatz::DnSnCn };

    let one_f1 = one_minus_f(x0, delta, One)?;
    let one_f3 = one_minus_f(x0, delta, Three)?;
    let one_inv_f1 = one_minus_inv_f(x0, delta, One)?;
    let one_inv_f3 = one_minus_inv_f(x0, delta, Three)?;

    let a1_sq = one_f3 / (d2 * d3);
    let a3_sq = one_inv_f1 / (d1 * d2);
    let (a2_sq, k2, sn2_half) = match ansatz {
        Ansatz::CnSnDn => (one_inv_f3 / (d1 * d3), one_inv_f3 / one_f1, one_f1),
        Ansatz::DnSnCn => (one_f1 / (d1 * d3), one_f1 / one_inv_f3, one_inv_f3),
    };
    let amp_sq = Vector3::new(
        admissible("A1^2", a1_sq, a1_sq >= T::zero())?,
        admissible("A2^2", a2_sq, a2_sq >= T::zero())?,
        admissible("A3^2", a3_sq, a3_sq >= T::zero())?,
    );
    let k2 = admissible("k^2", k2, k2 > T::zero() && k2 < T::one())?;
    let sn2_half = admissible("sn^2(nu/2)", sn2_half, sn2_half > T::zero() && sn2_half <= T::one())?;
    let modulus = EllipticModulus::from_k2(k2)?;
    if modulus.k() >= lit(MAX_MODULUS) {
        return Err(Error::RegimeBoundary(format!("modulus {} too close to 1", to_f64(modulus.k()))));
    }
    let magnitudes = amp_sq.map(|v| v.sqrt());
    let half_nu = arcsn(sn2_half.sqrt(), &modulus)?;

    let x1 = hk_step(x0, delta)?;
    let tol = scaled_tol::<T>(REPRODUCTION_TOL);
    let scale = T::one() + x0.max_abs();
    let (ic, id) = ansatz.cn_dn_axes();
    let mut best: Option<(T, EllipticSolution<T>)> = None;
    for pattern in 0..8u32 {
        let amplitudes = Vector3(std::array::from_fn(|m| if pattern >> m & 1 == 1 { -magnitudes[m] } else { magnitudes[m] }));
        if amplitudes[id] * x0[id] < T::zero() {
            continue;
        }
        let sn0 = if amplitudes[1] == T::zero() { T::zero() } else { x0[1] / amplitudes[1] };
        let cn0 = if amplitudes[ic] == T::zero() { T::zero() } else { x0[ic] / amplitudes[ic] };
        let Ok(phi0) = phase_from_sn_cn(sn0, cn0, &modulus) else {
            continue;
        };
        for nu_sign in [T::one(), -T::one()] {
            let nu = (half_nu + half_nu) * nu_sign;
            let sol = EllipticSolution { ansatz, amplitudes, modulus, nu, phi0 };
            let start = (eval_solution(&sol, 0) - x0).max_abs() / scale;
            let step = (eval_solution(&sol, 1) - x1).max_abs() / scale;
            let relations = product_residual(ansatz, amplitudes, jacobi_sn_cn_dn(nu / lit(2.0), &modulus), &modulus, delta);
            let worst = start.max(step).max(relations);
            if worst < tol && best.as_ref().is_none_or(|(w, _)| worst < *w) {
                best = Some((worst, sol));
            }
        }
    }
    best.map(|(_, sol)| sol)
        .ok_or_else(|| Error::InconsistentInitialData("no sign and branch assignment reproduces the initial state".into()))
}
