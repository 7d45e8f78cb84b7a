//! The Hirota–Kimura map `x̃_i − x_i = δ_i (x̃_j x_k + x_j x̃_k)`.
//!
//! The map is linear in `x̃`, so one step is a single 3×3 solve
//! `x̃ = A(x,δ)⁻¹ x`. Its inverse is the same map with `−δ`. This module also
//! carries the conserved quantities `F_i` and `H_i^(β)`, the ratio identities
//! used to prove measure preservation, the invariant densities, and the Jonas
//! map, which is the HK map at `δ = (−1,−1,−1)` up to an overall sign.
//!
//! Throughout, `D_m(x) = 1 − δ_{m+1} δ_{m+2} x_m²` (indices mod 3), so that
//! `F_i = D_j / D_k`.

use serde::{Deserialize, Serialize};

use crate::continuous::integral_hbeta;
use crate::error::{Error, Result};
use crate::linalg::{CyclicIndex, Matrix3, Vector3};
use crate::scalar::{lit, scaled_tol, to_f64, Real};
use crate::tolerance::DriftTracker;

/// Threshold on `|det A|` relative to `1 + ‖δ‖²‖x‖⁴`.
pub const INDETERMINACY_TOL: f64 = 1e-12;
/// Denominators smaller than this are treated as poles.
pub const DENOMINATOR_TOL: f64 = 1e-14;
/// Relative tolerance for `β · δ = 0`.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

/// Parameters `δ` of the discrete map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaParams<T>(Vector3<T>);

impl<T: Real> DeltaParams<T> {
    pub fn new(delta: Vector3<T>) -> Result<Self> {
        if delta.is_finite() {
            Ok(Self(delta))
        } else {
            Err(Error::InvalidInput("delta must be finite".into()))
        }
    }

    pub fn zero() -> Self {
        Self(Vector3::zero())
    }

    /// `δ_i = ε α_i / 2`.
    pub fn from_alpha(alpha: Vector3<T>, eps: T) -> Result<Self> {
        Self::new(alpha * (eps * lit(0.5)))
    }

    pub fn vector(&self) -> Vector3<T> {
        self.0
    }

    pub fn negated(&self) -> Self {
        Self(-self.0)
    }
}

impl<T> std::ops::Index<usize> for DeltaParams<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0 .0[i]
    }
}

/// `δ` together with the `(α, ε)` it was built from, when known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HkContext<T> {
    pub delta: DeltaParams<T>,
    pub source: Option<(Vector3<T>, T)>,
}

impl<T: Real> HkContext<T> {
    pub fn from_delta(delta: DeltaParams<T>) -> Self {
        Self { delta, source: None }
    }

    pub fn from_alpha(alpha: Vector3<T>, eps: T) -> Result<Self> {
        if !(eps > T::zero()) {
            return Err(Error::InvalidInput("time step must be positive".into()));
        }
        Ok(Self { delta: DeltaParams::from_alpha(alpha, eps)?, source: Some((alpha, eps)) })
    }
}

/// `A(x,δ)`: unit diagonal, row `i` has `−δ_i x_k` in column `j` and
/// `−δ_i x_j` in column `k`.
pub fn build_a<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>) -> Matrix3<T> {
    let mut a = Matrix3::identity();
    for c in CyclicIndex::ALL {
        let (i, j, k) = c.ijk();
        a.0[i][j] = -(delta[i] * x[k]);
        a.0[i][k] = -(delta[i] * x[j]);
    }
    a
}

/// Closed-form `det A(x,δ)`:
/// `1 − δ_jδ_k x_i² − δ_iδ_k x_j² − δ_iδ_j x_k² − 2 δ_iδ_jδ_k x₁x₂x₃`.
pub fn det_a<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>) -> T {
    let (d1, d2, d3) = (delta[0], delta[1], delta[2]);
    T::one()
        - d2 * d3 * x[0] * x[0]
        - d1 * d3 * x[1] * x[1]
        - d1 * d2 * x[2] * x[2]
        - lit::<T>(2.0) * d1 * d2 * d3 * x.product()
}

fn check_regular<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>) -> Result<()> {
    let det = det_a(x, delta);
    let dn = delta.vector().norm();
    let xn = x.norm();
    let scale = T::one() + dn * dn * xn * xn * xn * xn;
    if !(det.abs() >= scaled_tol::<T>(INDETERMINACY_TOL) * scale) {
        return Err(Error::SingularMatrix { pivot: to_f64(det) });
    }
    Ok(())
}

/// One step of the map: `x̃ = A(x,δ)⁻¹ x`.
pub fn hk_step<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>) -> Result<Vector3<T>> {
    check_regular(x, delta)?;
    build_a(x, delta).solve(x)
}

/// Inverse step, `x = A(x̃,−δ)⁻¹ x̃`.
pub fn hk_step_inverse<T: Real>(x_next: Vector3<T>, delta: &DeltaParams<T>) -> Result<Vector3<T>> {
    hk_step(x_next, &delta.negated())
}

/// Residuals of the three defining relations for the pair `(x, x̃)`.
pub fn hk_residual<T: Real>(x: Vector3<T>, x_next: Vector3<T>, delta: &DeltaParams<T>) -> Vector3<T> {
    Vector3(CyclicIndex::ALL.map(|c| {
        let (i, j, k) = c.ijk();
        x_next[i] - x[i] - delta[i] * (x_next[j] * x[k] + x[j] * x_next[k])
    }))
}

/// `∂x̃/∂x = A(x,δ)⁻¹ A(x̃,−δ)`.
pub fn jacobian_matrix<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>) -> Result<Matrix3<T>> {
    let x_next = hk_step(x, delta)?;
    build_a(x, delta).solve_matrix(&build_a(x_next, &delta.negated()))
}

/// `D_m(x) = 1 − δ_{m+1} δ_{m+2} x_m²`.
fn d_factor<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>, m: usize) -> T {
    T::one() - delta[(m + 1) % 3] * delta[(m + 2) % 3] * x[m] * x[m]
}

fn nonzero<T: Real>(v: T) -> Result<T> {
    if v.abs() < scaled_tol::<T>(DENOMINATOR_TOL) || !v.is_finite() {
        Err(Error::DenominatorVanishes { value: to_f64(v) })
    } else {
        Ok(v)
    }
}

/// `F_i = (1 − δ_kδ_i x_j²)/(1 − δ_iδ_j x_k²)`.
pub fn integral_f<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>, idx: CyclicIndex) -> Result<T> {
    let (_, j, k) = idx.ijk();
    Ok(d_factor(x, delta, j) / nonzero(d_factor(x, delta, k))?)
}

pub fn integrals_f<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>) -> Result<Vector3<T>> {
    Ok(Vector3([
        integral_f(x, delta, CyclicIndex::One)?,
        integral_f(x, delta, CyclicIndex::Two)?,
        integral_f(x, delta, CyclicIndex::Three)?,
    ]))
}

/// `1 − F_i`, evaluated without cancellation.
pub fn one_minus_f<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>, idx: CyclicIndex) -> Result<T> {
    let (i, j, k) = idx.ijk();
    let num = delta[i] * (delta[k] * x[j] * x[j] - delta[j] * x[k] * x[k]);
    Ok(num / nonzero(d_factor(x, delta, k))?)
}

/// `1 − 1/F_i`, evaluated without cancellation.
pub fn one_minus_inv_f<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>, idx: CyclicIndex) -> Result<T> {
    let (i, j, k) = idx.ijk();
    let num = delta[i] * (delta[j] * x[k] * x[k] - delta[k] * x[j] * x[j]);
    Ok(num / nonzero(d_factor(x, delta, j))?)
}

/// Analytic gradient of `F_i`.
pub fn grad_f<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>, idx: CyclicIndex) -> Result<Vector3<T>> {
    let (i, j, k) = idx.ijk();
    let two = lit::<T>(2.0);
    let num = d_factor(x, delta, j);
    let den = nonzero(d_factor(x, delta, k))?;
    let mut g = Vector3::zero();
    // ∂D_j/∂x_j = −2 δ_k δ_i x_j, ∂D_k/∂x_k = −2 δ_i δ_j x_k
    g[j] = -two * delta[k] * delta[i] * x[j] / den;
    g[k] = num * two * delta[i] * delta[j] * x[k] / (den * den);
    Ok(g)
}

/// `H_i^(β) = H^(β) / (1 − δ_jδ_k x_i²)` for `β ⊥ δ`.
pub fn integral_h<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>, beta: Vector3<T>, idx: CyclicIndex) -> Result<T> {
    let dot = beta.dot(delta.vector());
    if dot.abs() > scaled_tol::<T>(ORTHOGONALITY_TOL) * beta.norm() * delta.vector().norm() {
        return Err(Error::NotOrthogonal { dot: to_f64(dot) });
    }
    Ok(integral_hbeta(x, beta) / nonzero(d_factor(x, delta, idx.i()))?)
}

/// A vector orthogonal to `δ`, `(δ₂, −δ₁, 0)` unless that vanishes.
pub fn default_beta<T: Real>(delta: &DeltaParams<T>) -> Vector3<T> {
    let d = delta.vector();
    let candidates = [Vector3::new(d[1], -d[0], T::zero()), Vector3::new(T::zero(), d[2], -d[1]), Vector3::new(-d[2], T::zero(), d[0])];
    candidates
        .into_iter()
        .find(|v| v.max_abs() > T::zero())
        .unwrap_or(Vector3::new(T::one(), T::zero(), T::zero()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LemmaSign {
    Plus,
    Minus,
}

impl LemmaSign {
    fn apply<T: Real>(self, v: T) -> T {
        match self {
            Self::Plus => v,
            Self::Minus => -v,
        }
    }
}

/// `(x_i ± δ_i x_j x_k) / (1 − δ_jδ_k x_i²)`.
///
/// The minus ratio after one step equals the plus ratio before it.
pub fn lemma_ratio<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>, idx: CyclicIndex, sign: LemmaSign) -> Result<T> {
    let (i, j, k) = idx.ijk();
    let num = x[i] + sign.apply(delta[i] * x[j] * x[k]);
    Ok(num / nonzero(d_factor(x, delta, i))?)
}

/// `(x_i ± δ_i x_j x_k)² / ((1 − δ_iδ_k x_j²)(1 − δ_iδ_j x_k²))`.
pub fn minors_ratio<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>, idx: CyclicIndex, sign: LemmaSign) -> Result<T> {
    let (i, j, k) = idx.ijk();
    let num = x[i] + sign.apply(delta[i] * x[j] * x[k]);
    Ok(num * num / nonzero(d_factor(x, delta, j) * d_factor(x, delta, k))?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityForm {
    /// `(1 − δ_iδ_j x_k²)(1 − δ_jδ_k x_i²)`
    Product,
    /// `(1 − δ_iδ_j x_k²)²`
    Square,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityChoice {
    pub form: DensityForm,
    pub index: CyclicIndex,
}

impl DensityChoice {
    /// The six admissible densities.
    pub fn all() -> [DensityChoice; 6] {
        let mut out = [DensityChoice { form: DensityForm::Product, index: CyclicIndex::One }; 6];
        for (n, form) in [DensityForm::Product, DensityForm::Square].into_iter().enumerate() {
            for (m, index) in CyclicIndex::ALL.into_iter().enumerate() {
                out[3 * n + m] = DensityChoice { form, index };
            }
        }
        out
    }
}

/// Density `φ(x)` of the invariant volume form `φ(x)⁻¹ dx₁∧dx₂∧dx₃`.
pub fn density<T: Real>(x: Vector3<T>, delta: &DeltaParams<T>, choice: DensityChoice) -> T {
    let (i, _, k) = choice.index.ijk();
    let dk = d_factor(x, delta, k);
    match choice.form {
        DensityForm::Product => dk * d_factor(x, delta, i),
        DensityForm::Square => dk * dk,
    }
}

/// One step of `x + x̃ + y z̃ + z ỹ = 0` (and cyclic), solved as a linear
/// system in `x̃`.
pub fn jonas_step<T: Real>(x: Vector3<T>) -> Result<Vector3<T>> {
    let mut m = Matrix3::identity();
    for c in CyclicIndex::ALL {
        let (i, j, k) = c.ijk();
        m.0[i][j] = x[k];
        m.0[i][k] = x[j];
    }
    m.solve(-x)
}

pub fn jonas_residual<T: Real>(x: Vector3<T>, x_next: Vector3<T>) -> Vector3<T> {
    Vector3(CyclicIndex::ALL.map(|c| {
        let (i, j, k) = c.ijk();
        x[i] + x_next[i] + x[j] * x_next[k] + x[k] * x_next[j]
    }))
}

/// `δ = (−1,−1,−1)`, the parameters under which the Jonas map is `−HK`.
pub fn jonas_delta<T: Real>() -> DeltaParams<T> {
    DeltaParams(Vector3::splat(-T::one()))
}

/// An orbit of the HK map together with per-step bookkeeping.
#[derive(Clone, Debug)]
pub struct Orbit<T> {
    pub states: Vec<Vector3<T>>,
    /// Steps `n` at which `det A(x_n,δ)` has the opposite sign from `det A(x_0,δ)`.
    pub det_sign_changes: Vec<usize>,
}

/// Iterates the map `steps` times from `x0`.
pub fn hk_orbit<T: Real>(x0: Vector3<T>, delta: &DeltaParams<T>, steps: usize) -> Result<Orbit<T>> {
    let mut states = Vec::with_capacity(steps + 1);
    let mut det_sign_changes = Vec::new();
    let sign0 = det_a(x0, delta).signum();
    let mut x = x0;
    states.push(x);
    for n in 1..=steps {
        x = hk_step(x, delta)?;
        if det_a(x, delta).signum() != sign0 {
            det_sign_changes.push(n);
        }
        states.push(x);
    }
    Ok(Orbit { states, det_sign_changes })
}

/// Max and RMS drift of `F₁,F₂,F₃` along an orbit, relative to step 0.
pub fn f_drift<T: Real>(orbit: &[Vector3<T>], delta: &DeltaParams<T>, threshold: f64) -> Result<crate::tolerance::DriftStats> {
    let f0 = integrals_f(orbit[0], delta)?.to_f64();
    let mut tracker = DriftTracker::new(f0.to_vec(), threshold);
    for (n, x) in orbit.iter().enumerate() {
        tracker.record(n, &integrals_f(*x, delta)?.to_f64());
    }
    Ok(tracker.finish())
}

/// Fitted order of `(F_i − 1)/(ε²α_i(α_j x_k² − α_k x_j²)/4) − 1 → 0`.
///
/// The normaliser equals `ε²α_i G_i/2` with `G_i = ½(α_j x_k² − α_k x_j²)`,
/// which is the exact leading coefficient of `F_i − 1` for `δ = εα/2`.
/// Returns the log-log slope of that remainder for each `i`.
pub fn f_expansion_check<T: Real>(x: Vector3<T>, alpha: Vector3<T>, eps_list: &[T]) -> Result<Vector3<T>> {
    let scan = f_expansion_scan(x, alpha, eps_list)?;
    let logs: Vec<T> = eps_list.iter().map(|e| e.ln()).collect();
    let mut slopes = Vector3::zero();
    for m in 0..3 {
        let ys: Vec<T> = scan.iter().map(|r| (r[m] - T::one()).abs().ln()).collect();
        slopes[m] = crate::convergence::fit_slope(&logs, &ys)?;
    }
    Ok(slopes)
}

/// Ratios `r_i(ε)` for each `ε` in the list.
pub fn f_expansion_scan<T: Real>(x: Vector3<T>, alpha: Vector3<T>, eps_list: &[T]) -> Result<Vec<Vector3<T>>> {
    if eps_list.len() < 4 {
        return Err(Error::InvalidInput("need at least four step sizes".into()));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) || !(eps_list[eps_list.len() - 1] > T::zero()) {
        return Err(Error::InvalidInput("step sizes must be positive and decreasing".into()));
    }
    let gap_tol = scaled_tol::<T>(1e-12);
    for c in CyclicIndex::ALL {
        let g = crate::continuous::integral_g(x, alpha, c);
        if g.abs() <= gap_tol * (T::one() + x.dot(x)) || alpha[c.i()] == T::zero() {
            return Err(Error::DegenerateInstance(format!("G_{} vanishes at this point", c.label())));
        }
    }
    let quarter = lit::<T>(0.25);
    eps_list
        .iter()
        .map(|&eps| {
            let delta = DeltaParams::from_alpha(alpha, eps)?;
            let mut r = Vector3::zero();
            for c in CyclicIndex::ALL {
                let (i, j, k) = c.ijk();
                let lead = eps * eps * alpha[i] * (alpha[j] * x[k] * x[k] - alpha[k] * x[j] * x[j]) * quarter;
                r[i] = -one_minus_f(x, &delta, c)? / lead;
            }
            Ok(r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::StateSampler;

    type V = Vector3<f64>;

    fn d(a: f64, b: f64, c: f64) -> DeltaParams<f64> {
        DeltaParams::new(V::new(a, b, c)).unwrap()
    }

    fn reference_delta() -> DeltaParams<f64> {
        d(-1.0 / 120.0, 1.0 / 30.0, -1.0 / 40.0)
    }

    fn close(a: V, b: V, tol: f64) -> bool {
        (0..3).all(|m| crate::tolerance::mixed_close(a[m], b[m], tol))
    }

    #[test]
    fn build_a_examples() {
        assert_eq!(build_a(V::new(1.0, 2.0, 3.0), &DeltaParams::zero()), Matrix3::identity());
        assert_eq!(build_a(V::zero(), &d(0.3, -0.2, 0.1)), Matrix3::identity());
        let a = build_a(V::splat(1.0), &d(0.25, 0.25, 0.25));
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a.0[i][j], if i == j { 1.0 } else { -0.25 });
            }
        }
        let a = build_a(V::new(1.0, 2.0, 3.0), &d(0.1, 0.2, 0.3));
        assert_eq!(a.0[0], [1.0, -0.1 * 3.0, -0.1 * 2.0]);
        assert_eq!(a.0[1], [-0.2 * 3.0, 1.0, -0.2 * 1.0]);
        assert_eq!(a.0[2], [-0.3 * 2.0, -0.3 * 1.0, 1.0]);
    }

    #[test]
    fn step_examples() {
        let x = V::new(1.0, 2.0, 3.0);
        assert_eq!(hk_step(x, &DeltaParams::zero()).unwrap(), x);
        let axis = V::new(1.7, 0.0, 0.0);
        assert_eq!(hk_step(axis, &d(-0.3, 0.4, 0.2)).unwrap(), axis);

        let delta = d(-0.1, 0.15, -0.05);
        let x = V::new(1.0, 0.8, 0.6);
        let xt = hk_step(x, &delta).unwrap();
        let r = hk_residual(x, xt, &delta);
        assert!(r.max_abs() < 1e-15);
        let back = hk_step_inverse(xt, &delta).unwrap();
        assert!((back - x).max_abs() < 1e-15);
    }

    #[test]
    fn indeterminacy_locus_is_reported() {
        // det A = 1 − 3d² − 2d³ vanishes at d = 1/2 on the diagonal
        let delta = d(0.5, 0.5, 0.5);
        let x = V::splat(1.0);
        assert_eq!(det_a(x, &delta), 0.0);
        assert!(matches!(hk_step(x, &delta), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn det_a_formula() {
        assert_eq!(det_a(V::new(3.0, 1.0, 2.0), &DeltaParams::zero()), 1.0);
        for dd in [-0.3, 0.1, 0.2] {
            let expect = 1.0 - 3.0 * dd * dd - 2.0 * dd * dd * dd;
            assert!((det_a(V::splat(1.0), &d(dd, dd, dd)) - expect).abs() < 1e-15);
        }
        let mut s = StateSampler::new(21);
        for _ in 0..1000 {
            let x = s.next_state(2.0f64);
            let delta = DeltaParams::new(s.next_state(0.3f64)).unwrap();
            let cof = build_a(x, &delta).det();
            assert!((det_a(x, &delta) - cof).abs() < 1e-13);
        }
    }

    #[test]
    fn round_trip_scan() {
        let mut s = StateSampler::new(22);
        let mut worst: f64 = 0.0;
        let mut n = 0;
        while n < 1000 {
            let x = s.next_state(2.0f64);
            let delta = DeltaParams::new(s.next_state(0.2f64)).unwrap();
            if delta.vector().norm() * x.dot(x) >= 0.5 {
                continue;
            }
            n += 1;
            let back = hk_step_inverse(hk_step(x, &delta).unwrap(), &delta).unwrap();
            worst = worst.max((back - x).max_abs());
        }
        assert!(worst < 1e-11, "{worst}");
    }

    #[test]
    fn jacobian_matches_finite_differences_and_determinant_formula() {
        assert_eq!(jacobian_matrix(V::new(0.3, 0.2, 0.1), &DeltaParams::zero()).unwrap(), Matrix3::identity());
        let mut s = StateSampler::new(23);
        for _ in 0..100 {
            let x = s.next_state(1.5f64);
            let delta = DeltaParams::new(s.next_state(0.2f64)).unwrap();
            let jac = jacobian_matrix(x, &delta).unwrap();
            let h = 1e-6;
            for col in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[col] += h;
                xm[col] -= h;
                let fd = (hk_step(xp, &delta).unwrap() - hk_step(xm, &delta).unwrap()) * (0.5 / h);
                for row in 0..3 {
                    assert!((fd[row] - jac.0[row][col]).abs() < 1e-6);
                }
            }
            let xt = hk_step(x, &delta).unwrap();
            let ratio = det_a(xt, &delta.negated()) / det_a(x, &delta);
            assert!((jac.det() - ratio).abs() < 1e-12 * (1.0 + ratio.abs()));
        }
    }

    #[test]
    fn f_examples() {
        let delta = d(-0.1, 0.2, -0.1);
        for c in CyclicIndex::ALL {
            assert_eq!(integral_f(V::zero(), &delta, c).unwrap(), 1.0);
        }
        let x = V::new(1.0, 0.0, 0.0);
        assert_eq!(integral_f(x, &delta, CyclicIndex::One).unwrap(), 1.0);
        assert!((integral_f(x, &delta, CyclicIndex::Two).unwrap() - 1.0 / 1.02).abs() < 1e-15);
        assert!((integral_f(x, &delta, CyclicIndex::Three).unwrap() - 1.02).abs() < 1e-15);
    }

    #[test]
    fn f_pole_is_an_error() {
        // D_3 = 1 − δ1δ2 x3² = 0
        let delta = d(1.0, 1.0, 0.0);
        let x = V::new(0.0, 0.0, 1.0);
        assert!(matches!(integral_f(x, &delta, CyclicIndex::One), Err(Error::DenominatorVanishes { .. })));
    }

    #[test]
    fn f_product_and_conservation() {
        let mut s = StateSampler::new(24);
        for _ in 0..1000 {
            let x = s.next_state(2.0f64);
            let delta = DeltaParams::new(s.next_state(0.1f64)).unwrap();
            let f = integrals_f(x, &delta).unwrap();
            assert!((f.product() - 1.0).abs() < 1e-13);
            let ft = integrals_f(hk_step(x, &delta).unwrap(), &delta).unwrap();
            assert!(close(f, ft, 1e-12));
            for c in CyclicIndex::ALL {
                let a = one_minus_f(x, &delta, c).unwrap();
                let b = 1.0 - f[c.i()];
                assert!((a - b).abs() < 1e-15);
                let a = one_minus_inv_f(x, &delta, c).unwrap();
                let b = 1.0 - 1.0 / f[c.i()];
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn grad_f_matches_finite_differences() {
        let mut s = StateSampler::new(25);
        for _ in 0..100 {
            let x = s.next_state(2.0f64);
            let delta = DeltaParams::new(s.next_state(0.2f64)).unwrap();
            for c in CyclicIndex::ALL {
                let g = grad_f(x, &delta, c).unwrap();
                for m in 0..3 {
                    let h = 1e-6;
                    let mut xp = x;
                    let mut xm = x;
                    xp[m] += h;
                    xm[m] -= h;
                    let fd = (integral_f(xp, &delta, c).unwrap() - integral_f(xm, &delta, c).unwrap()) / (2.0 * h);
                    assert!((fd - g[m]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn h_integrals() {
        let delta = reference_delta();
        let beta = V::new(delta[1], -delta[0], 0.0);
        assert_eq!(integral_h(V::zero(), &delta, beta, CyclicIndex::One).unwrap(), 0.0);
        assert!(matches!(
            integral_h(V::splat(1.0), &delta, V::new(1.0, 0.0, 0.0), CyclicIndex::One),
            Err(Error::NotOrthogonal { .. })
        ));

        let x0 = V::new(1.0, 0.8, 0.6);
        let h0: Vec<f64> = CyclicIndex::ALL.iter().map(|&c| integral_h(x0, &delta, beta, c).unwrap()).collect();
        let mut x = x0;
        for _ in 0..1000 {
            x = hk_step(x, &delta).unwrap();
            for c in CyclicIndex::ALL {
                let h = integral_h(x, &delta, beta, c).unwrap();
                assert!((h - h0[c.i()]).abs() <= 1e-11 * h0[c.i()].abs());
            }
        }
    }

    #[test]
    fn h_expressed_through_f() {
        // 2 δ_i H_i^(β) = β_j/δ_k (1 − 1/F_k) + β_k/δ_j (1 − F_j), with H^(β) = ½ Σ β x²
        let mut s = StateSampler::new(26);
        for _ in 0..1000 {
            let x = s.next_state(2.0f64);
            let delta = DeltaParams::new(s.next_state(0.3f64)).unwrap();
            let beta = default_beta(&delta);
            let f = integrals_f(x, &delta).unwrap();
            for c in CyclicIndex::ALL {
                let (i, j, k) = c.ijk();
                let lhs = 2.0 * delta[i] * integral_h(x, &delta, beta, c).unwrap();
                let rhs = beta[j] / delta[k] * (1.0 - 1.0 / f[k]) + beta[k] / delta[j] * (1.0 - f[j]);
                assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()), "{lhs} {rhs}");
            }
        }
    }

    #[test]
    fn lemma_examples_and_identity() {
        let x = V::new(0.4, -0.7, 1.1);
        for c in CyclicIndex::ALL {
            for sgn in [LemmaSign::Plus, LemmaSign::Minus] {
                assert_eq!(lemma_ratio(x, &DeltaParams::zero(), c, sgn).unwrap(), x[c.i()]);
            }
        }
        // on an axis the cross term vanishes and both signs agree
        let axis = V::new(0.9, 0.0, 0.0);
        let expected = 0.9 / (1.0 - 0.3 * -0.1 * 0.81);
        for sgn in [LemmaSign::Plus, LemmaSign::Minus] {
            assert_eq!(lemma_ratio(axis, &d(0.2, 0.3, -0.1), CyclicIndex::One, sgn).unwrap(), expected);
        }
        let mut s = StateSampler::new(27);
        for _ in 0..1000 {
            let x = s.next_state(2.0f64);
            let delta = DeltaParams::new(s.next_state(0.1f64)).unwrap();
            let xt = hk_step(x, &delta).unwrap();
            for c in CyclicIndex::ALL {
                let before = lemma_ratio(x, &delta, c, LemmaSign::Plus).unwrap();
                let after = lemma_ratio(xt, &delta, c, LemmaSign::Minus).unwrap();
                assert!((before - after).abs() < 1e-12);
                let before = minors_ratio(x, &delta, c, LemmaSign::Plus).unwrap();
                let after = minors_ratio(xt, &delta, c, LemmaSign::Minus).unwrap();
                assert!((before - after).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn densities() {
        let x = V::new(0.5, 1.5, -1.0);
        for ch in DensityChoice::all() {
            assert_eq!(density(x, &DeltaParams::zero(), ch), 1.0);
        }
        let delta = d(0.1, 0.2, 0.3);
        let p = density(x, &delta, DensityChoice { form: DensityForm::Product, index: CyclicIndex::One });
        // (1 − δ1δ2 x3²)(1 − δ2δ3 x1²)
        assert!((p - (1.0 - 0.02 * 1.0) * (1.0 - 0.06 * 0.25)).abs() < 1e-15);
        let q = density(x, &delta, DensityChoice { form: DensityForm::Square, index: CyclicIndex::One });
        assert!((q - (1.0 - 0.02f64).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn jonas_map() {
        assert_eq!(jonas_step(V::zero()).unwrap(), V::zero());
        let mut s = StateSampler::new(28);
        for _ in 0..1000 {
            let x = s.next_state(0.5f64);
            let xt = jonas_step(x).unwrap();
            assert!(jonas_residual(x, xt).max_abs() < 1e-12);
            let hk = hk_step(x, &jonas_delta()).unwrap();
            assert!((xt + hk).max_abs() < 1e-13);
        }
    }

    #[test]
    fn orbit_records_sign_changes_only_when_they_happen() {
        let delta = reference_delta();
        let orbit = hk_orbit(V::new(1.0, 0.8, 0.6), &delta, 100).unwrap();
        assert_eq!(orbit.states.len(), 101);
        assert!(orbit.det_sign_changes.is_empty());
        let stats = f_drift(&orbit.states, &delta, 1e-10).unwrap();
        assert!(stats.max_drift < 1e-13);
        assert_eq!(stats.first_violation, None);
    }

    #[test]
    fn f_expansion() {
        let alpha = V::new(-1.0 / 6.0, 2.0 / 3.0, -0.5);
        let x = V::new(1.0, 0.8, 0.6);
        let eps = [0.1, 0.05, 0.025, 0.0125];
        let slopes = f_expansion_check(x, alpha, &eps).unwrap();
        for m in 0..3 {
            assert!((1.8..=2.2).contains(&slopes[m]), "{slopes:?}");
        }
        let scan = f_expansion_scan(x, alpha, &eps).unwrap();
        for m in 0..3 {
            let gaps: Vec<f64> = scan.iter().map(|r| (r[m] - 1.0).abs()).collect();
            assert!(gaps.windows(2).all(|w| w[1] < w[0]));
        }
        assert!(matches!(
            f_expansion_check(V::new(1.0, 0.0, 0.0), alpha, &eps),
            Err(Error::DegenerateInstance(_))
        ));
        assert!(f_expansion_check(x, alpha, &eps[..3]).is_err());
    }
}
