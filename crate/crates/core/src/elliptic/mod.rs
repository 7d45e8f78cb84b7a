//! Jacobi elliptic functions for real modulus `0 ≤ k < 1` and the closed-form
//! solution of the HK map built from them.

mod solution;

pub use solution::{eval_solution, fit_solution, Ansatz, EllipticSolution, MAX_MODULUS, SEPARATRIX_TOL};

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

const MAX_AGM_ITER: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticModulus<T> {
    k: T,
    k2: T,
}

impl<T: Real> EllipticModulus<T> {
    pub fn new(k: T) -> Result<Self> {
        if !(k >= T::zero() && k < T::one()) {
            return Err(Error::ModulusOutOfRange { k: to_f64(k) });
        }
        Ok(Self { k, k2: k * k })
    }

    /// From the parameter `m = k²`, keeping `m` exact.
    pub fn from_k2(k2: T) -> Result<Self> {
        if !(k2 >= T::zero() && k2 < T::one()) {
            return Err(Error::ModulusOutOfRange { k: to_f64(k2.sqrt()) });
        }
        Ok(Self { k: k2.sqrt(), k2 })
    }

    pub fn k(&self) -> T {
        self.k
    }

    pub fn k2(&self) -> T {
        self.k2
    }

    /// Complementary modulus `k' = √(1 − k²)`.
    pub fn complement(&self) -> T {
        (T::one() - self.k2).sqrt()
    }
}

fn agm<T: Real>(mut a: T, mut b: T) -> T {
    let half = lit::<T>(0.5);
    for _ in 0..MAX_AGM_ITER {
        if (a - b).abs() <= T::epsilon() * a {
            break;
        }
        let next = (a + b) * half;
        b = (a * b).sqrt();
        a = next;
    }
    (a + b) * half
}

/// Complete elliptic integral of the first kind, `π / (2 AGM(1, k'))`.
pub fn agm_k<T: Real>(m: &EllipticModulus<T>) -> T {
    T::FRAC_PI_2() / agm(T::one(), m.complement())
}

/// [`agm_k`] from a raw modulus, validating it first.
pub fn complete_k<T: Real>(k: T) -> Result<T> {
    Ok(agm_k(&EllipticModulus::new(k)?))
}

/// `(sn, cn)` for `|u| ≤ K` by the descending Landen recursion.
fn sn_cn_reduced<T: Real>(u: T, m: &EllipticModulus<T>) -> (T, T) {
    let half = lit::<T>(0.5);
    let (mut a, mut b, mut c) = (T::one(), m.complement(), m.k());
    // ratios[n-1] = c_n / a_n
    let mut ratios = Vec::with_capacity(8);
    let mut scale = T::one();
    while c.abs() > T::epsilon() * a && ratios.len() < MAX_AGM_ITER {
        let next = (a + b) * half;
        c = (a - b) * half;
        b = (a * b).sqrt();
        a = next;
        ratios.push(c / a);
        scale = scale + scale;
    }
    let mut phi = scale * a * u;
    for r in ratios.iter().rev() {
        phi = (phi + (*r * phi.sin()).asin()) * half;
    }
    (phi.sin(), phi.cos())
}

/// `(sn u, cn u, dn u)`.
pub fn jacobi_sn_cn_dn<T: Real>(u: T, m: &EllipticModulus<T>) -> (T, T, T) {
    if m.k() == T::zero() {
        return (u.sin(), u.cos(), T::one());
    }
    let kk = agm_k(m);
    let two_k = kk + kk;
    // u = 2K·q + r with |r| ≤ K; shifting by 2K flips sn and cn
    let q = (u / two_k).round();
    let r = u - q * two_k;
    let (mut sn, mut cn) = sn_cn_reduced(r.max(-kk).min(kk), m);
    let odd = q.to_i64().map(|q| q.rem_euclid(2) == 1).unwrap_or(false);
    if odd {
        sn = -sn;
        cn = -cn;
    }
    let dn = (T::one() - m.k2() * sn * sn).max(T::zero()).sqrt();
    (sn, cn, dn)
}

pub fn sn<T: Real>(u: T, m: &EllipticModulus<T>) -> T {
    jacobi_sn_cn_dn(u, m).0
}

/// Carlson's symmetric integral `R_F(x, y, z)` by duplication.
pub fn carlson_rf<T: Real>(x: T, y: T, z: T) -> Result<T> {
    if x < T::zero() || y < T::zero() || z < T::zero() {
        return Err(Error::ArgumentOutOfRange { value: to_f64(x.min(y).min(z)) });
    }
    let zeros = [x, y, z].iter().filter(|v| **v == T::zero()).count();
    if zeros > 1 {
        return Err(Error::ArgumentOutOfRange { value: 0.0 });
    }
    let (mut x, mut y, mut z) = (x, y, z);
    let quarter = lit::<T>(0.25);
    let third = lit::<T>(1.0 / 3.0);
    let tol = T::epsilon().powf(lit(1.0 / 6.0));
    for _ in 0..200 {
        let mu = (x + y + z) * third;
        let dx = (mu - x) / mu;
        let dy = (mu - y) / mu;
        let dz = (mu - z) / mu;
        if dx.abs().max(dy.abs()).max(dz.abs()) < tol * lit(0.1) {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            let series = T::one() - e2 / lit(10.0) + e3 / lit(14.0) + e2 * e2 / lit(24.0) - lit::<T>(3.0) * e2 * e3 / lit(44.0);
            return Ok(series / mu.sqrt());
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        x = (x + lambda) * quarter;
        y = (y + lambda) * quarter;
        z = (z + lambda) * quarter;
    }
    Err(Error::ArgumentOutOfRange { value: to_f64(x) })
}

/// Incomplete integral `F(φ, k)` for the amplitude with `(sin φ, cos φ) = (s, c)`,
/// continued to `φ ∈ (−π, π]`.
pub fn phase_from_sn_cn<T: Real>(s: T, c: T, m: &EllipticModulus<T>) -> Result<T> {
    let r = s.hypot(c);
    if !(r > T::zero()) || !r.is_finite() {
        return Err(Error::ArgumentOutOfRange { value: to_f64(r) });
    }
    let (s, c) = (s / r, c / r);
    let f = s * carlson_rf(c * c, T::one() - m.k2() * s * s, T::one())?;
    if c >= T::zero() {
        return Ok(f);
    }
    let two_k = agm_k(m) * lit(2.0);
    Ok(if s < T::zero() { -two_k - f } else { two_k - f })
}

/// `u ∈ [−K, K]` with `sn(u, k) = s`.
pub fn arcsn<T: Real>(s: T, m: &EllipticModulus<T>) -> Result<T> {
    if !(s.abs() <= T::one()) {
        return Err(Error::ArgumentOutOfRange { value: to_f64(s) });
    }
    if s.abs() == T::one() {
        return Ok(agm_k(m) * s);
    }
    Ok(s * carlson_rf(T::one() - s * s, T::one() - m.k2() * s * s, T::one())?)
}

/// Largest residual over the six addition formulas at `(ξ, η)`.
pub fn addition_formula_residuals<T: Real>(xi: T, eta: T, m: &EllipticModulus<T>) -> Result<T> {
    let (sx, cx, dx) = jacobi_sn_cn_dn(xi, m);
    let (se, ce, de) = jacobi_sn_cn_dn(eta, m);
    let (sp, cp, dp) = jacobi_sn_cn_dn(xi + eta, m);
    let (sm, cm, dm) = jacobi_sn_cn_dn(xi - eta, m);
    let den = T::one() - m.k2() * sx * sx * se * se;
    if den.abs() < lit(1e-14) {
        return Err(Error::DenominatorVanishes { value: to_f64(den) });
    }
    let two = lit::<T>(2.0);
    let residuals = [
        (cp - cm) + two * sx * dx * se * de / den,
        (sp - sm) - two * cx * dx * se / den,
        (dp - dm) + two * m.k2() * sx * cx * se * ce / den,
        (sp * dm + sm * dp) - two * sx * dx * ce / den,
        (cp * dm + cm * dp) - two * cx * dx * ce * de / den,
        (sp * cm + sm * cp) - two * sx * cx * de / den,
    ];
    Ok(residuals.iter().fold(T::zero(), |acc, r| acc.max(r.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::StateSampler;
    use std::f64::consts::FRAC_PI_2;

    fn modulus(k: f64) -> EllipticModulus<f64> {
        EllipticModulus::new(k).unwrap()
    }

    #[allow(clippy::too_many_arguments)]
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        simpson(f, a, m, fa, flm, fm, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, tol / 2.0, depth - 1)
    }

    fn quadrature_k(k: f64) -> f64 {
        let f = |t: f64| 1.0 / (1.0 - k * k * t.sin().powi(2)).sqrt();
        simpson(&f, 0.0, FRAC_PI_2, f(0.0), f(FRAC_PI_2 / 2.0), f(FRAC_PI_2), 1e-15, 22)
    }

    fn ode_oracle(u: f64, k: f64) -> (f64, f64, f64) {
        let n = 20_000;
        let h = u / n as f64;
        let rhs = |y: [f64; 3]| [y[1] * y[2], -y[0] * y[2], -k * k * y[0] * y[1]];
        let mut y = [0.0, 1.0, 1.0];
        for _ in 0..n {
            let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
            let k1 = rhs(y);
            let k2 = rhs(add(y, k1, h / 2.0));
            let k3 = rhs(add(y, k2, h / 2.0));
            let k4 = rhs(add(y, k3, h));
            for m in 0..3 {
                y[m] += h / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m]);
            }
        }
        (y[0], y[1], y[2])
    }

    #[test]
    fn modulus_validation() {
        assert!(EllipticModulus::new(1.0).is_err());
        assert!(EllipticModulus::new(-0.1).is_err());
        assert!(EllipticModulus::new(f64::NAN).is_err());
        assert!(complete_k(1.2).is_err());
        assert_eq!(EllipticModulus::from_k2(0.25).unwrap().k(), 0.5);
    }

    #[test]
    fn quarter_period() {
        assert!((agm_k(&modulus(0.0)) - FRAC_PI_2).abs() < 1e-15);
        let k = 0.8;
        let oracle = quadrature_k(k);
        assert!(((agm_k(&modulus(k)) - oracle) / oracle).abs() < 1e-14);
        let mut prev = 0.0;
        for i in 0..1000 {
            let v = agm_k(&modulus(i as f64 * 0.000999));
            assert!(v > prev);
            prev = v;
        }
        assert!(agm_k(&modulus(0.999999)) > 7.0);
        for k in [0.1, 0.5, 0.9, 0.99] {
            let q = quadrature_k(k);
            assert!(((agm_k(&modulus(k)) - q) / q).abs() < 1e-13);
        }
    }

    #[test]
    fn circular_limit_and_origin() {
        let m = modulus(0.0);
        for u in [-3.0, -0.4, 0.0, 1.1, 7.0] {
            assert_eq!(jacobi_sn_cn_dn(u, &m), (f64::sin(u), f64::cos(u), 1.0));
        }
        for k in [0.2, 0.7, 0.99] {
            assert_eq!(jacobi_sn_cn_dn(0.0, &modulus(k)), (0.0, 1.0, 1.0));
        }
    }

    #[test]
    fn matches_ode_oracle() {
        let (s, c, d) = jacobi_sn_cn_dn(0.5, &modulus(0.7));
        let (os, oc, od) = ode_oracle(0.5, 0.7);
        assert!((s - os).abs() < 1e-13 && (c - oc).abs() < 1e-13 && (d - od).abs() < 1e-13);
        for (u, k) in [(1.3, 0.3), (2.0, 0.9), (-0.8, 0.5)] {
            let (s, c, d) = jacobi_sn_cn_dn(u, &modulus(k));
            let (os, oc, od) = ode_oracle(u, k);
            assert!((s - os).abs() < 1e-12 && (c - oc).abs() < 1e-12 && (d - od).abs() < 1e-12, "{u} {k}");
        }
    }

    #[test]
    fn pythagorean_identities_and_periodicity() {
        let mut rng = StateSampler::new(51);
        for _ in 0..2000 {
            let k: f64 = rng.uniform_in(0.0, 0.99);
            let m = modulus(k);
            let kk = agm_k(&m);
            let u: f64 = rng.uniform(4.0 * kk);
            let (s, c, d) = jacobi_sn_cn_dn(u, &m);
            assert!((s * s + c * c - 1.0).abs() < 1e-13);
            assert!((d * d + k * k * s * s - 1.0).abs() < 1e-13);
            let (s4, c4, _) = jacobi_sn_cn_dn(u + 4.0 * kk, &m);
            let (_, _, d2) = jacobi_sn_cn_dn(u + 2.0 * kk, &m);
            assert!((s4 - s).abs() < 1e-12 && (c4 - c).abs() < 1e-12 && (d2 - d).abs() < 1e-12);
            let (sk, ck, dk) = jacobi_sn_cn_dn(kk, &m);
            assert!((sk - 1.0).abs() < 1e-14 && ck.abs() < 1e-8 && (dk - (1.0 - k * k).sqrt()).abs() < 1e-8);
        }
    }

    #[test]
    fn carlson_special_values() {
        assert!((carlson_rf(1.0f64, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        // R_F(0, 1, 1) = π/2
        assert!((carlson_rf(0.0, 1.0, 1.0).unwrap() - FRAC_PI_2).abs() < 1e-15);
        // R_F(x, x, x) = 1/√x
        assert!((carlson_rf(4.0f64, 4.0, 4.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(carlson_rf(-1.0, 1.0, 1.0).is_err());
        assert!(carlson_rf(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn arcsn_examples_and_round_trip() {
        let m = modulus(0.6);
        assert_eq!(arcsn(0.0, &m).unwrap(), 0.0);
        assert!((arcsn(1.0, &m).unwrap() - agm_k(&m)).abs() < 1e-15);
        assert!(arcsn(1.0 + 1e-9, &m).is_err());
        let mut rng = StateSampler::new(52);
        for _ in 0..2000 {
            let k: f64 = rng.uniform_in(0.0, 0.99);
            let m = modulus(k);
            let kk = agm_k(&m);
            let u: f64 = rng.uniform(0.95 * kk);
            assert!((arcsn(sn(u, &m), &m).unwrap() - u).abs() < 1e-12, "{u} {k}");
        }
    }

    #[test]
    fn phase_round_trip_over_the_full_period() {
        let mut rng = StateSampler::new(53);
        for _ in 0..2000 {
            let k: f64 = rng.uniform_in(0.0, 0.99);
            let m = modulus(k);
            let kk = agm_k(&m);
            let u: f64 = rng.uniform(1.999 * kk);
            let (s, c, _) = jacobi_sn_cn_dn(u, &m);
            assert!((phase_from_sn_cn(s, c, &m).unwrap() - u).abs() < 1e-12, "{u} {k}");
        }
    }

    #[test]
    fn addition_formulas() {
        let m = modulus(0.4);
        assert!(addition_formula_residuals(0.7, 0.0, &m).unwrap() < 1e-15);
        let circ = modulus(0.0);
        assert!(addition_formula_residuals(0.7, -1.9, &circ).unwrap() < 1e-14);
        let mut rng = StateSampler::new(54);
        for _ in 0..2000 {
            let k: f64 = rng.uniform_in(0.0, 0.99);
            let m = modulus(k);
            let kk = agm_k(&m);
            let xi: f64 = rng.uniform(2.0 * kk);
            let eta: f64 = rng.uniform(2.0 * kk);
            assert!(addition_formula_residuals(xi, eta, &m).unwrap() < 1e-12);
        }
    }

    #[test]
    fn single_precision() {
        let m = EllipticModulus::new(0.7f32).unwrap();
        let (s, c, d) = jacobi_sn_cn_dn(0.5f32, &m);
        assert!((s * s + c * c - 1.0).abs() < 1e-6);
        assert!((d * d + 0.49 * s * s - 1.0).abs() < 1e-6);
    }
}
