//! Polytropic kinetic models: the profile `γ`, its velocity integral
//! `g(μ) = (−μ)₊^p`, and the distribution function of a component.

use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::ansatz::{Ansatz, Vec3};
use crate::error::{Error, Result};
use crate::quadrature::adaptive;

/// Exponent pair `(q, p)` with `p = 1/(q−1) + 3/2` and normalization
/// `κ_q = (2π)^{3/2} Γ(q/(q−1)) / Γ(3/2 + q/(q−1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolytropeSpec {
    pub q: f64,
    pub p: f64,
    pub kappa_q: f64,
}

impl PolytropeSpec {
    pub fn from_q(q: f64) -> Result<Self> {
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::domain("q must be a finite number greater than 1"));
        }
        let k = q / (q - 1.0);
        let kappa_q = (2.0 * PI).powf(1.5) * libm::tgamma(k) / libm::tgamma(1.5 + k);
        if !(kappa_q > 0.0 && kappa_q.is_finite()) {
            return Err(Error::domain("kappa_q is not representable for this q"));
        }
        Ok(PolytropeSpec { q, p: 1.0 / (q - 1.0) + 1.5, kappa_q })
    }

    pub fn from_p(p: f64) -> Result<Self> {
        if !(p > 1.5 && p.is_finite()) {
            return Err(Error::domain("a polytrope needs p > 3/2"));
        }
        Self::from_q(1.0 + 1.0 / (p - 1.5))
    }

    /// `γ(s) = κ_q^{−1} (−s)₊^{1/(q−1)}`.
    pub fn gamma_fn(&self, s: f64) -> f64 {
        if s >= 0.0 {
            return 0.0;
        }
        (-s).powf(1.0 / (self.q - 1.0)) / self.kappa_q
    }

    /// `g(μ) = (−μ)₊^p`.
    pub fn g_closed_form(&self, mu: f64) -> f64 {
        (-mu).max(0.0).powf(self.p)
    }

    /// `∫_{ℝ³} γ(μ + ½|v|²) dv` by radial quadrature in `|v|`.
    pub fn g_numeric(&self, mu: f64, tol: f64) -> Result<f64> {
        if mu >= 0.0 {
            return Ok(0.0);
        }
        let a = -mu;
        let smax = (2.0 * a).sqrt();
        // s = smax sin θ removes the endpoint root singularity.
        let integrand = |theta: f64| {
            let (sn, cs) = theta.sin_cos();
            let s = smax * sn;
            self.gamma_fn(mu + 0.5 * s * s) * s * s * smax * cs
        };
        let scale = a.powf(self.p) / self.kappa_q;
        Ok(4.0 * PI * adaptive(0.0, 0.5 * PI, tol * scale, integrand)?)
    }

    pub fn g_check(&self, mu: f64, tol: f64) -> Result<GCheck> {
        if !mu.is_finite() {
            return Err(Error::domain("mu must be finite"));
        }
        let numeric = self.g_numeric(mu, tol)?;
        let closed_form = self.g_closed_form(mu);
        let rel_err = if closed_form == 0.0 { numeric.abs() } else { (numeric - closed_form).abs() / closed_form };
        Ok(GCheck { q: self.q, p: self.p, mu, numeric, closed_form, rel_err })
    }

    /// `f(x, v) = γ(λ_i + ½|v|² − W(x) − ½ω²|x′|²)` on component `i`.
    pub fn distribution_f(&self, ansatz: &Ansatz, i: usize, x: Vec3, v: Vec3) -> Result<f64> {
        let mu = self.component_level(ansatz, i, x)?;
        Ok(self.gamma_fn(mu + 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])))
    }

    /// `∫ f(x, v) dv` by the same radial velocity quadrature as `g_numeric`.
    pub fn velocity_marginal(&self, ansatz: &Ansatz, i: usize, x: Vec3, tol: f64) -> Result<f64> {
        let mu = self.component_level(ansatz, i, x)?;
        self.g_numeric(mu, tol)
    }

    fn component_level(&self, ansatz: &Ansatz, i: usize, x: Vec3) -> Result<f64> {
        if (ansatz.p() - self.p).abs() > 1e-12 * self.p {
            return Err(Error::domain("the ansatz exponent does not match this polytrope"));
        }
        if i >= ansatz.len() || !ansatz.in_ball(i, x) {
            return Err(Error::domain("x lies outside the cutoff ball of the component"));
        }
        Ok(-ansatz.local_potential(i, x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GCheck {
    pub q: f64,
    pub p: f64,
    pub mu: f64,
    pub numeric: f64,
    pub closed_form: f64,
    pub rel_err: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::solve_normalized;
    use crate::config::MassVector;
    use crate::equilibria::two_body;
    use proptest::prelude::*;

    #[test]
    fn exponents_are_linked() {
        let s = PolytropeSpec::from_q(2.0).unwrap();
        assert_eq!(s.p, 2.5);
        let t = PolytropeSpec::from_p(2.5).unwrap();
        assert!((t.q - 2.0).abs() < 1e-15);
        assert!(PolytropeSpec::from_q(1.0).is_err());
        assert!(PolytropeSpec::from_p(1.5).is_err());
    }

    #[test]
    fn kappa_two_closed_form() {
        // q = 2: (2π)^{3/2} Γ(2)/Γ(7/2) = (2π)^{3/2} · 8 / (15 √π)
        let s = PolytropeSpec::from_q(2.0).unwrap();
        let expected = (2.0 * PI).powf(1.5) * 8.0 / (15.0 * PI.sqrt());
        assert!((s.kappa_q - expected).abs() <= 1e-14 * expected);
    }

    #[test]
    fn gamma_examples() {
        let s = PolytropeSpec::from_q(2.0).unwrap();
        assert_eq!(s.gamma_fn(0.0), 0.0);
        assert_eq!(s.gamma_fn(0.5), 0.0);
        assert!((s.gamma_fn(-1.0) - 1.0 / s.kappa_q).abs() < 1e-16);
    }

    #[test]
    fn g_matches_closed_form() {
        for q in [1.5, 2.0, 3.0] {
            let s = PolytropeSpec::from_q(q).unwrap();
            for mu in [-0.5, -1.0, -2.0] {
                let c = s.g_check(mu, 1e-12).unwrap();
                assert!(c.rel_err <= 1e-8, "{c:?}");
            }
            assert_eq!(s.g_check(0.3, 1e-12).unwrap().numeric, 0.0);
        }
    }

    #[test]
    fn beta_integral_oracle() {
        // ∫_0^1 (1 − u²)^k u² du = ½ B(3/2, k + 1), checked by composite GL.
        let gl = crate::quadrature::GaussLegendre::new(30);
        for k in [1.0f64, 2.0] {
            let numeric = gl.composite(0.0, 1.0, 40, |u| (1.0 - u * u).powf(k) * u * u);
            let beta = libm::tgamma(1.5) * libm::tgamma(k + 1.0) / libm::tgamma(k + 2.5);
            assert!((numeric - 0.5 * beta).abs() <= 1e-14);
        }
    }

    #[test]
    fn homogeneity() {
        let s = PolytropeSpec::from_q(2.0).unwrap();
        let a = s.g_numeric(-2.0, 1e-13).unwrap();
        let b = s.g_numeric(-1.0, 1e-13).unwrap();
        assert!((a / b - 2f64.powf(s.p)).abs() <= 1e-8 * a / b);
    }

    #[test]
    fn distribution_reproduces_density() {
        let cell = solve_normalized(2.5, 1e-10).unwrap();
        let s = PolytropeSpec::from_q(2.0).unwrap();
        let m = cell.m_star;
        let z = two_body(m, m).unwrap();
        let a = Ansatz::build(&cell, &MassVector::new(alloc::vec![m, m]).unwrap(), &z, 1e-3, 10.0).unwrap();
        let c = a.centers_xi[0];
        for k in 0..5 {
            let r = 0.5 * k as f64;
            let x = [c[0] + 0.6 * r, c[1] - 0.8 * r, 0.3 * r];
            let rho = a.density(0, x);
            let marg = s.velocity_marginal(&a, 0, x, 1e-13).unwrap();
            assert!((marg - rho).abs() <= 1e-7 * rho, "r = {r}: {marg} vs {rho}");
            assert!(s.distribution_f(&a, 0, x, [0.1, 0.0, 0.0]).unwrap() >= 0.0);
            assert_eq!(s.distribution_f(&a, 0, x, [1e3, 0.0, 0.0]).unwrap(), 0.0);
        }
        let outside = [c[0] + 2.0 * a.cutoff_radius, c[1], 0.0];
        assert!(s.distribution_f(&a, 0, outside, [0.0; 3]).is_err());
    }

    proptest! {
        #[test]
        fn kappa_positive_and_finite(q in 1.0001f64..10.0) {
            let s = PolytropeSpec::from_q(q).unwrap();
            prop_assert!(s.kappa_q > 0.0 && s.kappa_q.is_finite());
        }

        #[test]
        fn gamma_nonincreasing(q in 1.1f64..6.0, a in -5.0f64..1.0, b in -5.0f64..1.0) {
            let s = PolytropeSpec::from_q(q).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(s.gamma_fn(lo) >= s.gamma_fn(hi));
        }
    }
}
