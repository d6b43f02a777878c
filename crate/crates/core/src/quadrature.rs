//! Gauss–Legendre rules, adaptive integration and angular rules on the sphere.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from the Chebyshev-like guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        h * self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(c + h * x)).sum::<f64>()
    }

    /// `∫_a^b f` on `panels` equal subintervals.
    pub fn composite(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels).map(|k| self.integrate(a + k as f64 * h, a + (k + 1) as f64 * h, &mut f)).sum()
    }

    /// Mapped nodes and weights for `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + h * x, h * w))
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive bisection comparing a 10-point and a 20-point rule on each piece.
pub fn adaptive(a: f64, b: f64, tol: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let lo = GaussLegendre::new(10);
    let hi = GaussLegendre::new(20);
    let mut total = 0.0;
    let mut worst = (0.0, 0.0);
    let mut stack = vec![(a, b, 0usize)];
    let scale = (b - a).abs();
    while let Some((x0, x1, depth)) = stack.pop() {
        let coarse = lo.integrate(x0, x1, &f);
        let fine = hi.integrate(x0, x1, &f);
        let local_tol = tol * ((x1 - x0).abs() / scale).max(1e-6);
        if (fine - coarse).abs() <= local_tol.max(tol * 1e-3 * fine.abs()) || depth >= 40 {
            if depth >= 40 && (fine - coarse).abs() > local_tol {
                worst = (coarse, fine);
            }
            total += fine;
        } else {
            let mid = 0.5 * (x0 + x1);
            stack.push((mid, x1, depth + 1));
            stack.push((x0, mid, depth + 1));
        }
    }
    if worst != (0.0, 0.0) {
        return Err(Error::Accuracy { what: "adaptive quadrature", coarse: worst.0, fine: worst.1 });
    }
    Ok(total)
}

/// Angular integration rule on the unit sphere. Weights sum to one, so
/// `4π Σ w f(n)` approximates `∫_{S²} f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AngularRule {
    /// The 26-point Lebedev rule, exact for polynomials of degree 7.
    Lebedev26,
    /// Gauss–Legendre in `cos θ` times the trapezoid rule in `φ`.
    Product { n_theta: usize, n_phi: usize },
}

impl AngularRule {
    pub fn points(&self) -> Vec<([f64; 3], f64)> {
        match *self {
            AngularRule::Lebedev26 => lebedev26(),
            AngularRule::Product { n_theta, n_phi } => {
                let gl = GaussLegendre::new(n_theta.max(1));
                let n_phi = n_phi.max(1);
                let mut out = Vec::with_capacity(gl.len() * n_phi);
                for (ct, wt) in gl.nodes.iter().zip(&gl.weights) {
                    let st = (1.0 - ct * ct).max(0.0).sqrt();
                    for k in 0..n_phi {
                        let phi = 2.0 * PI * (k as f64 + 0.5) / n_phi as f64;
                        out.push(([st * phi.cos(), st * phi.sin(), *ct], 0.5 * wt / n_phi as f64));
                    }
                }
                out
            }
        }
    }

    /// A finer rule used for refinement checks.
    pub fn refined(&self) -> AngularRule {
        match *self {
            AngularRule::Lebedev26 => AngularRule::Product { n_theta: 8, n_phi: 16 },
            AngularRule::Product { n_theta, n_phi } => AngularRule::Product { n_theta: 2 * n_theta, n_phi: 2 * n_phi },
        }
    }
}

fn lebedev26() -> Vec<([f64; 3], f64)> {
    let mut out = Vec::with_capacity(26);
    for axis in 0..3 {
        for s in [1.0, -1.0] {
            let mut p = [0.0; 3];
            p[axis] = s;
            out.push((p, 1.0 / 21.0));
        }
    }
    let h = 0.5f64.sqrt();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let mut p = [0.0; 3];
            p[i] = si * h;
            p[j] = sj * h;
            out.push((p, 4.0 / 105.0));
        }
    }
    let c = (1.0f64 / 3.0).sqrt();
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                out.push(([sx * c, sy * c, sz * c], 9.0 / 280.0));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rules_match_tables() {
        let g2 = GaussLegendre::new(2);
        assert!((g2.nodes[1] - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let g3 = GaussLegendre::new(3);
        assert!((g3.nodes[2] - 0.6f64.sqrt()).abs() < 1e-15);
        assert!((g3.weights[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!((g3.weights[0] - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        for n in [1, 4, 9, 20, 40] {
            let g = GaussLegendre::new(n);
            let wsum: f64 = g.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13);
            let d = 2 * n - 1;
            let exact = (3f64.powi(d as i32 + 1) - 1.0) / (d as f64 + 1.0);
            let val = g.integrate(1.0, 3.0, |x| x.powi(d as i32));
            assert!((val - exact).abs() <= 1e-12 * exact, "n = {n}");
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // ∫_0^1 √x dx = 2/3
        let v = adaptive(0.0, 1.0, 1e-12, |x| x.sqrt()).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn angular_rules_integrate_spherical_moments() {
        // mean of x² over the sphere is 1/3, of x⁴ is 1/5, of x²y² is 1/15
        for rule in [AngularRule::Lebedev26, AngularRule::Product { n_theta: 6, n_phi: 12 }] {
            let pts = rule.points();
            let avg = |f: &dyn Fn([f64; 3]) -> f64| pts.iter().map(|(p, w)| w * f(*p)).sum::<f64>();
            assert!((avg(&|_| 1.0) - 1.0).abs() < 1e-14);
            assert!((avg(&|p| p[0] * p[0]) - 1.0 / 3.0).abs() < 1e-14);
            assert!((avg(&|p| p[2].powi(4)) - 0.2).abs() < 1e-14);
            assert!((avg(&|p| p[0] * p[0] * p[1] * p[1]) - 1.0 / 15.0).abs() < 1e-14);
            assert!(avg(&|p| p[0] * p[1] * p[2]).abs() < 1e-15);
        }
    }
}
