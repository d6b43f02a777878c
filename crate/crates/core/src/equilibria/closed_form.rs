//! Relative equilibria known in closed form (or up to a one-dimensional
//! root), used both as constructors and as oracles for the search.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::config::{MassVector, PlanarConfiguration};
use crate::error::{Error, Result};
use crate::linalg::solve;

/// Two bodies on the first axis at separation `(M/4π)^{1/3}` with the
/// center of mass at the origin; body 1 on the positive side.
pub fn two_body(m1: f64, m2: f64) -> Result<PlanarConfiguration> {
    let masses = MassVector::new(vec![m1, m2])?;
    let total = m1 + m2;
    let d = (total / (4.0 * PI)).cbrt();
    PlanarConfiguration::new(masses, vec![[m2 / total * d, 0.0], [-m1 / total * d, 0.0]])
}

/// Equilateral triangle of side `(M/4π)^{1/3}` centered at the center of mass.
/// Bodies 1, 2, 3 are counter-clockwise, or clockwise when `mirrored`.
pub fn lagrange_triangle(m1: f64, m2: f64, m3: f64, mirrored: bool) -> Result<PlanarConfiguration> {
    let masses = MassVector::new(vec![m1, m2, m3])?;
    let side = (masses.total() / (4.0 * PI)).cbrt();
    let radius = side / 3f64.sqrt();
    let sign = if mirrored { -1.0 } else { 1.0 };
    let points: Vec<_> = (0..3)
        .map(|k| {
            let t = sign * 2.0 * PI * k as f64 / 3.0;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect();
    let raw = PlanarConfiguration::new(masses, points)?;
    let c = raw.center_of_mass();
    Ok(raw.map_points(|p| [p[0] - c[0], p[1] - c[1]]))
}

/// `a_N = (1/√2) Σ_{j=1}^{N−1} (1 − cos(2πj/N))^{−1/2}`.
pub fn polygon_constant(n: usize) -> f64 {
    (1..n).map(|j| 1.0 / (1.0 - (2.0 * PI * j as f64 / n as f64).cos()).sqrt()).sum::<f64>() / 2f64.sqrt()
}

fn check_ring(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("a polygon needs at least 2 vertices, got {n}")));
    }
    Ok(())
}

fn ring(n: usize, r: f64) -> Vec<[f64; 2]> {
    (0..n)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / n as f64;
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

/// Regular `N`-gon of equal masses `m_star`, radius `r³ = a_N m_star / (8π)`.
pub fn polygon(n: usize, m_star: f64) -> Result<PlanarConfiguration> {
    check_ring(n)?;
    let masses = MassVector::uniform(n, m_star)?;
    let r = (polygon_constant(n) * m_star / (8.0 * PI)).cbrt();
    PlanarConfiguration::new(masses, ring(n, r))
}

/// Regular `N`-gon of masses `m_ring` plus one body of mass `m_center` at
/// the origin (stored last). The radius is the root of the radial force
/// balance on a ring vertex, found by safeguarded Newton.
pub fn polygon_with_center(n: usize, m_ring: f64, m_center: f64) -> Result<PlanarConfiguration> {
    check_ring(n)?;
    let mut m = vec![m_ring; n];
    m.push(m_center);
    let masses = MassVector::new(m)?;
    let pull = m_ring * polygon_constant(n) / (8.0 * PI) + m_center / (4.0 * PI);
    // f(r) = r − pull/r², increasing on r > 0 with a single root.
    let f = |r: f64| r - pull / (r * r);
    let df = |r: f64| 1.0 + 2.0 * pull / (r * r * r);
    let (mut lo, mut hi) = (0.0, pull.cbrt().max(1.0));
    let mut r = 0.5 * hi;
    let mut converged = false;
    for _ in 0..100 {
        let fr = f(r);
        if fr > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let mut next = r - fr / df(r);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - r).abs() <= 4.0 * f64::EPSILON * r;
        r = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence { what: "polygon-with-center radius", iterations: 100, residual: f(r).abs() });
    }
    let mut points = ring(n, r);
    points.push([0.0, 0.0]);
    PlanarConfiguration::new(masses, points)
}

/// Collinear (Moulton) equilibrium with bodies ordered left to right as
/// `ordering` (a permutation of `0..N`).
///
/// The restriction of the potential to an ordered line is strictly convex,
/// so damped Newton on the centered line problem converges from the equally
/// spaced start.
pub fn moulton(masses: &MassVector, ordering: &[usize]) -> Result<PlanarConfiguration> {
    let n = masses.len();
    let mut seen = vec![false; n];
    if ordering.len() != n || ordering.iter().any(|&k| k >= n || core::mem::replace(&mut seen[k], true)) {
        return Err(Error::domain(format!("ordering {ordering:?} is not a permutation of 0..{n}")));
    }
    let m: Vec<f64> = ordering.iter().map(|&k| masses[k]).collect();
    if n == 1 {
        return PlanarConfiguration::new(masses.clone(), vec![[0.0, 0.0]]);
    }
    let total = masses.total();
    // x_{N−1} = −(Σ_{k<N−1} m_k x_k) / m_{N−1}; unknowns are y = x_0..x_{N−2}.
    let mut a = DMatrix::zeros(n, n - 1);
    for k in 0..n - 1 {
        a[(k, k)] = 1.0;
        a[(n - 1, k)] = -m[k] / m[n - 1];
    }
    let line_energy = |x: &DVector<f64>| -> Option<f64> {
        let mut e = 0.0;
        for j in 0..n {
            if j + 1 < n && !(x[j + 1] > x[j]) {
                return None;
            }
            e += 0.5 * m[j] * x[j] * x[j];
            for k in j + 1..n {
                e += m[j] * m[k] / (4.0 * PI * (x[k] - x[j]));
            }
        }
        Some(e)
    };
    let derivatives = |x: &DVector<f64>| {
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        for j in 0..n {
            g[j] += m[j] * x[j];
            h[(j, j)] += m[j];
            for k in j + 1..n {
                let d = x[k] - x[j];
                let c = m[j] * m[k] / (4.0 * PI);
                g[j] += c / (d * d);
                g[k] -= c / (d * d);
                let c2 = 2.0 * c / (d * d * d);
                h[(j, j)] += c2;
                h[(k, k)] += c2;
                h[(j, k)] -= c2;
                h[(k, j)] -= c2;
            }
        }
        (g, h)
    };

    let spacing = 2.0 * (total / (4.0 * PI)).cbrt() / (n as f64 - 1.0).max(1.0);
    let mut x = DVector::from_fn(n, |j, _| spacing * j as f64);
    let shift = x.iter().zip(&m).map(|(xi, mi)| xi * mi).sum::<f64>() / total;
    x.add_scalar_mut(-shift);
    let mut y = x.rows(0, n - 1).into_owned();

    let max_iter = 100;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let x = &a * &y;
        let (g, h) = derivatives(&x);
        let gy = a.transpose() * &g;
        residual = gy.norm();
        if residual <= 1e-14 * total.max(1.0) {
            break;
        }
        let hy = a.transpose() * &h * &a;
        let step =
            solve(&hy, &(-&gy)).ok_or(Error::Convergence { what: "collinear Newton", iterations: 0, residual })?;
        let e0 = line_energy(&x).unwrap_or(f64::INFINITY);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = &y + &step * t;
            if let Some(e) = line_energy(&(&a * &trial)) {
                if e <= e0 + 1e-4 * t * gy.dot(&step) || e - e0 <= 1e-15 * e0.abs() {
                    y = trial;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let x = &a * &y;
    let (g, _) = derivatives(&x);
    let final_residual = (a.transpose() * &g).norm();
    if !(final_residual <= 1e-11 * total.max(1.0)) {
        return Err(Error::Convergence {
            what: "collinear Newton",
            iterations: max_iter,
            residual: final_residual.min(residual),
        });
    }
    let mut points = vec![[0.0, 0.0]; n];
    for (pos, &body) in ordering.iter().enumerate() {
        points[body] = [x[pos], 0.0];
    }
    PlanarConfiguration::new(masses.clone(), points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::gradient_norm;
    use crate::rotation::config_distance_mod_rotation;
    use approx::assert_relative_eq;

    #[test]
    fn two_body_equal_masses() {
        let c = two_body(1.0, 1.0).unwrap();
        let d = (1.0 / (2.0 * PI)).cbrt();
        assert_relative_eq!(c.points()[0][0], 0.5 * d, max_relative = 1e-15);
        assert_relative_eq!(c.points()[1][0], -0.5 * d, max_relative = 1e-15);
        assert!(gradient_norm(&c).unwrap() <= 1e-12);
    }

    #[test]
    fn two_body_unequal_masses() {
        let c = two_body(1.0, 3.0).unwrap();
        let d = (4.0 / (4.0 * PI)).cbrt();
        assert_relative_eq!(c.points()[0][0], 0.75 * d, max_relative = 1e-15);
        assert_relative_eq!(c.points()[1][0], -0.25 * d, max_relative = 1e-15);
        assert!(gradient_norm(&c).unwrap() <= 1e-12);
    }

    #[test]
    fn lagrange_side_and_certification() {
        let c = lagrange_triangle(1.0, 2.0, 3.0, false).unwrap();
        let side = (6.0 / (4.0 * PI)).cbrt();
        let p = c.points();
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            let d = (p[i][0] - p[j][0]).hypot(p[i][1] - p[j][1]);
            assert!((d - side).abs() <= 1e-12 * side);
        }
        assert!(gradient_norm(&c).unwrap() <= 1e-10);
        let com = c.center_of_mass();
        assert!(com[0].abs() < 1e-15 && com[1].abs() < 1e-15);
    }

    #[test]
    fn lagrange_orientations_are_distinct_classes() {
        let a = lagrange_triangle(1.0, 2.0, 3.0, false).unwrap();
        let b = lagrange_triangle(1.0, 2.0, 3.0, true).unwrap();
        assert!(gradient_norm(&b).unwrap() <= 1e-10);
        assert!(config_distance_mod_rotation(&a, &b).unwrap() > 0.1);
    }

    #[test]
    fn polygon_constants_by_direct_summation() {
        assert_relative_eq!(polygon_constant(2), 0.5, max_relative = 1e-15);
        assert_relative_eq!(polygon_constant(3), 2.0 / 3f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(polygon_constant(4), (1.0 + 2.0 * 2f64.sqrt()) / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn two_gon_matches_two_body() {
        let p = polygon(2, 1.7).unwrap();
        let t = two_body(1.7, 1.7).unwrap();
        assert!(config_distance_mod_rotation(&p, &t).unwrap() < 1e-14);
    }

    #[test]
    fn polygons_are_certified() {
        for n in 2..=8 {
            let c = polygon(n, 1.3).unwrap();
            assert!(gradient_norm(&c).unwrap() <= 1e-10, "N = {n}");
        }
        assert!(polygon(1, 1.0).is_err());
    }

    #[test]
    fn polygon_with_center_radius() {
        let c = polygon_with_center(3, 1.0, 1.0).unwrap();
        assert!(gradient_norm(&c).unwrap() <= 1e-10);
        let m = c.mass_moment();
        assert!(m[0].abs() < 1e-15 && m[1].abs() < 1e-15);
        // r³ = m a_N/(8π) + m_c/(4π)
        let expected = (polygon_constant(3) / (8.0 * PI) + 1.0 / (4.0 * PI)).cbrt();
        assert_relative_eq!(c.points()[0][0], expected, max_relative = 1e-14);
    }

    #[test]
    fn vanishing_center_mass_recovers_polygon() {
        let c = polygon_with_center(5, 2.0, 1e-12).unwrap();
        let r0 = polygon(5, 2.0).unwrap().points()[0][0];
        assert!((c.points()[0][0] - r0).abs() <= 1e-6 * r0);
    }

    #[test]
    fn moulton_equal_masses_is_symmetric() {
        let m = MassVector::uniform(3, 1.0).unwrap();
        let c = moulton(&m, &[0, 1, 2]).unwrap();
        let p = c.points();
        assert!(p[1][0].abs() < 1e-14);
        assert_relative_eq!(p[0][0], -p[2][0], max_relative = 1e-13);
        assert!(gradient_norm(&c).unwrap() <= 1e-10);
        // x³ = 5/(16π) for the symmetric line (−x, 0, x).
        assert_relative_eq!(p[2][0], (5.0 / (16.0 * PI)).cbrt(), max_relative = 1e-13);
    }

    #[test]
    fn moulton_two_bodies_is_two_body() {
        let m = MassVector::new(vec![1.0, 3.0]).unwrap();
        let c = moulton(&m, &[1, 0]).unwrap();
        let t = two_body(1.0, 3.0).unwrap();
        assert!(config_distance_mod_rotation(&c, &t).unwrap() < 1e-12);
    }

    #[test]
    fn reversed_orderings_agree_modulo_rotation() {
        let m = MassVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let a = moulton(&m, &[0, 1, 2]).unwrap();
        let b = moulton(&m, &[2, 1, 0]).unwrap();
        let c = moulton(&m, &[1, 0, 2]).unwrap();
        assert!(config_distance_mod_rotation(&a, &b).unwrap() < 1e-12);
        assert!(config_distance_mod_rotation(&a, &c).unwrap() > 0.1);
    }

    #[test]
    fn moulton_many_bodies() {
        let m = MassVector::new(vec![0.5, 1.0, 4.0, 2.0, 0.1, 3.0]).unwrap();
        let c = moulton(&m, &[4, 2, 0, 5, 1, 3]).unwrap();
        assert!(gradient_norm(&c).unwrap() <= 1e-10);
        let xs: Vec<f64> = [4, 2, 0, 5, 1, 3].iter().map(|&k| c.points()[k][0]).collect();
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bad_permutation() {
        let m = MassVector::uniform(3, 1.0).unwrap();
        assert!(moulton(&m, &[0, 0, 1]).is_err());
        assert!(moulton(&m, &[0, 1]).is_err());
    }
}
