//! The reduced N-body potential
//!
//! ```text
//! V_m(ζ) = (1/8π) Σ_{j≠k} m_j m_k / |ζ_k − ζ_j|  +  ½ Σ_j m_j |ζ_j|²
//! ```
//!
//! with gravitational constant `1/(4π)`, its analytic gradient and Hessian,
//! and the `ω`-dependent version whose confinement is `½ ω² Σ m |ξ|²`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::config::{PlanarConfiguration, Vec2};
use crate::error::Result;

/// Pair interaction `(1/4π) Σ_{j<k} m_j m_k / |ζ_k − ζ_j|`, i.e. the Smale
/// energy `U_m` evaluated at the configuration.
pub fn interaction_energy(config: &PlanarConfiguration) -> Result<f64> {
    config.check_distinct()?;
    let m = config.masses().as_slice();
    let z = config.points();
    let mut sum = 0.0;
    for j in 0..z.len() {
        for k in j + 1..z.len() {
            let d = (z[k][0] - z[j][0]).hypot(z[k][1] - z[j][1]);
            sum += m[j] * m[k] / d;
        }
    }
    Ok(sum / (4.0 * PI))
}

/// `½ Σ m_j |ζ_j|²`.
pub fn moment_of_inertia(config: &PlanarConfiguration) -> f64 {
    config.masses().as_slice().iter().zip(config.points()).map(|(m, p)| 0.5 * m * (p[0] * p[0] + p[1] * p[1])).sum()
}

pub fn potential(config: &PlanarConfiguration) -> Result<f64> {
    Ok(interaction_energy(config)? + moment_of_inertia(config))
}

/// `V_m^ω(ξ)`; satisfies `V_m^ω(ω^{-2/3} ζ) = ω^{2/3} V_m(ζ)`.
pub fn scaled_potential(config_xi: &PlanarConfiguration, omega: f64) -> Result<f64> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(crate::error::Error::domain("omega must be positive"));
    }
    Ok(interaction_energy(config_xi)? + omega * omega * moment_of_inertia(config_xi))
}

/// Gradient of [`potential`], one planar vector per particle.
pub fn gradient(config: &PlanarConfiguration) -> Result<Vec<Vec2>> {
    scaled_gradient(config, 1.0)
}

/// Gradient of [`scaled_potential`].
pub fn scaled_gradient(config: &PlanarConfiguration, omega: f64) -> Result<Vec<Vec2>> {
    config.check_distinct()?;
    let m = config.masses().as_slice();
    let z = config.points();
    let n = z.len();
    let w2 = omega * omega;
    let mut g: Vec<Vec2> = (0..n).map(|j| [w2 * m[j] * z[j][0], w2 * m[j] * z[j][1]]).collect();
    for j in 0..n {
        for k in j + 1..n {
            let dx = z[j][0] - z[k][0];
            let dy = z[j][1] - z[k][1];
            let r = dx.hypot(dy);
            let c = m[j] * m[k] / (4.0 * PI * r * r * r);
            g[j][0] -= c * dx;
            g[j][1] -= c * dy;
            g[k][0] += c * dx;
            g[k][1] += c * dy;
        }
    }
    Ok(g)
}

pub fn gradient_norm(config: &PlanarConfiguration) -> Result<f64> {
    Ok(gradient(config)?.iter().map(|g| g[0] * g[0] + g[1] * g[1]).sum::<f64>().sqrt())
}

/// Analytic `2N × 2N` Hessian of [`potential`], coordinates ordered
/// `(x_1, y_1, x_2, y_2, ...)`.
pub fn hessian(config: &PlanarConfiguration) -> Result<DMatrix<f64>> {
    let mut h = interaction_hessian(config)?;
    for (j, m) in config.masses().as_slice().iter().enumerate() {
        h[(2 * j, 2 * j)] += m;
        h[(2 * j + 1, 2 * j + 1)] += m;
    }
    Ok(h)
}

/// Hessian of the pair interaction alone (the ambient `D²U_m`).
pub fn interaction_hessian(config: &PlanarConfiguration) -> Result<DMatrix<f64>> {
    config.check_distinct()?;
    let m = config.masses().as_slice();
    let z = config.points();
    let n = z.len();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in j + 1..n {
            let d = [z[j][0] - z[k][0], z[j][1] - z[k][1]];
            let r2 = d[0] * d[0] + d[1] * d[1];
            let r = r2.sqrt();
            let c = m[j] * m[k] / (4.0 * PI * r2 * r2 * r);
            // c (3 d dᵀ − |d|² I)
            let mut block = [[0.0; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    let delta = if a == b { r2 } else { 0.0 };
                    block[a][b] = c * (3.0 * d[a] * d[b] - delta);
                }
            }
            for a in 0..2 {
                for b in 0..2 {
                    h[(2 * j + a, 2 * j + b)] += block[a][b];
                    h[(2 * k + a, 2 * k + b)] += block[a][b];
                    h[(2 * j + a, 2 * k + b)] -= block[a][b];
                    h[(2 * k + a, 2 * j + b)] -= block[a][b];
                }
            }
        }
    }
    Ok(h)
}

/// Applies the 90° rotation `ζ ↦ iζ` to every point, flattened.
pub fn rotation_generator(config: &PlanarConfiguration) -> Vec<f64> {
    let mut v = vec![0.0; 2 * config.len()];
    for (j, p) in config.points().iter().enumerate() {
        v[2 * j] = -p[1];
        v[2 * j + 1] = p[0];
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MassVector;
    use crate::rotation::rotate;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg(m: &[f64], p: &[Vec2]) -> PlanarConfiguration {
        PlanarConfiguration::new(MassVector::new(m.to_vec()).unwrap(), p.to_vec()).unwrap()
    }

    #[test]
    fn single_particle_at_origin() {
        assert_eq!(potential(&cfg(&[1.0], &[[0.0, 0.0]])).unwrap(), 0.0);
    }

    #[test]
    fn two_unit_masses() {
        let c = cfg(&[1.0, 1.0], &[[0.5, 0.0], [-0.5, 0.0]]);
        let v = potential(&c).unwrap();
        assert_relative_eq!(v, 1.0 / (4.0 * PI) + 0.25, max_relative = 1e-15);
        assert_relative_eq!(v, 0.329577, epsilon = 1e-6);
    }

    #[test]
    fn single_particle_gradient_is_position() {
        let g = gradient(&cfg(&[1.0], &[[0.3, 0.4]])).unwrap();
        assert_eq!(g, vec![[0.3, 0.4]]);
    }

    #[test]
    fn single_particle_hessian_is_identity() {
        let h = hessian(&cfg(&[1.0], &[[0.7, -0.2]])).unwrap();
        assert_eq!(h, DMatrix::identity(2, 2));
    }

    #[test]
    fn two_body_stationary_radius() {
        // Oracle: minimise m²/(8πr) + m r² over r by golden-section search.
        let f = |r: f64| 1.0 / (8.0 * PI * r) + r * r;
        let (mut a, mut b) = (0.01, 2.0);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if f(c) < f(d) {
                b = d
            } else {
                a = c
            }
        }
        let r_oracle = 0.5 * (a + b);
        let r = (1.0 / (16.0 * PI)).cbrt();
        assert_relative_eq!(r, r_oracle, max_relative = 1e-7);
        let c = cfg(&[1.0, 1.0], &[[r, 0.0], [-r, 0.0]]);
        assert!(gradient_norm(&c).unwrap() <= 1e-12);
    }

    #[test]
    fn coincident_points_error() {
        let c = cfg(&[1.0, 1.0], &[[0.2, 0.1], [0.2, 0.1]]);
        assert!(matches!(potential(&c), Err(crate::Error::Coincident { i: 0, j: 1, .. })));
        assert!(gradient(&c).is_err());
        assert!(hessian(&c).is_err());
    }

    #[test]
    fn scaled_potential_at_unit_omega() {
        let c = cfg(&[1.0, 1.0], &[[0.5, 0.0], [-0.5, 0.0]]);
        assert_eq!(scaled_potential(&c, 1.0).unwrap(), potential(&c).unwrap());
        let omega: f64 = 0.1;
        let xi = c.map_points(|p| [p[0] * omega.powf(-2.0 / 3.0), p[1] * omega.powf(-2.0 / 3.0)]);
        assert_relative_eq!(
            scaled_potential(&xi, omega).unwrap(),
            omega.powf(2.0 / 3.0) * potential(&c).unwrap(),
            max_relative = 1e-13
        );
    }

    fn arb_config() -> impl Strategy<Value = PlanarConfiguration> {
        (2usize..6)
            .prop_flat_map(|n| {
                (proptest::collection::vec(0.2f64..3.0, n), proptest::collection::vec((-1.5f64..1.5, -1.5f64..1.5), n))
            })
            .prop_filter_map("well separated", |(m, p)| {
                let c = cfg(&m, &p.iter().map(|(x, y)| [*x, *y]).collect::<Vec<_>>());
                (c.min_pair_distance() > 0.15).then_some(c)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn rotation_invariance(c in arb_config(), alpha in -7.0f64..7.0) {
            let v0 = potential(&c).unwrap();
            let v1 = potential(&rotate(&c, alpha)).unwrap();
            prop_assert!((v0 - v1).abs() <= 1e-13 * v0.abs());
        }

        #[test]
        fn gradient_matches_central_differences(c in arb_config()) {
            let g = gradient(&c).unwrap();
            let x = c.flat();
            let h = 1e-5;
            let gnorm = g.iter().map(|v| v[0].abs().max(v[1].abs())).fold(0.0, f64::max);
            for k in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let fp = potential(&PlanarConfiguration::from_flat(c.masses().clone(), &xp).unwrap()).unwrap();
                let fm = potential(&PlanarConfiguration::from_flat(c.masses().clone(), &xm).unwrap()).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                prop_assert!((fd - g[k / 2][k % 2]).abs() <= 1e-5 * gnorm.max(1.0));
            }
        }

        #[test]
        fn hessian_matches_differences_of_gradient(c in arb_config()) {
            let hm = hessian(&c).unwrap();
            let x = c.flat();
            let h = 1e-5;
            let scale = hm.amax();
            for k in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let gp = gradient(&PlanarConfiguration::from_flat(c.masses().clone(), &xp).unwrap()).unwrap();
                let gm = gradient(&PlanarConfiguration::from_flat(c.masses().clone(), &xm).unwrap()).unwrap();
                for l in 0..x.len() {
                    let fd = (gp[l / 2][l % 2] - gm[l / 2][l % 2]) / (2.0 * h);
                    prop_assert!((fd - hm[(l, k)]).abs() <= 1e-5 * scale);
                }
            }
            prop_assert!((&hm - hm.transpose()).amax() <= 1e-12 * scale);
        }
    }

    #[test]
    fn hessian_matches_second_differences_of_potential() {
        let c = cfg(&[1.0, 2.0, 0.5], &[[0.4, 0.1], [-0.3, 0.2], [0.1, -0.6]]);
        let hm = hessian(&c).unwrap();
        let x = c.flat();
        let h = 1e-4;
        let f = |v: &[f64]| potential(&PlanarConfiguration::from_flat(c.masses().clone(), v).unwrap()).unwrap();
        for a in 0..6 {
            for b in 0..6 {
                let mut pp = x.clone();
                let mut pm = x.clone();
                let mut mp = x.clone();
                let mut mm = x.clone();
                pp[a] += h;
                pp[b] += h;
                pm[a] += h;
                pm[b] -= h;
                mp[a] -= h;
                mp[b] += h;
                mm[a] -= h;
                mm[b] -= h;
                let fd = (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (4.0 * h * h);
                assert!(
                    (fd - hm[(a, b)]).abs() <= 1e-5 * hm[(a, b)].abs().max(1.0),
                    "entry ({a},{b}): {fd} vs {}",
                    hm[(a, b)]
                );
            }
        }
    }
}
