//! Planar rotations and the distance between configurations modulo rotation.

use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;

use crate::config::{norm2, PlanarConfiguration};
use crate::error::{Error, Result};

/// Rotates every point by `alpha` radians about the origin.
pub fn rotate(config: &PlanarConfiguration, alpha: f64) -> PlanarConfiguration {
    let (s, c) = alpha.sin_cos();
    config.map_points(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]])
}

/// The unique rotation putting point `pivot` on the positive first axis.
pub fn canonicalize(config: &PlanarConfiguration, pivot: usize) -> Result<PlanarConfiguration> {
    let p = *config.points().get(pivot).ok_or_else(|| Error::domain(format!("pivot index {pivot} out of range")))?;
    let r = norm2(p);
    if r == 0.0 || r <= 1e-14 * config.max_radius() {
        return Err(Error::domain(format!("pivot point {pivot} is at the origin; choose another index")));
    }
    let (c, s) = (p[0] / r, p[1] / r);
    let mut out = config.map_points(|q| [c * q[0] + s * q[1], -s * q[0] + c * q[1]]);
    let points = out.points().to_vec();
    let mut fixed = points;
    fixed[pivot] = [r, 0.0];
    out = out.with_points(fixed)?;
    Ok(out)
}

/// Index of the point farthest from the origin (lowest index on ties).
pub fn farthest_point(config: &PlanarConfiguration) -> usize {
    let mut best = 0;
    let mut best_r = -1.0;
    for (i, p) in config.points().iter().enumerate() {
        let r = norm2(*p);
        if r > best_r * (1.0 + 1e-12) {
            best = i;
            best_r = r;
        }
    }
    best
}

/// `min_α (Σ m_i |e^{iα} a_i − b_i|²)^{1/2}`. The optimal angle is the
/// argument of `Σ m_i conj(a_i) b_i`, so the minimum is available in closed form.
pub fn config_distance_mod_rotation(a: &PlanarConfiguration, b: &PlanarConfiguration) -> Result<f64> {
    Ok(optimal_alignment(a, b)?.0)
}

/// Distance modulo rotation together with the angle that rotates `a` onto `b`.
pub fn optimal_alignment(a: &PlanarConfiguration, b: &PlanarConfiguration) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(Error::domain(format!("configurations have {} and {} points", a.len(), b.len())));
    }
    if a.masses() != b.masses() {
        return Err(Error::domain("configurations have different masses"));
    }
    let m = a.masses().as_slice();
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..a.len() {
        let (p, q) = (a.points()[i], b.points()[i]);
        // conj(p) q
        re += m[i] * (p[0] * q[0] + p[1] * q[1]);
        im += m[i] * (p[0] * q[1] - p[1] * q[0]);
    }
    let alpha = im.atan2(re);
    // Summed directly: `|a|² + |b|² − 2|⟨a, b⟩|` cancels catastrophically.
    let (s, c) = alpha.sin_cos();
    let d2: f64 = (0..a.len())
        .map(|i| {
            let (p, q) = (a.points()[i], b.points()[i]);
            let dx = c * p[0] - s * p[1] - q[0];
            let dy = s * p[0] + c * p[1] - q[1];
            m[i] * (dx * dx + dy * dy)
        })
        .sum();
    Ok((d2.sqrt(), alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MassVector;
    use alloc::vec;
    use core::f64::consts::PI;

    fn scalene() -> PlanarConfiguration {
        PlanarConfiguration::new(
            MassVector::new(vec![1.0, 2.0, 3.0]).unwrap(),
            vec![[0.9, 0.1], [-0.4, 0.5], [-0.1, -0.7]],
        )
        .unwrap()
    }

    #[test]
    fn canonicalize_single_point() {
        let c = PlanarConfiguration::new(MassVector::new(vec![1.0]).unwrap(), vec![[0.0, 1.0]]).unwrap();
        let k = canonicalize(&c, 0).unwrap();
        assert_eq!(k.points(), &[[1.0, 0.0]]);
    }

    #[test]
    fn canonicalize_zero_pivot_is_an_error() {
        let c =
            PlanarConfiguration::new(MassVector::new(vec![1.0, 1.0]).unwrap(), vec![[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let err = canonicalize(&c, 0).unwrap_err();
        assert!(matches!(err, Error::Domain(ref s) if s.contains("another index")));
    }

    #[test]
    fn full_turn_is_identity() {
        let c = scalene();
        let r = rotate(&c, 2.0 * PI);
        for (p, q) in c.points().iter().zip(r.points()) {
            assert!((p[0] - q[0]).abs() < 1e-14 && (p[1] - q[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let c = scalene();
        let once = canonicalize(&c, 1).unwrap();
        let twice = canonicalize(&once, 1).unwrap();
        assert_eq!(once.points()[1][1], 0.0);
        assert!(once.points()[1][0] > 0.0);
        for (p, q) in once.points().iter().zip(twice.points()) {
            assert!((p[0] - q[0]).abs() < 1e-15 && (p[1] - q[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn distance_to_rotated_copy_vanishes() {
        let c = scalene();
        assert!(config_distance_mod_rotation(&c, &rotate(&c, 1.2)).unwrap() < 1e-12);
    }

    #[test]
    fn mirror_image_is_not_a_rotation() {
        let c = scalene();
        let mirrored = c.map_points(|p| [p[0], -p[1]]);
        assert!(config_distance_mod_rotation(&c, &mirrored).unwrap() > 0.1);
    }

    #[test]
    fn distance_is_symmetric() {
        let a = scalene();
        let b = a.map_points(|p| [p[0] * 1.1 + 0.05, p[1] - 0.2]);
        let dab = config_distance_mod_rotation(&a, &b).unwrap();
        let dba = config_distance_mod_rotation(&b, &a).unwrap();
        assert!((dab - dba).abs() < 1e-12);
    }

    #[test]
    fn alignment_angle_matches_brute_force() {
        let a = scalene();
        let b = rotate(&a.map_points(|p| [p[0] + 0.03, p[1]]), 0.8);
        let (d, alpha) = optimal_alignment(&a, &b).unwrap();
        let m = a.masses().as_slice();
        let dist_at = |t: f64| {
            let r = rotate(&a, t);
            (0..3)
                .map(|i| {
                    let (p, q) = (r.points()[i], b.points()[i]);
                    m[i] * ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
                })
                .sum::<f64>()
                .sqrt()
        };
        let brute = (0..20000).map(|k| dist_at(2.0 * PI * k as f64 / 20000.0)).fold(f64::INFINITY, f64::min);
        assert!((d - dist_at(alpha)).abs() < 1e-12);
        assert!(d <= brute + 1e-12 && brute - d < 1e-6);
    }

    #[test]
    fn mismatched_sizes() {
        let a = scalene();
        let b = PlanarConfiguration::new(MassVector::new(vec![1.0]).unwrap(), vec![[0.0, 1.0]]).unwrap();
        assert!(config_distance_mod_rotation(&a, &b).is_err());
    }
}
