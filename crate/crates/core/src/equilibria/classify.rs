use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::config::{norm2, PlanarConfiguration};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, SpectrumReport};
use crate::potential::{gradient_norm, hessian, potential};
use crate::rotation::{canonicalize, farthest_point};
use crate::smale::{reduced_hessian, to_smale};

/// Default gradient-norm threshold for certifying a critical point.
pub const CERTIFY_TOL: f64 = 1e-9;
/// Relative tolerance of the geometric shape tests.
pub const SHAPE_TOL: f64 = 1e-8;
/// `σ_min > NONDEGENERACY_RTOL · σ_max` for the pivot-frozen Hessian.
pub const NONDEGENERACY_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeTag {
    Collinear,
    RegularPolygon,
    PolygonWithCenter,
    LagrangeTriangle,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumClass {
    pub representative: PlanarConfiguration,
    pub potential_value: f64,
    pub gradient_norm: f64,
    /// Signature of the reduced second variation on the shape manifold.
    pub index_report: SpectrumReport,
    pub nondegenerate_up_to_rotations: bool,
    pub shape_tag: ShapeTag,
    /// Every tag whose test passes; `shape_tag` is the first of these.
    pub shape_tags: Vec<ShapeTag>,
}

fn centered(config: &PlanarConfiguration) -> PlanarConfiguration {
    let c = config.center_of_mass();
    config.map_points(|p| [p[0] - c[0], p[1] - c[1]])
}

fn is_collinear(config: &PlanarConfiguration) -> bool {
    let c = centered(config);
    if c.len() <= 2 {
        return true;
    }
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in c.points() {
        sxx += p[0] * p[0];
        sxy += p[0] * p[1];
        syy += p[1] * p[1];
    }
    // Direction of the best-fit line through the origin.
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (s, co) = theta.sin_cos();
    let tol = SHAPE_TOL * c.max_radius();
    c.points().iter().all(|p| (-s * p[0] + co * p[1]).abs() <= tol)
}

fn is_regular_ring(points: &[[f64; 2]], scale: f64) -> bool {
    let n = points.len();
    if n < 2 {
        return false;
    }
    let r0 = norm2(points[0]);
    if r0 <= SHAPE_TOL * scale || points.iter().any(|p| (norm2(*p) - r0).abs() > SHAPE_TOL * r0) {
        return false;
    }
    let mut angles: Vec<f64> = points.iter().map(|p| p[1].atan2(p[0])).collect();
    angles.sort_by(|a, b| a.total_cmp(b));
    let gap = 2.0 * PI / n as f64;
    (0..n).all(|k| {
        let next = if k + 1 < n { angles[k + 1] } else { angles[0] + 2.0 * PI };
        (next - angles[k] - gap).abs() <= SHAPE_TOL * 2.0 * PI
    })
}

fn all_equal(m: &[f64]) -> bool {
    m.iter().all(|x| (x - m[0]).abs() <= SHAPE_TOL * m[0])
}

/// All shape tags whose geometric test passes, in priority order.
pub fn detect_shapes(config: &PlanarConfiguration) -> Vec<ShapeTag> {
    let c = centered(config);
    let m = c.masses().as_slice();
    let scale = c.max_radius();
    let mut tags = Vec::new();
    if is_collinear(&c) {
        tags.push(ShapeTag::Collinear);
    }
    if all_equal(m) && is_regular_ring(c.points(), scale) {
        tags.push(ShapeTag::RegularPolygon);
    }
    if c.len() >= 3 {
        if let Some(center) = c.points().iter().position(|p| norm2(*p) <= SHAPE_TOL * scale) {
            let ring: Vec<_> = (0..c.len()).filter(|&k| k != center).collect();
            let ring_masses: Vec<f64> = ring.iter().map(|&k| m[k]).collect();
            let ring_points: Vec<_> = ring.iter().map(|&k| c.points()[k]).collect();
            if all_equal(&ring_masses) && is_regular_ring(&ring_points, scale) {
                tags.push(ShapeTag::PolygonWithCenter);
            }
        }
    }
    if c.len() == 3 {
        let p = c.points();
        let d = [
            (p[0][0] - p[1][0]).hypot(p[0][1] - p[1][1]),
            (p[1][0] - p[2][0]).hypot(p[1][1] - p[2][1]),
            (p[0][0] - p[2][0]).hypot(p[0][1] - p[2][1]),
        ];
        if (d[0] - d[1]).abs() <= SHAPE_TOL * d[0] && (d[0] - d[2]).abs() <= SHAPE_TOL * d[0] {
            tags.push(ShapeTag::LagrangeTriangle);
        }
    }
    if tags.is_empty() {
        tags.push(ShapeTag::Generic);
    }
    tags
}

/// Hessian of the potential with the pivot's second coordinate removed.
pub fn pivot_reduced_hessian(canonical: &PlanarConfiguration, pivot: usize) -> Result<DMatrix<f64>> {
    let h = hessian(canonical)?;
    Ok(h.remove_row(2 * pivot + 1).remove_column(2 * pivot + 1))
}

/// Certifies, canonicalizes and classifies a critical point.
pub fn classify(config: &PlanarConfiguration) -> Result<EquilibriumClass> {
    classify_with(config, CERTIFY_TOL)
}

pub fn classify_with(config: &PlanarConfiguration, certify_tol: f64) -> Result<EquilibriumClass> {
    let gnorm = gradient_norm(config)?;
    if !(gnorm <= certify_tol) {
        return Err(Error::NotCritical { gradient_norm: gnorm });
    }
    let (representative, reduced, index_report) = if config.len() >= 2 {
        let pivot = farthest_point(config);
        let rep = canonicalize(config, pivot)?;
        let reduced = pivot_reduced_hessian(&rep, pivot)?;
        let shape = to_smale(&rep)?.shape;
        (rep, reduced, reduced_hessian(&shape)?)
    } else {
        (config.clone(), hessian(config)?, SpectrumReport::from_eigenvalues(Vec::new(), 0.0))
    };
    let abs_eigs: Vec<f64> = symmetric_eigenvalues(&reduced).iter().map(|v| v.abs()).collect();
    let smax = abs_eigs.iter().cloned().fold(0.0, f64::max);
    let smin = abs_eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let shape_tags = detect_shapes(&representative);
    Ok(EquilibriumClass {
        potential_value: potential(&representative)?,
        gradient_norm: gradient_norm(&representative)?,
        representative,
        index_report,
        nondegenerate_up_to_rotations: smin > NONDEGENERACY_RTOL * smax,
        shape_tag: shape_tags[0],
        shape_tags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MassVector;
    use crate::equilibria::{lagrange_triangle, moulton, polygon, polygon_with_center, two_body};

    #[test]
    fn moulton_is_collinear() {
        let m = MassVector::new(alloc::vec![1.0, 2.0, 3.0]).unwrap();
        let c = classify(&moulton(&m, &[1, 2, 0]).unwrap()).unwrap();
        assert_eq!(c.shape_tag, ShapeTag::Collinear);
        assert!(c.nondegenerate_up_to_rotations);
        assert_eq!((c.index_report.negative_count, c.index_report.positive_count), (1, 1));
    }

    #[test]
    fn equal_mass_polygon() {
        let c = classify(&polygon(5, 1.0).unwrap()).unwrap();
        assert_eq!(c.shape_tag, ShapeTag::RegularPolygon);
        assert_eq!(c.representative.points()[0][1], 0.0);
    }

    #[test]
    fn equal_mass_triangle_has_both_tags() {
        let c = classify(&lagrange_triangle(1.0, 1.0, 1.0, false).unwrap()).unwrap();
        assert_eq!(c.shape_tags, alloc::vec![ShapeTag::RegularPolygon, ShapeTag::LagrangeTriangle]);
    }

    #[test]
    fn unequal_lagrange_is_nondegenerate() {
        let c = classify(&lagrange_triangle(1.0, 2.0, 3.0, false).unwrap()).unwrap();
        assert_eq!(c.shape_tag, ShapeTag::LagrangeTriangle);
        assert!(c.nondegenerate_up_to_rotations);
        assert_eq!(c.index_report.eigenvalues.len(), 2);
    }

    #[test]
    fn centered_polygon_is_tagged() {
        let c = classify(&polygon_with_center(4, 1.0, 2.0).unwrap()).unwrap();
        assert_eq!(c.shape_tag, ShapeTag::PolygonWithCenter);
    }

    #[test]
    fn two_body_representative_is_canonical() {
        let c = classify(&two_body(1.0, 3.0).unwrap()).unwrap();
        let p = c.representative.points();
        // Body 1 is the farthest from the center of mass.
        assert_eq!(p[0][1], 0.0);
        assert!(p[0][0] > 0.0);
        assert!(c.nondegenerate_up_to_rotations);
    }

    #[test]
    fn non_critical_is_rejected() {
        let c = PlanarConfiguration::new(MassVector::uniform(2, 1.0).unwrap(), alloc::vec![[1.0, 0.0], [-1.0, 0.0]])
            .unwrap();
        assert!(matches!(classify(&c), Err(Error::NotCritical { .. })));
    }
}
