//! Masses and planar configurations.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

/// Positive point masses `m_1..m_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MassVector(Vec<f64>);

impl MassVector {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::domain("at least one mass is required"));
        }
        if let Some((i, m)) = masses.iter().enumerate().find(|(_, m)| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::domain(format!("masses must be positive (mass {i} is {m})")));
        }
        Ok(MassVector(masses))
    }

    /// `n` copies of the same mass.
    pub fn uniform(n: usize, m: f64) -> Result<Self> {
        Self::new(alloc::vec![m; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|m| m * factor).collect())
    }
}

impl core::ops::Index<usize> for MassVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for MassVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<MassVector> for Vec<f64> {
    fn from(m: MassVector) -> Vec<f64> {
        m.0
    }
}

/// `N` points in the plane together with their masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfiguration")]
pub struct PlanarConfiguration {
    masses: MassVector,
    points: Vec<Vec2>,
}

#[derive(Deserialize)]
struct RawConfiguration {
    masses: MassVector,
    points: Vec<Vec2>,
}

impl TryFrom<RawConfiguration> for PlanarConfiguration {
    type Error = Error;
    fn try_from(raw: RawConfiguration) -> Result<Self> {
        Self::new(raw.masses, raw.points)
    }
}

impl PlanarConfiguration {
    pub fn new(masses: MassVector, points: Vec<Vec2>) -> Result<Self> {
        if masses.len() != points.len() {
            return Err(Error::domain(format!("{} masses but {} points", masses.len(), points.len())));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::domain("non-finite coordinate"));
        }
        Ok(PlanarConfiguration { masses, points })
    }

    /// Builds a configuration from a flat coordinate vector `[x1, y1, x2, y2, ...]`.
    pub fn from_flat(masses: MassVector, flat: &[f64]) -> Result<Self> {
        if !flat.len().is_multiple_of(2) {
            return Err(Error::domain("flat coordinate vector has odd length"));
        }
        Self::new(masses, flat.chunks(2).map(|c| [c[0], c[1]]).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn masses(&self) -> &MassVector {
        &self.masses
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn flat(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| p.iter().copied()).collect()
    }

    pub fn with_points(&self, points: Vec<Vec2>) -> Result<Self> {
        Self::new(self.masses.clone(), points)
    }

    pub fn map_points(&self, f: impl Fn(Vec2) -> Vec2) -> Self {
        PlanarConfiguration { masses: self.masses.clone(), points: self.points.iter().map(|p| f(*p)).collect() }
    }

    /// `(Σ m_i ζ_i) / M`.
    pub fn center_of_mass(&self) -> Vec2 {
        let total = self.masses.total();
        let mut c = [0.0; 2];
        for (m, p) in self.masses.as_slice().iter().zip(&self.points) {
            c[0] += m * p[0];
            c[1] += m * p[1];
        }
        [c[0] / total, c[1] / total]
    }

    /// `Σ m_i ζ_i`.
    pub fn mass_moment(&self) -> Vec2 {
        let c = self.center_of_mass();
        let total = self.masses.total();
        [c[0] * total, c[1] * total]
    }

    /// Root-mean-square radius `sqrt(Σ m|ζ|² / M)`, the length scale used by
    /// tolerances that must not depend on the overall size of a configuration.
    pub fn scale(&self) -> f64 {
        let s: f64 = self.masses.as_slice().iter().zip(&self.points).map(|(m, p)| m * norm2(*p).powi(2)).sum();
        (s / self.masses.total()).sqrt()
    }

    pub fn max_radius(&self) -> f64 {
        self.points.iter().map(|p| norm2(*p)).fold(0.0, f64::max)
    }

    pub fn min_pair_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                d = d.min(dist2(self.points[i], self.points[j]));
            }
        }
        d
    }

    /// Fails with [`Error::Coincident`] when two points are closer than
    /// `1e-12` times the configuration size.
    pub fn check_distinct(&self) -> Result<()> {
        let scale = self.max_radius().max(self.scale()).max(f64::MIN_POSITIVE);
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let d = dist2(self.points[i], self.points[j]);
                if d < 1e-12 * scale || d == 0.0 {
                    return Err(Error::Coincident { i, j, distance: d });
                }
            }
        }
        Ok(())
    }
}

#[inline]
pub fn norm2(p: Vec2) -> f64 {
    p[0].hypot(p[1])
}

#[inline]
pub fn dist2(a: Vec2, b: Vec2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_nonpositive_masses() {
        let err = MassVector::new(vec![1.0, -1.0]).unwrap_err();
        assert!(matches!(err, Error::Domain(ref s) if s.contains("masses must be positive")));
        assert!(MassVector::new(vec![]).is_err());
        assert!(MassVector::new(vec![0.0]).is_err());
    }

    #[test]
    fn length_mismatch() {
        let m = MassVector::new(vec![1.0, 2.0]).unwrap();
        assert!(PlanarConfiguration::new(m, vec![[0.0, 0.0]]).is_err());
    }

    #[test]
    fn coincident_points_are_reported() {
        let m = MassVector::new(vec![1.0, 1.0, 1.0]).unwrap();
        let c = PlanarConfiguration::new(m, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]]).unwrap();
        assert_eq!(c.check_distinct(), Err(Error::Coincident { i: 1, j: 2, distance: 0.0 }));
    }
}
