//! Small dense linear-algebra helpers on top of `nalgebra`.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Relative threshold below which an eigenvalue is counted as zero.
pub const ZERO_EIGENVALUE_RTOL: f64 = 1e-7;

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Solves `a x = b` by LU with partial pivoting; `None` when `a` is singular.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let x = a.clone().lu().solve(b)?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Signature of a symmetric form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub negative_count: usize,
    pub positive_count: usize,
    pub zero_count: usize,
    pub tolerance: f64,
}

impl SpectrumReport {
    /// Classifies eigenvalues with the zero threshold `rtol · max|λ|`.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, rtol: f64) -> Self {
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        let scale = eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let tolerance = rtol * scale;
        let zero_count = eigenvalues.iter().filter(|v| v.abs() <= tolerance).count();
        let negative_count = eigenvalues.iter().filter(|v| **v < -tolerance).count();
        let positive_count = eigenvalues.len() - zero_count - negative_count;
        SpectrumReport { eigenvalues, negative_count, positive_count, zero_count, tolerance }
    }

    pub fn of_matrix(m: &DMatrix<f64>) -> Self {
        Self::from_eigenvalues(symmetric_eigenvalues(m), ZERO_EIGENVALUE_RTOL)
    }
}
