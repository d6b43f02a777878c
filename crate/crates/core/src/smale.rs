//! Smale's reduction of the relative-equilibrium problem.
//!
//! A configuration is written `ζ_i = α q_i + b` with the shape `q` on
//!
//! ```text
//! S_m = { q : Σ m_i q_i = 0,  ½ Σ m_i |q_i|² = 1 }
//! ```
//!
//! Critical points of `V_m` correspond to critical points of the pair energy
//! `U_m` restricted to `S_m`. With the normalization above the multiplier
//! `λ` defined by `∇U_m(q̄) = −λ m q̄` satisfies `U_m(q̄) = 2λ` and the
//! critical configuration is `ζ̄ = λ^{1/3} q̄`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::config::{PlanarConfiguration, Vec2};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, SpectrumReport};
use crate::potential::{
    gradient_norm, interaction_energy, interaction_hessian, moment_of_inertia, potential, rotation_generator,
};

/// Tolerance on the `S_m` constraints accepted by the shape-space operations.
pub const MANIFOLD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmaleCoordinates {
    pub alpha: f64,
    pub shift: Vec2,
    pub shape: PlanarConfiguration,
}

pub fn to_smale(config: &PlanarConfiguration) -> Result<SmaleCoordinates> {
    let c = config.center_of_mass();
    let centered = config.map_points(|p| [p[0] - c[0], p[1] - c[1]]);
    let inertia = moment_of_inertia(&centered);
    if !(inertia > 0.0) {
        return Err(Error::domain("degenerate configuration: all points coincide"));
    }
    let alpha = inertia.sqrt();
    let shape = centered.map_points(|p| [p[0] / alpha, p[1] / alpha]);
    Ok(SmaleCoordinates { alpha, shift: c, shape })
}

pub fn from_smale(coords: &SmaleCoordinates) -> PlanarConfiguration {
    let (a, b) = (coords.alpha, coords.shift);
    coords.shape.map_points(|q| [a * q[0] + b[0], a * q[1] + b[1]])
}

/// Largest violation of the three `S_m` constraints.
pub fn manifold_defect(shape: &PlanarConfiguration) -> f64 {
    let moment = shape.mass_moment();
    let scale = shape.masses().total().sqrt();
    (moment[0].abs() / scale).max(moment[1].abs() / scale).max((moment_of_inertia(shape) - 1.0).abs())
}

fn check_on_manifold(shape: &PlanarConfiguration) -> Result<()> {
    let defect = manifold_defect(shape);
    if defect > MANIFOLD_TOL {
        return Err(Error::Constraint(format!("shape is off the normalized manifold (defect {defect:e})")));
    }
    Ok(())
}

/// `U_m(q)` for a shape on `S_m`.
pub fn smale_energy(shape: &PlanarConfiguration) -> Result<f64> {
    check_on_manifold(shape)?;
    interaction_energy(shape)
}

/// The multiplier `λ = U_m(q)/2` (see the module documentation).
pub fn multiplier(shape: &PlanarConfiguration) -> Result<f64> {
    Ok(0.5 * smale_energy(shape)?)
}

fn mass_inner(m: &[f64], u: &[f64], v: &[f64]) -> f64 {
    (0..u.len()).map(|k| m[k / 2] * u[k] * v[k]).sum()
}

/// Mass-orthonormal basis of the tangent space of `S_m` at `shape`. With
/// `quotient_rotation` the rotation generator `i·q` is also removed, leaving
/// `2N − 4` vectors; otherwise `2N − 3`.
pub fn tangent_basis(shape: &PlanarConfiguration, quotient_rotation: bool) -> Vec<DVector<f64>> {
    let n = shape.len();
    let m = shape.masses().as_slice();
    let mut excluded: Vec<Vec<f64>> = Vec::new();
    let mut ex = vec![0.0; 2 * n];
    let mut ey = vec![0.0; 2 * n];
    for j in 0..n {
        ex[2 * j] = 1.0;
        ey[2 * j + 1] = 1.0;
    }
    excluded.push(ex);
    excluded.push(ey);
    excluded.push(shape.flat());
    if quotient_rotation {
        excluded.push(rotation_generator(shape));
    }
    let target = 2 * n - excluded.len().min(2 * n);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let orthonormalize = |v: &mut Vec<f64>, against: &[Vec<f64>]| {
        for _ in 0..2 {
            for u in against {
                let c = mass_inner(m, v, u);
                for k in 0..v.len() {
                    v[k] -= c * u[k];
                }
            }
        }
        mass_inner(m, v, v).sqrt()
    };
    let mut fixed: Vec<Vec<f64>> = Vec::new();
    for mut v in excluded {
        let norm = orthonormalize(&mut v, &fixed);
        if norm > 1e-12 {
            v.iter_mut().for_each(|x| *x /= norm);
            fixed.push(v);
        }
    }
    for k in 0..2 * n {
        if basis.len() == target {
            break;
        }
        let mut v = vec![0.0; 2 * n];
        v[k] = 1.0 / m[k / 2].sqrt();
        let mut against = fixed.clone();
        against.extend(basis.iter().cloned());
        let norm = orthonormalize(&mut v, &against);
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    basis.into_iter().map(DVector::from_vec).collect()
}

/// The covariant Hessian of `U_m` on `S_m`, `D²U_m + λ·diag(m)`, as an
/// ambient `2N × 2N` matrix (to be restricted to tangent vectors).
pub fn covariant_hessian_ambient(shape: &PlanarConfiguration) -> Result<DMatrix<f64>> {
    let lambda = multiplier(shape)?;
    let mut h = interaction_hessian(shape)?;
    for (j, m) in shape.masses().as_slice().iter().enumerate() {
        h[(2 * j, 2 * j)] += lambda * m;
        h[(2 * j + 1, 2 * j + 1)] += lambda * m;
    }
    Ok(h)
}

/// Matrix of the covariant Hessian in the basis returned by
/// [`tangent_basis`]`(shape, true)`.
pub fn reduced_hessian_matrix(shape: &PlanarConfiguration) -> Result<DMatrix<f64>> {
    let h = covariant_hessian_ambient(shape)?;
    let basis = tangent_basis(shape, true);
    let k = basis.len();
    let mut out = DMatrix::zeros(k, k);
    for a in 0..k {
        let hb = &h * &basis[a];
        for b in 0..k {
            out[(b, a)] = basis[b].dot(&hb);
        }
    }
    Ok((&out + out.transpose()) * 0.5)
}

/// Spectrum of the `(2N − 4)`-dimensional reduced second variation.
pub fn reduced_hessian(shape: &PlanarConfiguration) -> Result<SpectrumReport> {
    Ok(SpectrumReport::of_matrix(&reduced_hessian_matrix(shape)?))
}

/// Block structure of `D²V_m` in the coordinates `(α, b, q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockCheck {
    /// `λ` with `ζ̄ = λ^{1/3} q̄`.
    pub multiplier: f64,
    pub alpha: f64,
    /// Measured `∂²V/∂α²`.
    pub alpha_alpha: f64,
    /// `2 + 2 U_m(q̄)/ᾱ³`, the value implied by homogeneity (`= 6` at any
    /// critical point).
    pub alpha_alpha_predicted: f64,
    pub shift_eigenvalues: Vec<f64>,
    pub total_mass: f64,
    pub alpha_shift_norm: f64,
    pub alpha_shape_norm: f64,
    pub shift_shape_norm: f64,
    /// Spectrum of the measured shape block (`2N − 3` values, one of them the
    /// rotation zero mode).
    pub shape_block_spectrum: Vec<f64>,
    /// `λ^{-1/3}` times the reduced spectrum, with the rotation zero appended.
    pub shape_block_predicted: Vec<f64>,
}

/// Measures the Hessian of `V_m ∘ ζ(α, b, q)` at a critical point by second
/// differences, with `q` moved along a retraction of the tangent space.
pub fn hessian_block_check(critical: &PlanarConfiguration) -> Result<BlockCheck> {
    let gnorm = gradient_norm(critical)?;
    if gnorm > 1e-8 {
        return Err(Error::NotCritical { gradient_norm: gnorm });
    }
    let coords = to_smale(critical)?;
    let shape = coords.shape.clone();
    let n = shape.len();
    let masses = shape.masses().clone();
    let basis = tangent_basis(&shape, false);
    let q0 = DVector::from_vec(shape.flat());
    let dim = 3 + basis.len();

    let eval = |y: &[f64]| -> Result<f64> {
        let mut q = q0.clone();
        for (k, e) in basis.iter().enumerate() {
            q += e * y[3 + k];
        }
        let mut cfg = PlanarConfiguration::from_flat(masses.clone(), q.as_slice())?;
        let norm = moment_of_inertia(&cfg).sqrt();
        let (a, b) = (y[0], [y[1], y[2]]);
        cfg = cfg.map_points(|p| [a * p[0] / norm + b[0], a * p[1] / norm + b[1]]);
        potential(&cfg)
    };

    let mut y0 = vec![0.0; dim];
    y0[0] = coords.alpha;
    let h = 1e-4;
    let steps: Vec<f64> = (0..dim).map(|k| if k < 3 { h * coords.alpha } else { h }).collect();
    let f0 = eval(&y0)?;
    let mut hess = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        let mut yp = y0.clone();
        let mut ym = y0.clone();
        yp[a] += steps[a];
        ym[a] -= steps[a];
        hess[(a, a)] = (eval(&yp)? - 2.0 * f0 + eval(&ym)?) / (steps[a] * steps[a]);
        for b in a + 1..dim {
            let mut v = [0.0; 4];
            for (idx, (sa, sb)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].into_iter().enumerate() {
                let mut y = y0.clone();
                y[a] += sa * steps[a];
                y[b] += sb * steps[b];
                v[idx] = eval(&y)?;
            }
            let d = (v[0] - v[1] - v[2] + v[3]) / (4.0 * steps[a] * steps[b]);
            hess[(a, b)] = d;
            hess[(b, a)] = d;
        }
    }

    let lambda = multiplier(&shape)?;
    let u = smale_energy(&shape)?;
    let shift_block = hess.view((1, 1), (2, 2)).into_owned();
    let shape_block = hess.view((3, 3), (dim - 3, dim - 3)).into_owned();
    let frob = |r: usize, c: usize, nr: usize, nc: usize| hess.view((r, c), (nr, nc)).norm();
    let mut predicted: Vec<f64> = reduced_hessian(&shape)?.eigenvalues.iter().map(|v| v / lambda.cbrt()).collect();
    predicted.push(0.0);
    predicted.sort_by(|a, b| a.total_cmp(b));
    let _ = n;
    Ok(BlockCheck {
        multiplier: lambda,
        alpha: coords.alpha,
        alpha_alpha: hess[(0, 0)],
        alpha_alpha_predicted: 2.0 + 2.0 * u / coords.alpha.powi(3),
        shift_eigenvalues: symmetric_eigenvalues(&shift_block),
        total_mass: masses.total(),
        alpha_shift_norm: frob(0, 1, 1, 2),
        alpha_shape_norm: frob(0, 3, 1, dim - 3),
        shift_shape_norm: frob(1, 3, 2, dim - 3),
        shape_block_spectrum: symmetric_eigenvalues(&shape_block),
        shape_block_predicted: predicted,
    })
}
