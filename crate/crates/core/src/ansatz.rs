//! The multi-bump approximate potential
//!
//! ```text
//! W_ξ(x) = Σ_i w^{λ_i}(x − ξ_i),    ξ_i = ω^{−2/3} (ζ_i, 0)
//! ```
//!
//! together with the energy functional
//!
//! ```text
//! J[u] = ½ ∫|∇u|² − (1/(p+1)) Σ_i ∫ (u − λ_i + ½ω²|x′|²)₊^{p+1} χ_i
//! ```
//!
//! its error field, decay-weighted norms, and the measurements that compare
//! `J[W_ξ]` with `Σ λ_i^γ e⋆ − ω^{2/3} V_m(ζ)` as `ω → 0`.
//!
//! Every integral over a ball is a product rule: Gauss–Legendre panels
//! aligned with the stored profile radii up to the support edge, a shell
//! rule out to the edge of the perturbed support, and an angular rule.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::cell::{CellProfile, ExponentMetadata};
use crate::config::{MassVector, PlanarConfiguration, Vec2};
use crate::error::{Error, Result};
use crate::fit::{linear_fit, loglog_slope};
use crate::linalg::solve;
use crate::potential::{potential, scaled_gradient};
use crate::quadrature::{AngularRule, GaussLegendre};

pub type Vec3 = [f64; 3];

/// Default `μ` in the admissibility constraints.
pub const DEFAULT_MU: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    pub profile: CellProfile,
    pub lambdas: Vec<f64>,
    pub masses: MassVector,
    /// `ζ = ω^{2/3} ξ`; equal to the planar `ξ` when `ω = 0`.
    pub centers_zeta: PlanarConfiguration,
    pub omega: f64,
    pub centers_xi: Vec<Vec3>,
    pub cutoff_radius: f64,
    pub mu_constraint: f64,
    pub support_radii: Vec<f64>,
    /// `λ_i^{(p−1)/2}`.
    pub length_factors: Vec<f64>,
    pub energy_exponent: ExponentMetadata,
}

impl Ansatz {
    /// Builds `W_ξ` for `ξ = ω^{−2/3} ζ`.
    pub fn build(
        profile: &CellProfile,
        masses: &MassVector,
        zeta: &PlanarConfiguration,
        omega: f64,
        mu: f64,
    ) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::domain("omega must be positive"));
        }
        let s = omega.powf(-2.0 / 3.0);
        let xi: Vec<Vec2> = zeta.points().iter().map(|z| [s * z[0], s * z[1]]).collect();
        Self::from_centers(profile, masses, &xi, omega, mu)
    }

    /// Builds `W_ξ` from the planar centers `ξ` directly; `ω = 0` is allowed
    /// and switches off the `ω`-dependent constraints.
    pub fn from_centers(profile: &CellProfile, masses: &MassVector, xi: &[Vec2], omega: f64, mu: f64) -> Result<Self> {
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::domain("omega must be nonnegative"));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::domain("mu must be positive"));
        }
        if masses.len() != xi.len() {
            return Err(Error::domain("one center per mass is required"));
        }
        let lambdas = masses.as_slice().iter().map(|m| profile.lambda_for_mass(*m)).collect::<Result<Vec<_>>>()?;
        let support_radii: Vec<f64> = lambdas.iter().map(|l| profile.support_radius(*l)).collect();
        let length_factors: Vec<f64> = lambdas.iter().map(|l| profile.length_factor(*l)).collect();
        let cutoff_radius = support_radii.iter().cloned().fold(0.0, f64::max) + 1.0;
        if omega > 0.0 {
            let bound = mu * omega.powf(-2.0 / 3.0);
            for (i, x) in xi.iter().enumerate() {
                let r = x[0].hypot(x[1]);
                if !(r < bound) {
                    return Err(Error::Constraint(format!(
                        "|xi_{i}| = {r} violates |xi_i| < mu omega^(-2/3) = {bound}"
                    )));
                }
            }
        }
        for i in 0..xi.len() {
            for j in i + 1..xi.len() {
                let d = (xi[i][0] - xi[j][0]).hypot(xi[i][1] - xi[j][1]);
                if omega > 0.0 {
                    let bound = omega.powf(-2.0 / 3.0) / mu;
                    if !(d > bound) {
                        return Err(Error::Constraint(format!(
                            "|xi_{i} - xi_{j}| = {d} violates |xi_i - xi_j| > omega^(-2/3) / mu = {bound}"
                        )));
                    }
                }
                if !(d > 2.0 * cutoff_radius) {
                    return Err(Error::Constraint(format!(
                        "|xi_{i} - xi_{j}| = {d} violates |xi_i - xi_j| > 2 R_cut = {}",
                        2.0 * cutoff_radius
                    )));
                }
            }
        }
        let zeta_scale = if omega > 0.0 { omega.powf(2.0 / 3.0) } else { 1.0 };
        let centers_zeta = PlanarConfiguration::new(
            masses.clone(),
            xi.iter().map(|x| [zeta_scale * x[0], zeta_scale * x[1]]).collect(),
        )?;
        let energy_exponent = profile.verify_scaling()?.energy_exponent;
        Ok(Ansatz {
            profile: profile.clone(),
            lambdas,
            masses: masses.clone(),
            centers_zeta,
            omega,
            centers_xi: xi.iter().map(|x| [x[0], x[1], 0.0]).collect(),
            cutoff_radius,
            mu_constraint: mu,
            support_radii,
            length_factors,
            energy_exponent,
        })
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn p(&self) -> f64 {
        self.profile.p
    }

    pub fn centers_planar(&self) -> Vec<Vec2> {
        self.centers_xi.iter().map(|c| [c[0], c[1]]).collect()
    }

    /// `w_i(x) = w^{λ_i}(|x − ξ_i|)`.
    pub fn component(&self, i: usize, x: Vec3) -> f64 {
        let r = dist3(x, self.centers_xi[i]);
        self.lambdas[i] * self.profile.eval(self.length_factors[i] * r).0
    }

    pub fn eval_w(&self, x: Vec3) -> f64 {
        (0..self.len()).map(|i| self.component(i, x)).sum()
    }

    /// `½ ω² |x′|²`.
    pub fn centrifugal(&self, x: Vec3) -> f64 {
        0.5 * self.omega * self.omega * (x[0] * x[0] + x[1] * x[1])
    }

    /// `W − λ_i + ½ω²|x′|²`, whose positive part drives component `i`.
    pub fn local_potential(&self, i: usize, x: Vec3) -> f64 {
        self.eval_w(x) - self.lambdas[i] + self.centrifugal(x)
    }

    pub fn in_ball(&self, i: usize, x: Vec3) -> bool {
        dist3(x, self.centers_xi[i]) < self.cutoff_radius
    }

    /// `Σ_i [(W − λ_i + ½ω²|x′|²)₊^p χ_i − (w_i − λ_i)₊^p]`.
    pub fn error_field(&self, x: Vec3) -> f64 {
        let p = self.p();
        let w = self.eval_w(x);
        let c = self.centrifugal(x);
        let mut e = 0.0;
        for i in 0..self.len() {
            if self.in_ball(i, x) {
                e += (w - self.lambdas[i] + c).max(0.0).powf(p);
                e -= (self.component(i, x) - self.lambdas[i]).max(0.0).powf(p);
            }
        }
        e
    }

    /// Density `ρ_i = (W − λ_i + ½ω²|x′|²)₊^p χ_i` of component `i`.
    pub fn density(&self, i: usize, x: Vec3) -> f64 {
        if !self.in_ball(i, x) {
            return 0.0;
        }
        self.local_potential(i, x).max(0.0).powf(self.p())
    }

    /// Radius along direction `n` from `ξ_i` where the perturbed support of
    /// component `i` ends, capped at the cutoff radius.
    fn perturbed_edge(&self, i: usize, n: Vec3) -> f64 {
        let c = self.centers_xi[i];
        let f = |r: f64| self.local_potential(i, [c[0] + r * n[0], c[1] + r * n[1], c[2] + r * n[2]]);
        let (mut a, mut b) = (self.support_radii[i], self.cutoff_radius * (1.0 - 1e-14));
        if f(a) <= 0.0 {
            return a;
        }
        if f(b) > 0.0 {
            return b;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if b - a <= 1e-15 * b {
                break;
            }
            if f(m) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Visits the nodes of the product rule over ball `i`, passing
    /// `(x, w_i − λ_i, Σ_{j≠i} w_j, dV)`.
    fn ball_nodes(&self, i: usize, rule: &QuadratureLevel, mut visit: impl FnMut(Vec3, f64, f64, f64)) {
        let lam = self.lambdas[i];
        let s = self.length_factors[i];
        let c = self.centers_xi[i];
        let ri = self.support_radii[i];
        let grid = &self.profile.radial_grid;
        let mut radial = Vec::with_capacity((grid.len() - 1) * rule.panel.len());
        for k in 0..grid.len() - 1 {
            for (r, wr) in rule.panel.mapped(grid[k] / s, grid[k + 1] / s) {
                radial.push((r, wr * r * r, self.profile.eval_scaled(lam, r).0 - lam));
            }
        }
        let others = |x: Vec3| -> f64 { (0..self.len()).filter(|&j| j != i).map(|j| self.component(j, x)).sum() };
        for (n, wa) in &rule.angular {
            let wa = 4.0 * PI * wa;
            let point = |r: f64| [c[0] + r * n[0], c[1] + r * n[1], c[2] + r * n[2]];
            for &(r, wr, u) in &radial {
                let x = point(r);
                visit(x, u, others(x), wa * wr);
            }
            let edge = self.perturbed_edge(i, *n);
            if edge > ri {
                for (r, wr) in rule.shell.mapped(ri, edge) {
                    let x = point(r);
                    let u = self.profile.eval_scaled(lam, r).0 - lam;
                    visit(x, u, others(x), wa * wr * r * r);
                }
            }
        }
    }

    fn energy_at_level(&self, rule: &QuadratureLevel) -> EnergyBreakdown {
        let n = self.len();
        let p = self.p();
        let gamma = self.energy_exponent.measured;
        let g0 = self.profile.interior_gradient_energy
            + self.profile.m_star * self.profile.m_star / (4.0 * PI * self.profile.radius);
        let self_gradient: f64 = self.lambdas.iter().map(|l| l.powf(gamma) * g0).sum();
        let mut raw = vec![vec![0.0; n]; n];
        let mut nonlinear_terms = vec![0.0; n];
        for i in 0..n {
            let mut cross = vec![0.0; n];
            let mut nl = 0.0;
            self.ball_nodes(i, rule, |x, u, others, dv| {
                let f = u + others + self.centrifugal(x);
                if f > 0.0 {
                    nl += f.powf(p + 1.0) * dv;
                }
                if u > 0.0 {
                    let rho0 = u.powf(p) * dv;
                    for (j, cj) in cross.iter_mut().enumerate() {
                        if j != i {
                            *cj += rho0 * self.component(j, x);
                        }
                    }
                }
            });
            raw[i] = cross;
            nonlinear_terms[i] = nl;
        }
        let mut cross_gradient = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    cross_gradient[i][j] = 0.5 * (raw[i][j] + raw[j][i]);
                }
            }
        }
        let cross_sum: f64 = cross_gradient.iter().flatten().sum();
        let total = 0.5 * (self_gradient + cross_sum) - nonlinear_terms.iter().sum::<f64>() / (p + 1.0);
        EnergyBreakdown { self_gradient, cross_gradient, nonlinear_terms, total, refinement_change: None }
    }

    /// `J[W_ξ]` split into its gradient and nonlinear parts.
    pub fn energy_j(&self, spec: &QuadratureSpec) -> Result<EnergyBreakdown> {
        let mut out = self.energy_at_level(&QuadratureLevel::new(spec, false));
        if spec.refine {
            let fine = self.energy_at_level(&QuadratureLevel::new(spec, true));
            let change = (fine.total - out.total).abs();
            if !(change <= spec.tol * out.total.abs()) {
                return Err(Error::Accuracy { what: "ansatz energy quadrature", coarse: out.total, fine: fine.total });
            }
            out.refinement_change = Some(change);
        }
        Ok(out)
    }

    /// `(m_i^ω, x_i^ω)`: mass and center of mass of `ρ_i`.
    pub fn component_mass_center(&self, i: usize, spec: &QuadratureSpec) -> Result<(f64, Vec3)> {
        if i >= self.len() {
            return Err(Error::domain("component index out of range"));
        }
        let p = self.p();
        let c = self.centers_xi[i];
        let (mut mass, mut moment) = (0.0, [0.0; 3]);
        self.ball_nodes(i, &QuadratureLevel::new(spec, false), |x, u, others, dv| {
            let rho = (u + others + self.centrifugal(x)).max(0.0).powf(p) * dv;
            mass += rho;
            for k in 0..3 {
                moment[k] += rho * (x[k] - c[k]);
            }
        });
        if !(mass > 0.0) {
            return Err(Error::domain("component carries no mass"));
        }
        Ok((mass, [c[0] + moment[0] / mass, c[1] + moment[1] / mass, c[2] + moment[2] / mass]))
    }

    /// Sample points of the norm grid: spherical grids around every center
    /// and shells far outside all of them.
    pub fn norm_grid(&self, grid: &GridSpec) -> Vec<Vec3> {
        let dirs = grid.angular.points();
        let mut pts = Vec::new();
        for c in &self.centers_xi {
            pts.push(*c);
            for k in 1..=grid.radial_points {
                let r = self.cutoff_radius * k as f64 / grid.radial_points as f64;
                for (n, _) in &dirs {
                    pts.push([c[0] + r * n[0], c[1] + r * n[1], c[2] + r * n[2]]);
                }
            }
        }
        let extent = self.centers_xi.iter().map(|c| c[0].hypot(c[1])).fold(0.0, f64::max) + self.cutoff_radius;
        for f in &grid.far_shells {
            for (n, _) in &dirs {
                pts.push([f * extent * n[0], f * extent * n[1], f * extent * n[2]]);
            }
        }
        pts
    }

    /// Discrete `(‖φ‖_⋆, ‖φ‖_⋆⋆)` of a sampled field.
    pub fn weighted_norms(&self, sampler: impl Fn(Vec3) -> f64, grid: &GridSpec) -> (f64, f64) {
        let (mut star, mut double_star) = (0.0f64, 0.0f64);
        for x in self.norm_grid(grid) {
            let v = sampler(x).abs();
            let d: Vec<f64> = self.centers_xi.iter().map(|c| dist3(x, *c)).collect();
            let (w1, w4) = match grid.weight {
                WeightKind::Printed => (d.iter().sum::<f64>(), d.iter().map(|r| r.powi(4)).sum::<f64>()),
                WeightKind::Localized => {
                    let m = d.iter().cloned().fold(f64::INFINITY, f64::min);
                    (m, m.powi(4))
                }
            };
            star = star.max((w1 + 1.0) * v);
            double_star = double_star.max((w4 + 1.0) * v);
        }
        (star, double_star)
    }

    /// `‖𝖤‖_⋆⋆` on the given grid.
    pub fn error_norm(&self, grid: &GridSpec) -> f64 {
        self.weighted_norms(|x| self.error_field(x), grid).1
    }

    /// `Σ λ_i^γ e⋆` with the measured exponent `γ`.
    pub fn cell_energy_sum(&self) -> f64 {
        let gamma = self.energy_exponent.measured;
        self.lambdas.iter().map(|l| l.powf(gamma) * self.profile.e_star).sum()
    }
}

fn dist3(a: Vec3, b: Vec3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub self_gradient: f64,
    pub cross_gradient: Vec<Vec<f64>>,
    pub nonlinear_terms: Vec<f64>,
    pub total: f64,
    /// `|J_fine − J|` when a refinement pass was requested.
    pub refinement_change: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub angular: AngularRule,
    /// Gauss–Legendre order on each profile panel.
    pub radial_order: usize,
    /// Gauss–Legendre order on the shell beyond the unperturbed support.
    pub shell_order: usize,
    /// Relative disagreement allowed between a rule and its refinement.
    pub tol: f64,
    pub refine: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { angular: AngularRule::Lebedev26, radial_order: 8, shell_order: 16, tol: 1e-9, refine: true }
    }
}

struct QuadratureLevel {
    angular: Vec<(Vec3, f64)>,
    panel: GaussLegendre,
    shell: GaussLegendre,
}

impl QuadratureLevel {
    fn new(spec: &QuadratureSpec, refined: bool) -> Self {
        let k = if refined { 2 } else { 1 };
        let angular = if refined { spec.angular.refined() } else { spec.angular };
        QuadratureLevel {
            angular: angular.points(),
            panel: GaussLegendre::new(k * spec.radial_order),
            shell: GaussLegendre::new(k * spec.shell_order),
        }
    }
}

/// Weight used in `‖·‖_⋆` and `‖·‖_⋆⋆`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// Distance to the nearest center only.
    Localized,
    /// Sum of the distances to all centers.
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub radial_points: usize,
    pub angular: AngularRule,
    /// Far shells at these multiples of the configuration extent.
    pub far_shells: Vec<f64>,
    pub weight: WeightKind,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            radial_points: 32,
            angular: AngularRule::Product { n_theta: 8, n_phi: 16 },
            far_shells: vec![2.0, 4.0],
            weight: WeightKind::Localized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub omega: f64,
    pub j_total: f64,
    pub j_predicted: f64,
    pub residual: f64,
    pub e_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub residual_slope: f64,
    pub error_norm_slope: f64,
    /// `Σ λ_i^γ e⋆`.
    pub cell_energy_sum: f64,
    /// Intercept of `J + ω^{2/3} V_m(ζ)` fitted on `{1, ω^{4/3}, ω²}`.
    pub extrapolated_constant: f64,
    pub extrapolation_rel_error: f64,
    pub energy_exponent: ExponentMetadata,
}

/// One row of the expansion scan.
pub fn expansion_point(
    profile: &CellProfile,
    masses: &MassVector,
    zeta: &PlanarConfiguration,
    omega: f64,
    mu: f64,
    quad: &QuadratureSpec,
    grid: &GridSpec,
) -> Result<ScanRow> {
    let a = Ansatz::build(profile, masses, zeta, omega, mu)?;
    let j = a.energy_j(quad)?;
    let predicted = a.cell_energy_sum() - omega.powf(2.0 / 3.0) * potential(zeta)?;
    Ok(ScanRow {
        omega,
        j_total: j.total,
        j_predicted: predicted,
        residual: j.total - predicted,
        e_norm: a.error_norm(grid),
    })
}

/// Fits rates to rows already sorted by `ω`.
pub fn assemble_scan(
    profile: &CellProfile,
    masses: &MassVector,
    zeta: &PlanarConfiguration,
    rows: Vec<ScanRow>,
) -> Result<ScanReport> {
    let omegas: Vec<f64> = rows.iter().map(|r| r.omega).collect();
    let residuals: Vec<f64> = rows.iter().map(|r| r.residual).collect();
    let norms: Vec<f64> = rows.iter().map(|r| r.e_norm).collect();
    let v = potential(zeta)?;
    let shifted: Vec<f64> = rows.iter().map(|r| r.j_total + r.omega.powf(2.0 / 3.0) * v).collect();
    let intercept = extrapolate(&omegas, &shifted)?;
    let energy_exponent = profile.verify_scaling()?.energy_exponent;
    let cell_energy_sum: f64 = masses
        .as_slice()
        .iter()
        .map(|m| Ok(profile.lambda_for_mass(*m)?.powf(energy_exponent.measured) * profile.e_star))
        .sum::<Result<f64>>()?;
    Ok(ScanReport {
        residual_slope: loglog_slope(&omegas, &residuals)?,
        error_norm_slope: loglog_slope(&omegas, &norms)?,
        cell_energy_sum,
        extrapolated_constant: intercept,
        extrapolation_rel_error: (intercept - cell_energy_sum).abs() / cell_energy_sum.abs(),
        energy_exponent,
        rows,
    })
}

/// Value at `ω = 0` of a least-squares fit on `{1, ω^{4/3}, ω²}`, or of a
/// line in `ω^{4/3}` when only two samples are available.
pub fn extrapolate(omegas: &[f64], values: &[f64]) -> Result<f64> {
    let ts: Vec<f64> = omegas.iter().map(|w| w.powf(4.0 / 3.0)).collect();
    if omegas.len() < 3 {
        return Ok(linear_fit(&ts, values)?.intercept);
    }
    let t_max = ts.iter().cloned().fold(0.0, f64::max);
    let w_max = omegas.iter().map(|w| w * w).fold(0.0, f64::max);
    let basis = |k: usize| -> [f64; 3] { [1.0, ts[k] / t_max, omegas[k] * omegas[k] / w_max] };
    let mut ata = DMatrix::zeros(3, 3);
    let mut atb = DVector::zeros(3);
    for (k, y) in values.iter().enumerate() {
        let b = basis(k);
        for r in 0..3 {
            atb[r] += b[r] * y;
            for c in 0..3 {
                ata[(r, c)] += b[r] * b[c];
            }
        }
    }
    let coef = solve(&ata, &atb).ok_or_else(|| Error::domain("extrapolation samples are degenerate"))?;
    Ok(coef[0])
}

pub fn check_omegas(omegas: &[f64]) -> Result<()> {
    if omegas.len() < 2 {
        return Err(Error::domain("a scan needs at least two omega values"));
    }
    if omegas.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::domain("omegas must be positive"));
    }
    if omegas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("omegas must be sorted ascending"));
    }
    Ok(())
}

/// Energy, prediction, residual and error norm along `omegas`, with fitted
/// log-log rates.
pub fn expansion_scan(
    profile: &CellProfile,
    masses: &MassVector,
    zeta: &PlanarConfiguration,
    omegas: &[f64],
    mu: f64,
    quad: &QuadratureSpec,
    grid: &GridSpec,
) -> Result<ScanReport> {
    check_omegas(omegas)?;
    for &w in omegas {
        Ansatz::build(profile, masses, zeta, w, mu)?;
    }
    let rows = omegas
        .iter()
        .map(|&w| expansion_point(profile, masses, zeta, w, mu, quad, grid))
        .collect::<Result<Vec<_>>>()?;
    assemble_scan(profile, masses, zeta, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub omega: f64,
    pub step: f64,
    /// Central differences of `J[W_ξ]` in the planar coordinates of `ξ`.
    pub fd_gradient: Vec<Vec2>,
    /// `−∇V_m^ω(ξ)`.
    pub predicted: Vec<Vec2>,
    pub max_deviation: f64,
    pub max_predicted: f64,
    /// Quadrature refinement change of `J` divided by the step.
    pub fd_noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub points: Vec<GradientCheck>,
    /// `log(dev_1/dev_2) / log(ω_1/ω_2)` over the first and last points.
    pub deviation_exponent: Option<f64>,
}

pub fn gradient_check_at(
    profile: &CellProfile,
    masses: &MassVector,
    zeta: &PlanarConfiguration,
    omega: f64,
    mu: f64,
    quad: &QuadratureSpec,
) -> Result<GradientCheck> {
    let base = Ansatz::build(profile, masses, zeta, omega, mu)?;
    let xi = base.centers_planar();
    let n = xi.len();
    let spacing = if n >= 2 {
        let c = PlanarConfiguration::new(masses.clone(), xi.clone())?;
        c.min_pair_distance()
    } else {
        base.cutoff_radius
    };
    let h = 1e-3 * spacing;
    let refined = base.energy_j(&QuadratureSpec { refine: true, ..*quad })?;
    let fd_noise = refined.refinement_change.unwrap_or(0.0) / h;
    let plain = QuadratureSpec { refine: false, ..*quad };
    let mut fd = vec![[0.0; 2]; n];
    for i in 0..n {
        for k in 0..2 {
            let mut plus = xi.clone();
            let mut minus = xi.clone();
            plus[i][k] += h;
            minus[i][k] -= h;
            let jp = Ansatz::from_centers(profile, masses, &plus, omega, mu)?.energy_j(&plain)?.total;
            let jm = Ansatz::from_centers(profile, masses, &minus, omega, mu)?.energy_j(&plain)?.total;
            fd[i][k] = (jp - jm) / (2.0 * h);
        }
    }
    let xi_config = PlanarConfiguration::new(masses.clone(), xi)?;
    let predicted: Vec<Vec2> = scaled_gradient(&xi_config, omega)?.iter().map(|g| [-g[0], -g[1]]).collect();
    let m = masses.as_slice();
    let mut force_scale = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let d2 = crate::config::dist2(xi_config.points()[i], xi_config.points()[j]);
            force_scale = force_scale.max(m[i] * m[j] / (4.0 * PI * d2 * d2));
        }
    }
    if force_scale > 0.0 && fd_noise > 1e-2 * force_scale {
        return Err(Error::Accuracy { what: "finite-difference energy gradient", coarse: fd_noise, fine: force_scale });
    }
    let max_deviation =
        fd.iter().zip(&predicted).flat_map(|(a, b)| [(a[0] - b[0]).abs(), (a[1] - b[1]).abs()]).fold(0.0, f64::max);
    let max_predicted = predicted.iter().flat_map(|g| [g[0].abs(), g[1].abs()]).fold(0.0, f64::max);
    Ok(GradientCheck { omega, step: h, fd_gradient: fd, predicted, max_deviation, max_predicted, fd_noise })
}

/// Compares `∇_ξ J[W_ξ]` with `−∇V_m^ω(ξ)` at each `ω`.
pub fn gradient_expansion_check(
    profile: &CellProfile,
    masses: &MassVector,
    zeta: &PlanarConfiguration,
    omegas: &[f64],
    mu: f64,
    quad: &QuadratureSpec,
) -> Result<GradientReport> {
    let points =
        omegas.iter().map(|&w| gradient_check_at(profile, masses, zeta, w, mu, quad)).collect::<Result<Vec<_>>>()?;
    Ok(GradientReport::from_points(points))
}

impl GradientReport {
    pub fn from_points(points: Vec<GradientCheck>) -> Self {
        let deviation_exponent = match (points.first(), points.last()) {
            (Some(a), Some(b)) if points.len() >= 2 && a.max_deviation > 0.0 && b.max_deviation > 0.0 => {
                Some((a.max_deviation / b.max_deviation).ln() / (a.omega / b.omega).ln())
            }
            _ => None,
        };
        GradientReport { points, deviation_exponent }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::solve_normalized;
    use crate::equilibria::{lagrange_triangle, two_body};
    use approx::assert_relative_eq;
    use std::sync::OnceLock;

    extern crate std;

    fn cell() -> &'static CellProfile {
        static C: OnceLock<CellProfile> = OnceLock::new();
        C.get_or_init(|| solve_normalized(2.5, 1e-11).unwrap())
    }

    fn pair() -> (MassVector, PlanarConfiguration) {
        let m = cell().m_star;
        let z = two_body(m, m).unwrap();
        (z.masses().clone(), z)
    }

    fn raw_cross(a: &Ansatz, i: usize, j: usize) -> f64 {
        let p = a.p();
        let mut sum = 0.0;
        let spec = QuadratureSpec { angular: AngularRule::Product { n_theta: 12, n_phi: 24 }, ..Default::default() };
        let level = QuadratureLevel::new(&spec, false);
        a.ball_nodes(i, &level, |x, u, _, dv| {
            if u > 0.0 {
                sum += u.powf(p) * dv * a.component(j, x);
            }
        });
        sum
    }

    fn single(omega: f64) -> Ansatz {
        let m = MassVector::new(vec![cell().m_star]).unwrap();
        Ansatz::from_centers(cell(), &m, &[[0.0, 0.0]], omega, DEFAULT_MU).unwrap()
    }

    #[test]
    fn build_validates_constraints() {
        let (m, z) = pair();
        assert!(Ansatz::build(cell(), &m, &z, 1e-3, 10.0).is_ok());
        let err = Ansatz::build(cell(), &m, &z, 1.0, 10.0).unwrap_err();
        assert!(matches!(err, Error::Constraint(ref s) if s.contains("2 R_cut")), "{err}");
        let far = z.map_points(|p| [20.0 * p[0], p[1]]);
        assert!(matches!(Ansatz::build(cell(), &m, &far, 1e-3, 10.0), Err(Error::Constraint(_))));
        let s = single(0.3);
        assert_eq!(s.lambdas, vec![1.0]);
        assert_relative_eq!(s.cutoff_radius, cell().radius + 1.0);
    }

    #[test]
    fn eval_w_superposes_cells() {
        let (m, z) = pair();
        let a = Ansatz::build(cell(), &m, &z, 1e-3, 10.0).unwrap();
        let x = [3.0, -1.0, 0.5];
        let parts: f64 = (0..2)
            .map(|i| {
                let one = MassVector::new(vec![m[i]]).unwrap();
                let c = a.centers_xi[i];
                Ansatz::from_centers(cell(), &one, &[[c[0], c[1]]], 0.0, 10.0).unwrap().eval_w(x)
            })
            .sum();
        assert_relative_eq!(a.eval_w(x), parts, max_relative = 1e-15);
        assert!(a.eval_w(a.centers_xi[0]) > a.lambdas[0]);
        assert_eq!(a.eval_w([1.0, 2.0, 0.7]), a.eval_w([1.0, 2.0, -0.7]));
    }

    #[test]
    fn far_field_is_monopole_to_quadrupole_order() {
        let (m, z) = pair();
        let a = Ansatz::build(cell(), &m, &z, 1e-2, 10.0).unwrap();
        let extent = a.centers_xi.iter().map(|c| c[0].hypot(c[1])).fold(0.0, f64::max);
        for (factor, dir) in [(10.0, [1.0, 0.0, 0.0]), (10.0, [0.0, 0.6, 0.8]), (100.0, [1.0, 0.0, 0.0])] {
            let r = factor * extent;
            let x = [r * dir[0], r * dir[1], r * dir[2]];
            let mono = m.total() / (4.0 * PI * r);
            let rel = (a.eval_w(x) - mono).abs() / mono;
            // Two equal masses at ±a seen from distance r: no dipole, and the
            // quadrupole correction is at most (a/r)² / (1 − (a/r)²).
            let q = (extent / r).powi(2);
            assert!(rel <= q / (1.0 - q) * (1.0 + 1e-12), "factor {factor}: {rel}");
        }
    }

    #[test]
    fn single_cell_energy_is_e_star() {
        let a = single(0.0);
        let j = a.energy_j(&QuadratureSpec::default()).unwrap();
        assert_relative_eq!(j.total, cell().e_star, max_relative = 1e-9);
        assert!(j.refinement_change.unwrap() <= 1e-9 * j.total.abs());
    }

    #[test]
    fn cross_term_is_newtonian_for_disjoint_cells() {
        let m = cell().m_star;
        let masses = MassVector::new(vec![m, 2.0 * m]).unwrap();
        for d in [15.0, 30.0] {
            let a = Ansatz::from_centers(cell(), &masses, &[[0.0, 0.0], [d, 0.0]], 0.0, 10.0).unwrap();
            let j = a.energy_j(&QuadratureSpec { refine: false, ..Default::default() }).unwrap();
            let expected = masses[0] * masses[1] / (4.0 * PI * d);
            assert_relative_eq!(j.cross_gradient[0][1], expected, max_relative = 1e-8);
            // Mean-value property: with an angular rule exact to high degree the
            // cross term is the quadrature mass of cell 0 times the point potential.
            let q0 = cell().mass_by_quadrature(a.lambdas[0]);
            assert_relative_eq!(raw_cross(&a, 0, 1), q0 * masses[1] / (4.0 * PI * d), max_relative = 1e-12);
            assert_eq!(j.cross_gradient[0][1], j.cross_gradient[1][0]);
        }
    }

    #[test]
    fn error_field_vanishes_where_expected() {
        let a = single(0.05);
        assert_eq!(a.error_field(a.centers_xi[0]), 0.0);
        assert_eq!(a.error_field([0.0, 0.0, 2.0 * a.cutoff_radius]), 0.0);
        let (m, z) = pair();
        let b = Ansatz::build(cell(), &m, &z, 1e-3, 10.0).unwrap();
        assert!(b.error_field(b.centers_xi[0]) > 0.0);
        assert_eq!(b.error_field([0.0, 0.0, 1e3]), 0.0);
    }

    #[test]
    fn weighted_norms_of_reference_fields() {
        let a = single(0.0);
        let grid = GridSpec::default();
        let (_, ds) = a.weighted_norms(|x| if dist3(x, a.centers_xi[0]) == 0.0 { 1.0 } else { 0.0 }, &grid);
        assert_eq!(ds, 1.0);
        let c = a.centers_xi[0];
        let (_, ds) = a.weighted_norms(|x| 1.0 / (dist3(x, c).powi(4) + 1.0), &grid);
        assert_relative_eq!(ds, 1.0, max_relative = 1e-14);
        let printed = GridSpec { weight: WeightKind::Printed, ..GridSpec::default() };
        let (m, z) = pair();
        let b = Ansatz::build(cell(), &m, &z, 1e-3, 10.0).unwrap();
        // The summed weight grows with the separation of the centers.
        assert!(b.weighted_norms(|x| b.error_field(x), &printed).1 > 1e3 * b.error_norm(&grid));
    }

    #[test]
    fn single_cell_mass_and_center() {
        let a = single(0.0);
        let (mass, center) = a.component_mass_center(0, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(mass, cell().m_star, max_relative = 1e-8);
        for c in center {
            assert!(c.abs() <= 1e-10);
        }
    }

    #[test]
    fn two_cell_masses_shift_at_two_thirds_rate() {
        let (m, z) = pair();
        let shift = |w: f64| {
            let a = Ansatz::build(cell(), &m, &z, w, 10.0).unwrap();
            let (mass, center) = a.component_mass_center(0, &QuadratureSpec::default()).unwrap();
            assert!(center[2].abs() <= 1e-12);
            mass - m[0]
        };
        let (s1, s2) = (shift(1e-4), shift(1e-3));
        assert!(s1 > 0.0 && s2 > 0.0);
        let rate = (s2 / s1).ln() / 10f64.ln();
        assert!((rate - 2.0 / 3.0).abs() < 0.05, "{rate}");
    }

    #[test]
    fn energy_matches_reduced_potential_at_small_omega() {
        let (m, z) = pair();
        let omegas = [1e-4, 1e-3, 1e-2];
        let report =
            expansion_scan(cell(), &m, &z, &omegas, 10.0, &QuadratureSpec::default(), &GridSpec::default()).unwrap();
        assert!((1.2..=1.5).contains(&report.residual_slope), "{report:?}");
        assert!((0.57..=0.77).contains(&report.error_norm_slope), "{report:?}");
        assert!(report.extrapolation_rel_error <= 1e-6, "{report:?}");
    }

    #[test]
    fn lagrange_triangle_scan_rates() {
        let ms = cell().m_star;
        let z = lagrange_triangle(ms, ms, ms, false).unwrap();
        let report = expansion_scan(
            cell(),
            z.masses(),
            &z,
            &[1e-4, 1e-3, 1e-2],
            10.0,
            &QuadratureSpec::default(),
            &GridSpec::default(),
        )
        .unwrap();
        assert!((1.2..=1.5).contains(&report.residual_slope), "{report:?}");
        assert!((0.57..=0.77).contains(&report.error_norm_slope), "{report:?}");
    }

    #[test]
    fn scan_rejects_bad_omegas() {
        let (m, z) = pair();
        let q = QuadratureSpec::default();
        let g = GridSpec::default();
        assert!(expansion_scan(cell(), &m, &z, &[1e-3, 1e-4], 10.0, &q, &g).is_err());
        assert!(matches!(expansion_scan(cell(), &m, &z, &[1e-3, 1.0], 10.0, &q, &g), Err(Error::Constraint(_))));
    }

    #[test]
    fn single_cell_gradient_vanishes() {
        let m = MassVector::new(vec![cell().m_star]).unwrap();
        let z = PlanarConfiguration::new(m.clone(), vec![[0.0, 0.0]]).unwrap();
        let g = gradient_check_at(cell(), &m, &z, 1e-3, 10.0, &QuadratureSpec::default()).unwrap();
        assert_eq!(g.max_predicted, 0.0);
        assert!(g.max_deviation <= 1e-10, "{g:?}");
    }

    #[test]
    fn gradient_deviation_decays_at_critical_point() {
        let (m, z) = pair();
        let r = gradient_expansion_check(cell(), &m, &z, &[1e-3, 1e-4], 10.0, &QuadratureSpec::default()).unwrap();
        assert!(r.deviation_exponent.unwrap() >= 1.2, "{r:?}");
    }

    #[test]
    fn gradient_leading_terms_agree_off_equilibrium() {
        let (m, z) = pair();
        let z = z.map_points(|p| [1.1 * p[0], 1.1 * p[1]]);
        for w in [1e-3, 1e-4] {
            let g = gradient_check_at(cell(), &m, &z, w, 10.0, &QuadratureSpec::default()).unwrap();
            // −∇V^ω is O(ω^{4/3}); the deviation sits a further ω^{2/3} lower.
            assert!(g.max_deviation <= 0.2 * g.max_predicted, "{g:?}");
        }
    }
}
