//! Newtonian N-body integration in ℝ³ with gravitational constant `1/(4π)`,
//! used to check that relative equilibria rotate rigidly.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::ansatz::Vec3;
use crate::config::{MassVector, PlanarConfiguration};
use crate::error::{Error, Result};

/// Pairs closer than this fraction of the configuration scale are treated
/// as collisions.
pub const COLLISION_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub masses: MassVector,
    pub time: f64,
}

impl PhaseState {
    pub fn new(positions: Vec<Vec3>, velocities: Vec<Vec3>, masses: MassVector, time: f64) -> Result<Self> {
        if positions.len() != masses.len() || velocities.len() != masses.len() {
            return Err(Error::domain("positions, velocities and masses must have equal lengths"));
        }
        if positions.iter().chain(&velocities).flatten().any(|v| !v.is_finite()) || !time.is_finite() {
            return Err(Error::domain("phase state entries must be finite"));
        }
        Ok(PhaseState { positions, velocities, masses, time })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn center_of_mass(&self) -> Vec3 {
        let m = self.masses.as_slice();
        let total = self.masses.total();
        let mut c = [0.0; 3];
        for (mj, x) in m.iter().zip(&self.positions) {
            for k in 0..3 {
                c[k] += mj * x[k] / total;
            }
        }
        c
    }

    fn scale(&self) -> f64 {
        let c = self.center_of_mass();
        let s = self.positions.iter().map(|x| norm3(sub3(*x, c))).fold(0.0, f64::max);
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }
}

fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm3(a: Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn cross3(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// `ẍ_j = Σ_{k≠j} (m_k/4π) (x_k − x_j)/|x_k − x_j|³`.
pub fn accelerations(state: &PhaseState) -> Result<Vec<Vec3>> {
    let n = state.len();
    let m = state.masses.as_slice();
    let limit = COLLISION_RTOL * state.scale();
    let mut acc = vec![[0.0; 3]; n];
    for j in 0..n {
        for k in j + 1..n {
            let d = sub3(state.positions[k], state.positions[j]);
            let r = norm3(d);
            if !(r >= limit) {
                return Err(Error::Coincident { i: j, j: k, distance: r });
            }
            let inv = 1.0 / (4.0 * PI * r * r * r);
            for c in 0..3 {
                acc[j][c] += m[k] * inv * d[c];
                acc[k][c] -= m[j] * inv * d[c];
            }
        }
    }
    Ok(acc)
}

/// Positions `ω^{−2/3}(ζ_j, 0)` and velocities `ω^{1/3}(iζ_j, 0)` of the
/// rigidly rotating solution at `t = 0`.
pub fn releq_initial_conditions(zeta: &PlanarConfiguration, omega: f64) -> Result<PhaseState> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::domain("omega must be positive"));
    }
    let a = omega.powf(-2.0 / 3.0);
    let b = omega.powf(1.0 / 3.0);
    let positions = zeta.points().iter().map(|z| [a * z[0], a * z[1], 0.0]).collect();
    let velocities = zeta.points().iter().map(|z| [-b * z[1], b * z[0], 0.0]).collect();
    PhaseState::new(positions, velocities, zeta.masses().clone(), 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub snapshots: Vec<PhaseState>,
    pub dt: f64,
}

/// Kick-drift-kick velocity Verlet with a fixed step; keeps every
/// `stride`-th state together with the first and last.
pub fn integrate(state: &PhaseState, dt: f64, n_steps: usize, stride: usize) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain("dt must be positive"));
    }
    let stride = stride.max(1);
    let mut s = state.clone();
    let mut acc = accelerations(&s)?;
    let mut snapshots = vec![s.clone()];
    for step in 1..=n_steps {
        for (v, a) in s.velocities.iter_mut().zip(&acc) {
            for c in 0..3 {
                v[c] += 0.5 * dt * a[c];
            }
        }
        for (x, v) in s.positions.iter_mut().zip(&s.velocities) {
            for c in 0..3 {
                x[c] += dt * v[c];
            }
        }
        acc = accelerations(&s)?;
        for (v, a) in s.velocities.iter_mut().zip(&acc) {
            for c in 0..3 {
                v[c] += 0.5 * dt * a[c];
            }
        }
        s.time = state.time + step as f64 * dt;
        if step % stride == 0 || step == n_steps {
            snapshots.push(s.clone());
        }
    }
    Ok(Trajectory { snapshots, dt })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conserved {
    pub energy: f64,
    pub angular_momentum: Vec3,
    pub linear_momentum: Vec3,
}

pub fn conserved(state: &PhaseState) -> Result<Conserved> {
    let m = state.masses.as_slice();
    let n = state.len();
    let mut kinetic = 0.0;
    let mut l = [0.0; 3];
    let mut pm = [0.0; 3];
    for j in 0..n {
        let v = state.velocities[j];
        kinetic += 0.5 * m[j] * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        let lj = cross3(state.positions[j], v);
        for c in 0..3 {
            l[c] += m[j] * lj[c];
            pm[c] += m[j] * v[c];
        }
    }
    let limit = COLLISION_RTOL * state.scale();
    let mut pot = 0.0;
    for j in 0..n {
        for k in j + 1..n {
            let r = norm3(sub3(state.positions[k], state.positions[j]));
            if !(r >= limit) {
                return Err(Error::Coincident { i: j, j: k, distance: r });
            }
            pot -= m[j] * m[k] / (4.0 * PI * r);
        }
    }
    Ok(Conserved { energy: kinetic + pot, angular_momentum: l, linear_momentum: pm })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub omega: f64,
    pub duration: f64,
    /// `max |d_jk(t) − d_jk(0)| / d_jk(0)`.
    pub pairwise_distance_drift: f64,
    /// `max |r_j(t) − r_j(0)| / r_j(0)`, radii about the center of mass.
    pub radius_drift: f64,
    /// `max |arg x_j′(t) − arg ζ_j − ωt|`, phase-unwrapped.
    pub angular_deviation: f64,
    pub out_of_plane: f64,
    /// `max |E(t) − E(0)| / |E(0)|`.
    pub energy_drift: f64,
    pub angular_momentum_drift: f64,
    pub linear_momentum_drift: f64,
}

fn wrap(a: f64) -> f64 {
    let t = 2.0 * PI;
    a - t * (a / t).round()
}

/// Measures how far a trajectory is from rigid rotation at rate `ω`.
pub fn rigidity_report(traj: &Trajectory, zeta: &PlanarConfiguration, omega: f64) -> Result<RigidityReport> {
    let first = traj.snapshots.first().ok_or_else(|| Error::domain("empty trajectory"))?;
    let n = first.len();
    if zeta.len() != n {
        return Err(Error::domain("trajectory and configuration sizes differ"));
    }
    let c0 = conserved(first)?;
    let d0: Vec<f64> = (0..n)
        .flat_map(|j| (j + 1..n).map(move |k| (j, k)))
        .map(|(j, k)| norm3(sub3(first.positions[k], first.positions[j])))
        .collect();
    let com0 = first.center_of_mass();
    let r0: Vec<f64> = first.positions.iter().map(|x| norm3(sub3(*x, com0))).collect();
    let z_scale = zeta.max_radius();
    let tracked: Vec<bool> = zeta.points().iter().map(|z| z[0].hypot(z[1]) > 1e-9 * z_scale).collect();
    let base: Vec<f64> = zeta.points().iter().map(|z| z[1].atan2(z[0])).collect();
    let mut phase: Vec<f64> = base.clone();
    let mut prev_raw: Vec<f64> = base.clone();
    let l_scale = norm3(c0.angular_momentum).max(1e-300);
    let p_scale: f64 =
        first.masses.as_slice().iter().zip(&first.velocities).map(|(m, v)| m * norm3(*v)).sum::<f64>().max(1e-300);
    let mut r = RigidityReport {
        omega,
        duration: traj.snapshots.last().map(|s| s.time - first.time).unwrap_or(0.0),
        pairwise_distance_drift: 0.0,
        radius_drift: 0.0,
        angular_deviation: 0.0,
        out_of_plane: 0.0,
        energy_drift: 0.0,
        angular_momentum_drift: 0.0,
        linear_momentum_drift: 0.0,
    };
    for s in &traj.snapshots {
        if s.len() != n {
            return Err(Error::domain("snapshot sizes differ"));
        }
        let t = s.time - first.time;
        let mut idx = 0;
        for j in 0..n {
            for k in j + 1..n {
                let d = norm3(sub3(s.positions[k], s.positions[j]));
                r.pairwise_distance_drift = r.pairwise_distance_drift.max((d - d0[idx]).abs() / d0[idx]);
                idx += 1;
            }
        }
        let com = s.center_of_mass();
        for j in 0..n {
            let x = sub3(s.positions[j], com);
            r.out_of_plane = r.out_of_plane.max(s.positions[j][2].abs());
            if r0[j] > 0.0 && tracked[j] {
                r.radius_drift = r.radius_drift.max((norm3(x) - r0[j]).abs() / r0[j]);
            }
            if tracked[j] {
                let raw = x[1].atan2(x[0]);
                phase[j] += wrap(raw - prev_raw[j]);
                prev_raw[j] = raw;
                r.angular_deviation = r.angular_deviation.max((phase[j] - base[j] - omega * t).abs());
            }
        }
        let c = conserved(s)?;
        r.energy_drift = r.energy_drift.max((c.energy - c0.energy).abs() / c0.energy.abs());
        r.angular_momentum_drift =
            r.angular_momentum_drift.max(norm3(sub3(c.angular_momentum, c0.angular_momentum)) / l_scale);
        r.linear_momentum_drift =
            r.linear_momentum_drift.max(norm3(sub3(c.linear_momentum, c0.linear_momentum)) / p_scale);
    }
    Ok(r)
}

/// Integrates `periods` rotation periods `2π/ω` from the relative-equilibrium
/// initial data and reports rigidity.
pub fn simulate_rigidity(
    zeta: &PlanarConfiguration,
    omega: f64,
    periods: f64,
    steps_per_period: usize,
    stride: usize,
) -> Result<(Trajectory, RigidityReport)> {
    if !(periods > 0.0) || steps_per_period == 0 {
        return Err(Error::domain("periods and steps per period must be positive"));
    }
    let state = releq_initial_conditions(zeta, omega)?;
    let dt = 2.0 * PI / omega / steps_per_period as f64;
    let n_steps = (periods * steps_per_period as f64).round() as usize;
    let traj = integrate(&state, dt, n_steps, stride)?;
    let report = rigidity_report(&traj, zeta, omega)?;
    Ok((traj, report))
}
