//! Independent checks that a loop is a periodic solution of Newton's
//! equations `ẍ_i = Σ_{k≠i} (x_k − x_i)/|x_k − x_i|³` with unit masses.
//!
//! [`el_residual`] compares a fourth-order second difference of the
//! extended generating particle with the force on body 0.
//! [`integrate_loop`] integrates all `n` bodies from the loop's initial state
//! over one period, ignoring the symmetry.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{Mat3, Vec3};
use crate::loops::{extend_generating, GeneratingLoop};
use crate::ode::{integrate, OdeOptions, OdeStatus};
use crate::symmetry::group_matrices;
use crate::{Error, Result};

/// Initial pair distances below this fraction of the configuration scale
/// are refused.
pub const MIN_PAIR_REL: f64 = 1e-8;

/// Force on body 0 when body `j` sits at `R_j u`.
fn symmetric_force(others: &[Mat3], u: &Vec3) -> Vec3 {
    let mut f = Vec3::ZERO;
    for r in others {
        let d = r.apply(u) - *u;
        let r2 = d.norm_squared();
        f += d * (1.0 / (r2 * r2.sqrt()));
    }
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElResidual {
    /// `|ü − F|` at every fundamental-domain node `0 … N`.
    pub profile: Vec<f64>,
    /// Maximum over the interior nodes `1 … N−1`.
    pub max_interior: f64,
    /// Residuals at the two joins `t = 0` and `t = T/2h`.
    pub at_joins: (f64, f64),
    /// Largest force magnitude on the fundamental domain.
    pub force_scale: f64,
}

impl ElResidual {
    pub fn relative(&self) -> f64 {
        self.max_interior / self.force_scale
    }
}

/// Euler-Lagrange residual of the loop sampled on its own grid.
pub fn el_residual(lp: &GeneratingLoop) -> Result<ElResidual> {
    let l = lp.params().l();
    let others: Vec<Mat3> = group_matrices(l).into_iter().skip(1).collect();
    let ext = extend_generating(lp);
    let m = ext.len() - 1;
    if m < 5 {
        return Err(Error::Domain("loop too short for a five-point stencil"));
    }
    let dt = lp.dt();
    let at = |i: isize| ext[i.rem_euclid(m as isize) as usize];
    let n = lp.n_intervals();
    let mut profile = Vec::with_capacity(n + 1);
    let mut force_scale: f64 = 0.0;
    for i in 0..=n {
        let k = i as isize;
        let u = at(k);
        for r in &others {
            if (r.apply(&u) - u).norm() == 0.0 {
                return Err(Error::OnCollisionAxis { index: i, distance: 0.0 });
            }
        }
        let acc =
            (at(k - 2) * -1.0 + at(k - 1) * 16.0 - u * 30.0 + at(k + 1) * 16.0 - at(k + 2)) * (1.0 / (12.0 * dt * dt));
        let f = symmetric_force(&others, &u);
        force_scale = force_scale.max(f.norm());
        profile.push((acc - f).norm());
    }
    let max_interior = profile[1..n].iter().copied().fold(0.0, f64::max);
    Ok(ElResidual { at_joins: (profile[0], profile[n]), max_interior, force_scale, profile })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NBodyState {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
}

impl NBodyState {
    fn pack(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(6 * self.positions.len());
        for p in self.positions.iter().chain(&self.velocities) {
            y.extend_from_slice(&p.0);
        }
        y
    }

    fn unpack(y: &[f64]) -> Self {
        let n = y.len() / 6;
        let v = |i: usize| Vec3::new(y[3 * i], y[3 * i + 1], y[3 * i + 2]);
        NBodyState { positions: (0..n).map(v).collect(), velocities: (n..2 * n).map(v).collect() }
    }

    /// `K − U` with unit masses.
    pub fn energy(&self) -> f64 {
        let k: f64 = self.velocities.iter().map(|v| 0.5 * v.norm_squared()).sum();
        k - crate::potential::pairwise_potential(&self.positions)
    }

    /// `ξ₃` component of the total angular momentum.
    pub fn angular_momentum_z(&self) -> f64 {
        self.positions.iter().zip(&self.velocities).map(|(p, v)| p.cross(v).z()).sum()
    }

    pub fn min_pair_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.positions.len() {
            for j in i + 1..self.positions.len() {
                d = d.min(self.positions[i].distance(&self.positions[j]));
            }
        }
        d
    }

    /// Applies `m` to every position and velocity.
    pub fn transformed(&self, m: &Mat3) -> Self {
        NBodyState {
            positions: self.positions.iter().map(|p| m.apply(p)).collect(),
            velocities: self.velocities.iter().map(|p| m.apply(p)).collect(),
        }
    }
}

fn nbody_rhs(y: &[f64], dy: &mut [f64]) {
    let n = y.len() / 6;
    let (pos, vel) = y.split_at(3 * n);
    let (dpos, dacc) = dy.split_at_mut(3 * n);
    dpos.copy_from_slice(vel);
    dacc.iter_mut().for_each(|a| *a = 0.0);
    for i in 0..n {
        for k in i + 1..n {
            let d = [pos[3 * k] - pos[3 * i], pos[3 * k + 1] - pos[3 * i + 1], pos[3 * k + 2] - pos[3 * i + 2]];
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            let inv3 = 1.0 / (r2 * r2.sqrt());
            for c in 0..3 {
                dacc[3 * i + c] += d[c] * inv3;
                dacc[3 * k + c] -= d[c] * inv3;
            }
        }
    }
}

/// Quantities monitored along an integration.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSummary {
    pub status: OdeStatus,
    pub t_reached: f64,
    pub final_state: NBodyState,
    pub accepted_steps: usize,
    /// Largest `|E(t) − E(0)| / |E(0)|`.
    pub energy_drift: f64,
    /// Largest `|L₃(t) − L₃(0)|` relative to `Σ|x_i||v_i|` at `t = 0`.
    pub angular_momentum_drift: f64,
    pub min_pair_distance: f64,
    /// Largest `|x_j − R_j x₀|` relative to the position scale, when the
    /// state is tagged with group matrices.
    pub symmetry_drift: f64,
}

/// Integrates the full system from `state` over `[0, t_end]`. When `group`
/// is given, body `j` is expected to stay at `group[j]·x₀`.
pub fn integrate_bodies(
    state: &NBodyState,
    t_end: f64,
    opts: &OdeOptions,
    group: Option<&[Mat3]>,
) -> Result<FlowSummary> {
    let scale = state.positions.iter().map(Vec3::norm).fold(0.0, f64::max);
    let d0 = state.min_pair_distance();
    if !(d0 > MIN_PAIR_REL * scale) {
        return Err(Error::Domain("initial configuration is at or near a collision"));
    }
    let e0 = state.energy();
    let l0 = state.angular_momentum_z();
    let l_scale: f64 = state
        .positions
        .iter()
        .zip(&state.velocities)
        .map(|(p, v)| p.norm() * v.norm())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let mut energy_drift: f64 = 0.0;
    let mut am_drift: f64 = 0.0;
    let mut min_pair = d0;
    let mut sym_drift: f64 = 0.0;
    let sol = integrate(
        |_, y, dy| nbody_rhs(y, dy),
        0.0,
        &state.pack(),
        t_end,
        opts,
        |_, y| {
            let s = NBodyState::unpack(y);
            energy_drift = energy_drift.max(((s.energy() - e0) / e0).abs());
            am_drift = am_drift.max((s.angular_momentum_z() - l0).abs() / l_scale);
            min_pair = min_pair.min(s.min_pair_distance());
            if let Some(g) = group {
                for (j, m) in g.iter().enumerate() {
                    sym_drift = sym_drift.max((s.positions[j] - m.apply(&s.positions[0])).norm() / scale);
                }
            }
        },
    );
    Ok(FlowSummary {
        status: sol.status,
        t_reached: sol.t,
        final_state: NBodyState::unpack(&sol.y),
        accepted_steps: sol.accepted,
        energy_drift,
        angular_momentum_drift: am_drift,
        min_pair_distance: min_pair,
        symmetry_drift: sym_drift,
    })
}

/// Initial state of all bodies: positions `R_j u₀(0)` and velocities from a
/// centered fourth-order difference of the periodic extension.
pub fn initial_state(lp: &GeneratingLoop) -> NBodyState {
    let ext = extend_generating(lp);
    let m = ext.len() - 1;
    let dt = lp.dt();
    let u0 = ext[0];
    let v0 = (ext[m - 2] - ext[m - 1] * 8.0 + ext[1] * 8.0 - ext[2]) * (1.0 / (12.0 * dt));
    let g = group_matrices(lp.params().l());
    NBodyState {
        positions: g.iter().map(|r| r.apply(&u0)).collect(),
        velocities: g.iter().map(|r| r.apply(&v0)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub el_residual: f64,
    pub el_residual_relative: f64,
    pub el_at_joins: (f64, f64),
    /// Larger of the relative position and velocity mismatch after one period.
    pub closure_error: f64,
    pub energy_drift: f64,
    pub angular_momentum_drift: f64,
    pub min_pair_distance: f64,
    pub symmetry_drift: f64,
    pub status: OdeStatus,
    pub t_reached: f64,
    pub steps: usize,
}

/// Integrates the loop's initial state over one period and compares.
pub fn integrate_loop(lp: &GeneratingLoop, opts: &OdeOptions) -> Result<(FlowSummary, f64)> {
    let start = initial_state(lp);
    let g = group_matrices(lp.params().l());
    let flow = integrate_bodies(&start, lp.params().period(), opts, Some(&g))?;
    let xs = start.positions.iter().map(Vec3::norm).fold(0.0, f64::max);
    let vs = start.velocities.iter().map(Vec3::norm).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut dx: f64 = 0.0;
    let mut dv: f64 = 0.0;
    for j in 0..start.positions.len() {
        dx = dx.max((flow.final_state.positions[j] - start.positions[j]).norm());
        dv = dv.max((flow.final_state.velocities[j] - start.velocities[j]).norm());
    }
    let closure = if flow.status == OdeStatus::Completed { (dx / xs).max(dv / vs) } else { f64::INFINITY };
    Ok((flow, closure))
}

/// Residual plus one-period integration.
pub fn verify(lp: &GeneratingLoop, opts: &OdeOptions) -> Result<VerificationReport> {
    let el = el_residual(lp)?;
    let (flow, closure) = integrate_loop(lp, opts)?;
    Ok(VerificationReport {
        el_residual: el.max_interior,
        el_residual_relative: el.relative(),
        el_at_joins: el.at_joins,
        closure_error: closure,
        energy_drift: flow.energy_drift,
        angular_momentum_drift: flow.angular_momentum_drift,
        min_pair_distance: flow.min_pair_distance,
        symmetry_drift: flow.symmetry_drift,
        status: flow.status,
        t_reached: flow.t_reached,
        steps: flow.accepted_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::test_loop_s1;
    use crate::symmetry::SymmetryParams;
    use core::f64::consts::PI;

    #[test]
    fn test_loop_is_not_a_solution() {
        let p = SymmetryParams::new(4, 1, 1.0).unwrap();
        let tl = test_loop_s1(&p, 256).unwrap();
        let r = el_residual(&tl.generating).unwrap();
        assert!(r.relative() > 0.05, "relative residual {}", r.relative());
    }

    #[test]
    fn single_polygon_is_out_of_domain() {
        assert!(SymmetryParams::new(2, 1, 1.0).is_err());
    }

    #[test]
    fn rotating_square_conserves_energy() {
        // four bodies on a rotating square: a relative equilibrium
        let n = 4;
        let rad = 1.0;
        let c: f64 = (0..n - 1).map(|k| 1.0 / (4.0 * (PI * (k + 1) as f64 / n as f64).sin())).sum::<f64>() / rad / rad;
        let w = (c / rad).sqrt();
        let positions: Vec<Vec3> = (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                Vec3::new(rad * a.cos(), rad * a.sin(), 0.0)
            })
            .collect();
        let velocities = positions.iter().map(|p| Vec3::new(-p.y() * w, p.x() * w, 0.0)).collect();
        let s = NBodyState { positions, velocities };
        let period = 2.0 * PI / w;
        let flow = integrate_bodies(&s, period, &OdeOptions::default(), None).unwrap();
        assert_eq!(flow.status, OdeStatus::Completed);
        assert!(flow.energy_drift < 1e-9);
        for (a, b) in flow.final_state.positions.iter().zip(&s.positions) {
            assert!((*a - *b).norm() < 1e-8);
        }
    }

    #[test]
    fn collision_start_rejected() {
        let s = NBodyState {
            positions: alloc::vec![Vec3::ZERO, Vec3::ZERO],
            velocities: alloc::vec![Vec3::ZERO, Vec3::ZERO],
        };
        assert!(integrate_bodies(&s, 1.0, &OdeOptions::default(), None).is_err());
    }
}
