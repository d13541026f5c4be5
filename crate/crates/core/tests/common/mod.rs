#![allow(dead_code)]

use std::f64::consts::PI;

use dihedral_core::{GeneratingLoop, SymmetryParams, Vec3};
use rand::Rng;

/// A smooth random loop whose endpoints sit strictly inside the cone and
/// whose interior stays well away from the collision axes.
pub fn random_cone_loop<R: Rng>(rng: &mut R, params: SymmetryParams, n_intervals: usize) -> GeneratingLoop {
    let alpha = params.twist_angle();
    let r0 = rng.random_range(0.5..1.5);
    let r1 = rng.random_range(0.5..1.5);
    let z0 = -rng.random_range(0.2..0.8);
    let z1 = rng.random_range(0.2..0.8);
    let mut modes = [[0.0; 3]; 3];
    for (k, m) in modes.iter_mut().enumerate() {
        for v in m.iter_mut() {
            *v = rng.random_range(-0.1..0.1) / (k + 1) as f64;
        }
    }
    let tau = params.fundamental_length();
    GeneratingLoop::from_fn(params, n_intervals, |t| {
        let w = t / tau;
        let th = alpha * w;
        let rho = r0 + (r1 - r0) * w;
        let mut p = Vec3::new(rho * th.cos(), rho * th.sin(), z0 + (z1 - z0) * w);
        for (k, m) in modes.iter().enumerate() {
            let s = ((k + 1) as f64 * PI * w).sin();
            p += Vec3::new(m[0], m[1], m[2]) * s;
        }
        p
    })
    .expect("endpoints are projected onto their planes")
}

/// Random admissible parameters with `4 ≤ n ≤ 2·l_max`.
pub fn random_params<R: Rng>(rng: &mut R, l_max: usize) -> SymmetryParams {
    let l = rng.random_range(2..=l_max);
    let s = rng.random_range(1..=(l / 2).max(1));
    SymmetryParams::new(2 * l, s, rng.random_range(0.5..2.0)).unwrap()
}
