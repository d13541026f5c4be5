use dihedral_core::action::{reduced_action, Scheme};
use dihedral_core::dynamics::{el_residual, initial_state, integrate_bodies, verify};
use dihedral_core::estimates::test_loop_s1;
use dihedral_core::loops::{reconstruct, ConeStatus};
use dihedral_core::ode::{OdeOptions, OdeStatus};
use dihedral_core::solver::{perturb, refine, solve, solve_seeds, InitialGuess, SolveConfig, Termination};
use dihedral_core::symmetry::{choreography_classes, group_matrices};
use dihedral_core::{GeneratingLoop, SymmetryParams};

fn config(n: usize, s: usize, nn: usize) -> SolveConfig {
    SolveConfig::new(SymmetryParams::new(n, s, 1.0).unwrap(), nn)
}

#[test]
fn four_body_solve_refine_and_restart() {
    let cfg = config(4, 1, 64);
    let r = solve(&cfg).unwrap();
    assert_eq!(r.termination, Termination::Converged);
    assert!(r.grad_norm <= cfg.grad_tol);
    assert!(r.below_b && r.action.total < 30.65);
    assert!(r.min_pair_distance > 0.01 * r.orbit.scale());
    assert_eq!(r.generating.cone_check().status, ConeStatus::InCone);
    // recomputed totals may tick up by rounding; the exact decrements may not
    assert!(r.history.windows(2).all(|w| w[1] <= w[0] + 8.0 * f64::EPSILON * w[0]));
    assert!(r.decrements.iter().all(|&d| d <= 0.0));

    let mut again = cfg.clone();
    again.initial_guess = InitialGuess::Loop(r.generating.clone());
    let restart = solve(&again).unwrap();
    assert!(restart.converged() && restart.iterations <= 2, "restart took {} iterations", restart.iterations);

    let r2 = refine(&r, 128, &cfg).unwrap();
    let r3 = refine(&r2, 256, &cfg).unwrap();
    assert!(r2.below_b && r3.below_b);
    let (a1, a2, a3) = (r.action.total, r2.action.total, r3.action.total);
    assert!((a3 - a2).abs() < (a2 - a1).abs(), "{a1} {a2} {a3}");
    assert!(refine(&r, 96, &cfg).is_err());

    let orbit = reconstruct(&r3.orbit, 2 * 2 * 256).unwrap();
    assert_eq!(orbit.partition, choreography_classes(r3.generating.params()));
    assert!(orbit.center_of_mass_deviation() < 1e-12);
}

#[test]
fn trapezoid_scheme_is_second_order_only() {
    let mut cfg = config(4, 1, 128);
    cfg.scheme = Scheme::Trapezoid;
    let plain = solve(&cfg).unwrap();
    assert!(plain.converged());
    assert_eq!(plain.orbit, plain.generating);
    assert!((plain.action.total - reduced_action(&plain.generating).unwrap().total).abs() < 1e-12 * plain.action.total);
    let corrected = solve(&config(4, 1, 128)).unwrap();
    let opts = OdeOptions::default();
    let c_plain = verify(&plain.orbit, &opts).unwrap().closure_error;
    let c_corr = verify(&corrected.orbit, &opts).unwrap().closure_error;
    assert!(c_corr < 0.1 * c_plain, "corrected {c_corr:e} vs trapezoid {c_plain:e}");
}

#[test]
fn seeds_are_deterministic() {
    let mut cfg = config(6, 1, 64);
    cfg.max_iters = 300;
    let a = solve_seeds(&cfg, &[1, 2]).unwrap();
    let b = solve_seeds(&cfg, &[1, 2]).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.runs[0].1.generating, a.runs[1].1.generating);
    let best = &a.runs[a.best].1;
    assert!(a.runs.iter().all(|(_, r)| r.action.total >= best.action.total));
}

#[test]
fn perturbation_keeps_planes() {
    let cfg = config(10, 2, 64);
    let lp = cfg.initial_loop().unwrap();
    for seed in 0..20 {
        let q = perturb(&lp, seed, 0.05 * lp.scale()).unwrap();
        assert!(GeneratingLoop::new(*lp.params(), q.nodes().to_vec()).is_ok());
        assert_eq!(q, perturb(&lp, seed, 0.05 * lp.scale()).unwrap());
    }
}

#[test]
fn test_loop_is_a_negative_control() {
    let p = SymmetryParams::new(4, 1, 1.0).unwrap();
    let tl = test_loop_s1(&p, 256).unwrap();
    assert!(el_residual(&tl.generating).unwrap().relative() > 0.05);
    let v = verify(&tl.generating, &OdeOptions::default()).unwrap();
    assert!(v.closure_error > 1e-2);
}

#[test]
fn flow_conserves_and_commutes_with_the_group() {
    let p = SymmetryParams::new(6, 1, 1.0).unwrap();
    let tl = test_loop_s1(&p, 128).unwrap();
    let state = initial_state(&tl.generating);
    let g = group_matrices(p.l());
    let opts = OdeOptions::default();
    let flow = integrate_bodies(&state, 0.3, &opts, Some(&g)).unwrap();
    assert_eq!(flow.status, OdeStatus::Completed);
    assert!(flow.energy_drift < 1e-9, "energy drift {:e}", flow.energy_drift);
    assert!(flow.angular_momentum_drift < 1e-9);
    assert!(flow.symmetry_drift < 1e-9);
    for m in &g[1..] {
        let moved = integrate_bodies(&state.transformed(m), 0.3, &opts, None).unwrap();
        let expect = flow.final_state.transformed(m);
        let scale = expect.positions.iter().map(|q| q.norm()).fold(0.0, f64::max);
        for (a, b) in moved.final_state.positions.iter().zip(&expect.positions) {
            assert!((*a - *b).norm() < 1e-8 * scale);
        }
    }
}

#[test]
fn converged_orbit_verifies() {
    let r = solve(&config(4, 1, 256)).unwrap();
    let v = verify(&r.orbit, &OdeOptions::default()).unwrap();
    assert_eq!(v.status, OdeStatus::Completed);
    assert!(v.closure_error < 1e-4);
    assert!(v.el_residual_relative < 1e-3);
    assert!(v.energy_drift < 1e-9);
    assert!(v.symmetry_drift <= 10.0 * v.closure_error);
    assert!(v.min_pair_distance > 0.01 * r.orbit.scale());
}
