//! Cone-constrained minimization of the reduced action.
//!
//! The optimizer is L-BFGS on the free coordinates of the generating loop
//! with Armijo backtracking. The sufficient-decrease test uses
//! [`ActionFunctional::difference`], which stays accurate when the decrease
//! is below the rounding error of the action. Trial points that come within
//! `1e-8·scale` of a collision axis or of the cone boundary are treated like
//! failed Armijo tests and the step is halved.
//!
//! By default the minimized functional is [`Scheme::Corrected`]; the result
//! carries both the minimizer and its post-processed orbit samples.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::action::{ActionFunctional, ActionValue, Scheme};
use crate::estimates::{default_test_loop, total_collision_lower_bound};
use crate::linalg::Vec3;
use crate::loops::{cone_check, reconstruct, ConeStatus, GeneratingLoop};
use crate::symmetry::SymmetryParams;
use crate::{Error, Result};

/// Relative distance to `Γ` and to the cone boundary below which a trial
/// step is rejected.
pub const GUARD_REL: f64 = 1e-8;
/// Largest number of step reductions in one line search.
pub const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    TestLoop,
    PerturbedTestLoop,
    Loop(GeneratingLoop),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub params: SymmetryParams,
    pub n_intervals: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Length of the first trial step relative to the loop scale.
    pub initial_step: f64,
    pub backtrack: f64,
    pub armijo: f64,
    pub memory: usize,
    pub seed: u64,
    /// Perturbation amplitude relative to the loop scale.
    pub perturbation: f64,
    pub initial_guess: InitialGuess,
    pub scheme: Scheme,
}

impl SolveConfig {
    pub fn new(params: SymmetryParams, n_intervals: usize) -> Self {
        SolveConfig {
            params,
            n_intervals,
            max_iters: 50_000,
            grad_tol: 1e-8,
            initial_step: 1e-2,
            backtrack: 0.5,
            armijo: 1e-4,
            memory: 10,
            seed: 0,
            perturbation: 1e-2,
            initial_guess: InitialGuess::PerturbedTestLoop,
            scheme: Scheme::Corrected,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::Domain("grad_tol must be positive"));
        }
        if self.n_intervals < 64 {
            return Err(Error::Domain("grid size N must be at least 64"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::Domain("backtracking factor must lie in (0, 1)"));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::Domain("Armijo constant must lie in (0, 1)"));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::Domain("initial step must be positive"));
        }
        if self.memory == 0 {
            return Err(Error::Domain("quasi-Newton memory must be at least 1"));
        }
        if !(self.perturbation >= 0.0) {
            return Err(Error::Domain("perturbation amplitude must be non-negative"));
        }
        if let InitialGuess::Loop(lp) = &self.initial_guess {
            if lp.n_intervals() != self.n_intervals || lp.params() != &self.params {
                return Err(Error::Domain("initial loop does not match the configured parameters and grid"));
            }
        }
        Ok(())
    }

    pub fn initial_loop(&self) -> Result<GeneratingLoop> {
        match &self.initial_guess {
            InitialGuess::TestLoop => Ok(default_test_loop(&self.params, self.n_intervals)?.generating),
            InitialGuess::PerturbedTestLoop => {
                let lp = default_test_loop(&self.params, self.n_intervals)?.generating;
                let amp = self.perturbation * lp.scale();
                perturb(&lp, self.seed, amp)
            }
            InitialGuess::Loop(lp) => Ok(lp.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterCap,
    /// The step was reduced to nothing because every trial point came too
    /// close to a collision axis or to the cone boundary.
    BoundaryStall,
    /// No admissible step gave sufficient decrease even along the steepest
    /// descent direction.
    LineSearchStall,
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::IterCap => "iter_cap",
            Termination::BoundaryStall => "boundary_stall",
            Termination::LineSearchStall => "line_search_stall",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Minimizer of the discrete functional that was optimized.
    pub generating: GeneratingLoop,
    /// Samples of the orbit: `generating` mapped through
    /// [`ActionFunctional::postprocess`].
    pub orbit: GeneratingLoop,
    /// Value of the optimized functional at `generating`. For the corrected
    /// scheme this approximates the continuous action to fourth order.
    pub action: ActionValue,
    pub grad_norm: f64,
    pub iterations: usize,
    pub min_pair_distance: f64,
    pub min_axis_distance: f64,
    pub b: f64,
    pub below_b: bool,
    pub termination: Termination,
    /// Action after every accepted iterate, starting with the initial loop.
    pub history: Vec<f64>,
    /// Exact change of the action at every accepted step (all `≤ 0`).
    pub decrements: Vec<f64>,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Why a trial point was refused before evaluating the action.
fn guard(lp: &GeneratingLoop, cone_floor: f64) -> bool {
    let scale = lp.scale();
    let c = cone_check(lp);
    c.margin() > cone_floor && lp.min_distance_to_axes().value > GUARD_REL * scale
}

fn two_loop(g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = mem.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|x| -x).collect()
}

fn finish(
    functional: &ActionFunctional,
    lp: GeneratingLoop,
    grad_norm: f64,
    iterations: usize,
    termination: Termination,
    history: Vec<f64>,
    decrements: Vec<f64>,
) -> Result<SolveResult> {
    let params = *lp.params();
    let action = functional.value(lp.nodes())?;
    let processed = functional.postprocess(&lp)?;
    let full = reconstruct(&processed, 2 * params.h() * lp.n_intervals())?;
    let b = total_collision_lower_bound(&params);
    Ok(SolveResult {
        min_pair_distance: full.min_pair_distance().value,
        min_axis_distance: processed.min_distance_to_axes().value,
        generating: lp,
        orbit: processed,
        action,
        grad_norm,
        iterations,
        b,
        below_b: action.total < b,
        termination,
        history,
        decrements,
    })
}

/// Minimizes the reduced action starting from the configured initial guess.
pub fn solve(config: &SolveConfig) -> Result<SolveResult> {
    config.validate()?;
    let start = config.initial_loop()?;
    let c = cone_check(&start);
    if c.status != ConeStatus::InCone {
        return Err(Error::OutsideCone { start: c.start_height, end: c.end_height });
    }
    minimize(config, start)
}

fn minimize(config: &SolveConfig, start: GeneratingLoop) -> Result<SolveResult> {
    let params = *start.params();
    let n = start.n_intervals();
    let functional = ActionFunctional::with_scheme(params, config.scheme);
    let cone_floor = GUARD_REL * start.scale();

    let mut x = start.free_coordinates();
    let mut lp = start;
    let (mut value, node_grad) = functional.value_and_gradient(lp.nodes())?;
    let mut g = functional.project_to_free(&node_grad);
    let mut history = alloc::vec![value.total];
    let mut decrements = Vec::new();
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(config.memory);

    for iter in 0..config.max_iters {
        let gn = norm(&g);
        if gn <= config.grad_tol {
            return finish(&functional, lp, gn, iter, Termination::Converged, history, decrements);
        }
        let mut steepest = mem.is_empty();
        let mut d = if steepest { g.iter().map(|v| -v).collect() } else { two_loop(&g, &mem) };
        if dot(&g, &d) >= -1e-12 * gn * norm(&d) {
            mem.clear();
            steepest = true;
            d = g.iter().map(|v| -v).collect();
        }

        let accepted = loop {
            let dn = norm(&d);
            let slope = dot(&g, &d);
            let mut alpha = if steepest { (config.initial_step * lp.scale() / dn).min(1.0) } else { 1.0 };
            let dir_nodes = GeneratingLoop::from_free(params, n, &d)?.nodes().to_vec();
            let mut found = None;
            let mut guarded = 0;
            for _ in 0..MAX_HALVINGS {
                let trial_x: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
                let trial = GeneratingLoop::from_free(params, n, &trial_x)?;
                if !guard(&trial, cone_floor) {
                    guarded += 1;
                    alpha *= 0.5;
                    continue;
                }
                match functional.difference(lp.nodes(), &dir_nodes, alpha) {
                    Ok(diff) if diff <= config.armijo * alpha * slope => {
                        found = Some((trial_x, trial, diff));
                        break;
                    }
                    Ok(_) => alpha *= config.backtrack,
                    Err(_) => {
                        guarded += 1;
                        alpha *= 0.5;
                    }
                }
            }
            match found {
                Some(f) => break Ok(f),
                None if !steepest => {
                    mem.clear();
                    steepest = true;
                    d = g.iter().map(|v| -v).collect();
                }
                None => {
                    break Err(if guarded == MAX_HALVINGS {
                        Termination::BoundaryStall
                    } else {
                        Termination::LineSearchStall
                    })
                }
            }
        };

        let (new_x, new_lp, diff) = match accepted {
            Ok(a) => a,
            Err(t) => return finish(&functional, lp, gn, iter, t, history, decrements),
        };
        let (new_value, node_grad) = functional.value_and_gradient(new_lp.nodes())?;
        let new_g = functional.project_to_free(&node_grad);
        let s: Vec<f64> = new_x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = new_g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if mem.len() == config.memory {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        x = new_x;
        lp = new_lp;
        g = new_g;
        value = new_value;
        history.push(value.total);
        decrements.push(diff);
    }
    let gn = norm(&g);
    let t = if gn <= config.grad_tol { Termination::Converged } else { Termination::IterCap };
    finish(&functional, lp, gn, config.max_iters, t, history, decrements)
}

/// Upsamples the converged loop to `n_new` intervals and solves again.
pub fn refine(result: &SolveResult, n_new: usize, config: &SolveConfig) -> Result<SolveResult> {
    let n = result.generating.n_intervals();
    if n_new <= n || !n_new.is_multiple_of(n) {
        return Err(Error::Domain("refined grid must be a proper multiple of the current one"));
    }
    let up = result.generating.upsample(n_new / n)?;
    let mut cfg = config.clone();
    cfg.n_intervals = n_new;
    cfg.initial_guess = InitialGuess::Loop(up);
    solve(&cfg)
}

/// Adds a smooth seeded perturbation of size `amplitude`: a few sine modes
/// that vanish at both ends plus a linear blend of in-plane endpoint shifts.
pub fn perturb(lp: &GeneratingLoop, seed: u64, amplitude: f64) -> Result<GeneratingLoop> {
    if !(amplitude >= 0.0) {
        return Err(Error::Domain("perturbation amplitude must be non-negative"));
    }
    if amplitude == 0.0 {
        return Ok(lp.clone());
    }
    const MODES: usize = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeff = [[0.0; 3]; MODES];
    for (k, c) in coeff.iter_mut().enumerate() {
        for v in c.iter_mut() {
            *v = amplitude * rng.random_range(-1.0..1.0) / (k + 1) as f64;
        }
    }
    let params = *lp.params();
    let (sa, ca) = params.twist_angle().sin_cos();
    let start_shift = Vec3::new(rng.random_range(-1.0..1.0), 0.0, rng.random_range(-1.0..1.0)) * amplitude;
    let r = rng.random_range(-1.0..1.0) * amplitude;
    let end_shift = Vec3::new(r * ca, r * sa, rng.random_range(-1.0..1.0) * amplitude);
    let n = lp.n_intervals();
    let mut nodes: Vec<Vec3> = lp
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let w = i as f64 / n as f64;
            let mut q = *p + start_shift * (1.0 - w) + end_shift * w;
            for (k, c) in coeff.iter().enumerate() {
                let s = ((k + 1) as f64 * PI * w).sin();
                q += Vec3::new(c[0], c[1], c[2]) * s;
            }
            q
        })
        .collect();
    nodes[0] = Vec3::new(nodes[0].x(), 0.0, nodes[0].z());
    let rho = nodes[n].x() * ca + nodes[n].y() * sa;
    nodes[n] = Vec3::new(rho * ca, rho * sa, nodes[n].z());
    GeneratingLoop::new(params, nodes)
}

/// Runs of a multi-seed search and the index of the lowest action.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStart {
    pub runs: Vec<(u64, SolveResult)>,
    pub best: usize,
}

/// Solves once per seed; runs that fail to start are skipped.
pub fn solve_seeds(config: &SolveConfig, seeds: &[u64]) -> Result<MultiStart> {
    let mut runs = Vec::new();
    for &seed in seeds {
        let mut cfg = config.clone();
        cfg.seed = seed;
        if let Ok(r) = solve(&cfg) {
            runs.push((seed, r));
        }
    }
    if runs.is_empty() {
        return Err(Error::Domain("no seed produced an admissible initial loop"));
    }
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.action.total.total_cmp(&b.1 .1.action.total))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(MultiStart { runs, best })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, s: usize, nn: usize) -> SolveConfig {
        SolveConfig::new(SymmetryParams::new(n, s, 1.0).unwrap(), nn)
    }

    #[test]
    fn config_validation() {
        assert!(cfg(4, 1, 64).validate().is_ok());
        assert!(cfg(4, 1, 32).validate().is_err());
        let mut c = cfg(4, 1, 64);
        c.backtrack = 1.0;
        assert!(c.validate().is_err());
        let mut c = cfg(4, 1, 64);
        c.grad_tol = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn perturb_contract() {
        let c = cfg(8, 1, 64);
        let lp = c.initial_loop().unwrap();
        assert_eq!(perturb(&lp, 3, 0.0).unwrap(), lp);
        let a = perturb(&lp, 3, 0.05).unwrap();
        let b = perturb(&lp, 3, 0.05).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, perturb(&lp, 4, 0.05).unwrap());
        assert!(GeneratingLoop::new(*lp.params(), a.nodes().to_vec()).is_ok());
        assert!(perturb(&lp, 3, -1.0).is_err());
    }

    #[test]
    fn outside_cone_rejected() {
        let c = cfg(4, 1, 64);
        let lp = c.initial_loop().unwrap();
        let mut nodes = lp.nodes().to_vec();
        nodes[0] = Vec3::new(nodes[0].x(), 0.0, 0.3);
        let mut bad = c.clone();
        bad.initial_guess = InitialGuess::Loop(GeneratingLoop::new(*lp.params(), nodes).unwrap());
        assert!(matches!(solve(&bad), Err(Error::OutsideCone { .. })));
    }

    #[test]
    fn short_solve_descends() {
        let mut c = cfg(6, 1, 64);
        c.max_iters = 200;
        let r = solve(&c).unwrap();
        assert!(r.history.last().unwrap() < &r.history[0]);
        assert!(r.decrements.iter().all(|&d| d <= 0.0));
    }
}
