//! Level estimates used to rule out total collisions of minimizers.
//!
//! Any loop in the closed cone that has a total collision has action at
//! least [`total_collision_lower_bound`]. Two explicit collision-free loops
//! (two quarter circles for `s = 1`, a constant-speed spherical loop
//! otherwise) come with closed-form action bounds. Whenever the constructed
//! loop's action is below the floor, a minimizer cannot collide totally.
//!
//! Every bound scales as `T^{1/3}`.

use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)]
use num_traits::Float;

use crate::action::{reduced_action, ActionValue};
use crate::linalg::Vec3;
use crate::loops::GeneratingLoop;
use crate::symmetry::SymmetryParams;
use crate::{Error, Result, EULER_GAMMA};

/// Lower bound on the Kepler action `∫ ½|ẋ|² + a/|x|` of any path that
/// collides at `t1` and `t2`: `(3/2)(2π)^{2/3} a^{2/3} (t2 − t1)^{1/3}`.
pub fn gordon_bound(a: f64, t1: f64, t2: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain("attraction strength must be positive"));
    }
    if !(t2 > t1) {
        return Err(Error::Domain("time interval must have positive length"));
    }
    Ok(1.5 * (2.0 * PI).powf(2.0 / 3.0) * a.powf(2.0 / 3.0) * (t2 - t1).cbrt())
}

/// `B = (3(n−1)/4)(2h)^{2/3} π^{2/3} n^{2/3} T^{1/3}`.
pub fn total_collision_lower_bound(params: &SymmetryParams) -> f64 {
    let n = params.n() as f64;
    let h = params.h() as f64;
    0.75 * (n - 1.0) * (2.0 * h * PI * n).powf(2.0 / 3.0) * params.period().cbrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestLoopKind {
    /// Two quarter circles, `s = 1`.
    S1Circles,
    /// Constant-speed loop on a sphere.
    Spherical,
    /// Spherical loop with the sharper eight-body constants (`n = 8`, `s = 2`).
    SphericalEight,
}

impl TestLoopKind {
    pub fn name(&self) -> &'static str {
        match self {
            TestLoopKind::S1Circles => "s1_circles",
            TestLoopKind::Spherical => "spherical",
            TestLoopKind::SphericalEight => "spherical_n8",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestLoop {
    pub kind: TestLoopKind,
    pub generating: GeneratingLoop,
    /// Closed-form upper bound on the action.
    pub a_bound: f64,
    /// Characteristic length: `r` for the circles, the sphere radius otherwise.
    pub radius: f64,
}

/// Two quarter circles of radius `ρ = r tan(π/n)`, traversed at constant
/// speed. `C₁` lies in the plane `ξ₁ = r` and starts at its lowest point;
/// `C₂` ends at its highest point in `P₁`. They meet on `ξ₃ = 0` at `T/4h`.
pub fn test_loop_s1(params: &SymmetryParams, n_intervals: usize) -> Result<TestLoop> {
    if params.s() != 1 {
        return Err(Error::Domain("the quarter-circle loop needs s = 1"));
    }
    let n = params.n() as f64;
    let h = params.h() as f64;
    let period = params.period();
    let beta = PI / n;
    let r = (n - 1.0).cbrt() * period.powf(2.0 / 3.0) / ((16.0 * h * h).cbrt() * beta.tan() * PI.powf(2.0 / 3.0));
    let rho = r * beta.tan();
    let quarter = period / (4.0 * h);
    let (s2, c2) = (2.0 * beta).sin_cos();
    let generating = GeneratingLoop::from_fn(*params, n_intervals, |t| {
        if t <= quarter {
            let al = FRAC_PI_2 * t / quarter;
            Vec3::new(r, rho * al.sin(), -rho * al.cos())
        } else {
            let g = FRAC_PI_2 * (t - quarter) / quarter;
            let (sg, cg) = g.sin_cos();
            Vec3::new(r * c2 + rho * cg * s2, r * s2 - rho * cg * c2, rho * sg)
        }
    })?;
    let a_bound = 0.75 * (2.0 * h * h).cbrt() * n * (n - 1.0).powf(2.0 / 3.0) * PI.powf(2.0 / 3.0) * period.cbrt();
    Ok(TestLoop { kind: TestLoopKind::S1Circles, generating, a_bound, radius: r })
}

/// Latitude/longitude schedule of the spherical loop at time `t ∈ [0, T/2h]`.
pub fn spherical_schedule(params: &SymmetryParams, t: f64) -> (f64, f64) {
    let n = params.n() as f64;
    let s1 = params.s() as f64 + 1.0;
    let h = params.h() as f64;
    let l = params.l() as f64;
    let period = params.period();
    let omega = 2.0 * h * s1 * PI / (l * period);
    let t1 = period / (4.0 * h * s1);
    if t <= t1 {
        (-PI / n, omega * t)
    } else if t <= 3.0 * t1 {
        (omega * t - 2.0 * PI / n, PI / n)
    } else {
        (PI / n, omega * t - 2.0 * PI / n)
    }
}

fn spherical_on_radius(params: &SymmetryParams, n_intervals: usize, a: f64) -> Result<GeneratingLoop> {
    GeneratingLoop::from_fn(*params, n_intervals, |t| {
        let (phi, theta) = spherical_schedule(params, t);
        let (sp, cp) = phi.sin_cos();
        let (st, ct) = theta.sin_cos();
        Vec3::new(a * cp * ct, a * cp * st, a * sp)
    })
}

/// Constant-speed spherical loop on the sphere of the optimal radius.
pub fn test_loop_spherical(params: &SymmetryParams, n_intervals: usize) -> Result<TestLoop> {
    if params.n() < 8 {
        return Err(Error::Domain("the spherical loop needs n >= 8"));
    }
    let n = params.n() as f64;
    let l = params.l() as f64;
    let h = params.h() as f64;
    let s1 = params.s() as f64 + 1.0;
    let period = params.period();
    let lg = n.ln() + EULER_GAMMA;
    let a = n.cbrt() * period.powf(2.0 / 3.0) * lg.cbrt() / (2.0 * PI * s1.powf(2.0 / 3.0)) * (l / h).powf(2.0 / 3.0);
    let generating = spherical_on_radius(params, n_intervals, a)?;
    let a_bound =
        1.5 * (h / l).powf(2.0 / 3.0) * n.powf(5.0 / 3.0) * lg.powf(2.0 / 3.0) * s1.powf(2.0 / 3.0) * period.cbrt();
    Ok(TestLoop { kind: TestLoopKind::Spherical, generating, a_bound, radius: a })
}

/// The spherical loop for `n = 8`, `s = 2` with `a = 3^{−1/3}π^{−2/3}T^{2/3}`
/// and bound `36·3^{1/3}π^{2/3}T^{1/3}`.
pub fn test_loop_spherical_eight(params: &SymmetryParams, n_intervals: usize) -> Result<TestLoop> {
    if params.n() != 8 || params.s() != 2 {
        return Err(Error::Domain("the eight-body loop needs n = 8 and s = 2"));
    }
    let period = params.period();
    let a = 3f64.powf(-1.0 / 3.0) * PI.powf(-2.0 / 3.0) * period.powf(2.0 / 3.0);
    let generating = spherical_on_radius(params, n_intervals, a)?;
    let a_bound = 36.0 * 3f64.cbrt() * PI.powf(2.0 / 3.0) * period.cbrt();
    Ok(TestLoop { kind: TestLoopKind::SphericalEight, generating, a_bound, radius: a })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub params: SymmetryParams,
    pub n_intervals: usize,
    pub kind: TestLoopKind,
    pub b: f64,
    pub a_bound: f64,
    pub a_numeric: f64,
    /// `a_bound / b`.
    pub ratio_bound: f64,
    /// `a_numeric / b`.
    pub ratio: f64,
    /// `b − a_numeric`.
    pub margin: f64,
    /// `a_numeric < b`, strict.
    pub verdict: bool,
    pub action: ActionValue,
}

fn report_from(params: &SymmetryParams, tl: TestLoop) -> Result<EstimateReport> {
    let b = total_collision_lower_bound(params);
    let action = reduced_action(&tl.generating)?;
    let a_numeric = action.total;
    Ok(EstimateReport {
        params: *params,
        n_intervals: tl.generating.n_intervals(),
        kind: tl.kind,
        b,
        a_bound: tl.a_bound,
        a_numeric,
        ratio_bound: tl.a_bound / b,
        ratio: a_numeric / b,
        margin: b - a_numeric,
        verdict: a_numeric < b,
        action,
    })
}

/// The test loop [`exclusion_report`] would use.
pub fn default_test_loop(params: &SymmetryParams, n_intervals: usize) -> Result<TestLoop> {
    if params.s() == 1 {
        test_loop_s1(params, n_intervals)
    } else {
        test_loop_spherical(params, n_intervals)
    }
}

/// Quarter circles for `s = 1`, the spherical loop otherwise.
pub fn exclusion_report(params: &SymmetryParams, n_intervals: usize) -> Result<EstimateReport> {
    report_from(params, default_test_loop(params, n_intervals)?)
}

/// Report for `n = 8`, `s = 2` using the eight-body loop.
pub fn exclusion_report_eight(params: &SymmetryParams, n_intervals: usize) -> Result<EstimateReport> {
    report_from(params, test_loop_spherical_eight(params, n_intervals)?)
}
