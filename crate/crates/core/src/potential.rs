//! The potential of two twisted regular `l`-gons on a sphere of radius `a`.
//!
//! The generating particle sits at `a(cos φ cos θ, cos φ sin θ, sin φ)` and the
//! other `n − 1 = 2l − 1` bodies are its images under `D_l`. The polygon at
//! latitude `φ` is rotated by `2θ` against its mirror at `−φ`. Three
//! equivalent closed forms are provided along with the bounds used by the
//! level estimates.
//!
//! With `r = (1 − sin|φ|)/(1 + sin|φ|)` and `ξ = e^{−2iθ}`:
//!
//! ```text
//! U = n/(4a cos φ) · { 2C_l + Σ_{j=1}^{l} [sin²(jπ/l − θ) + tan²φ]^{−1/2} }
//!   = n(1+r)/(4a√r) · { C_l + √r Σ_{j=1}^{l} |1 − r ξ ξ_l^j|^{−1} }
//! ```
//!
//! where `C_l = ½ Σ_{j=1}^{l−1} csc(jπ/l)`.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::Vec3;
use crate::quadrature::integrate_adaptive;
use crate::special::bernoulli_f64;
use crate::symmetry::group_matrices;
use crate::{Error, Result, EULER_GAMMA};

/// Denominators below this (in units of `a`) are reported as collisions.
pub const SINGULAR_TOL: f64 = 1e-13;

/// Default starting size of the Gauss–Legendre rule for the integral form.
pub const DEFAULT_QUAD_POINTS: usize = 128;
/// Largest rule the integral form will try.
pub const MAX_QUAD_POINTS: usize = 1024;
/// Agreement required between successive rule sizes.
pub const QUAD_TOL: f64 = 1e-12;

/// Spherical coordinates of the generating particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialPoint {
    pub a: f64,
    pub phi: f64,
    pub theta: f64,
}

impl PotentialPoint {
    pub fn new(a: f64, phi: f64, theta: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain("sphere radius must be positive"));
        }
        if !(phi.abs() < FRAC_PI_2) {
            return Err(Error::Domain("latitude must lie strictly between the poles"));
        }
        Ok(PotentialPoint { a, phi, theta })
    }

    /// Spherical coordinates of a position; fails on the vertical axis.
    pub fn from_position(p: &Vec3) -> Result<Self> {
        let a = p.norm();
        let rho = (p.x() * p.x() + p.y() * p.y()).sqrt();
        if rho == 0.0 {
            return Err(Error::Domain("position lies on the vertical axis"));
        }
        Self::new(a, p.z().atan2(rho), p.y().atan2(p.x()))
    }

    pub fn position(&self) -> Vec3 {
        let (sp, cp) = self.phi.sin_cos();
        let (st, ct) = self.theta.sin_cos();
        Vec3::new(self.a * cp * ct, self.a * cp * st, self.a * sp)
    }

    /// `r = (1 − sin|φ|)/(1 + sin|φ|)`, in `(0, 1]`.
    pub fn r(&self) -> f64 {
        let s = self.phi.abs().sin();
        (1.0 - s) / (1.0 + s)
    }

    /// `ξ = e^{−2iθ}` as `(re, im)`.
    pub fn xi(&self) -> (f64, f64) {
        let (s, c) = (2.0 * self.theta).sin_cos();
        (c, -s)
    }

    /// All `2l` bodies `R_j u₀`.
    pub fn bodies(&self, l: usize) -> Vec<Vec3> {
        let u0 = self.position();
        group_matrices(l).iter().map(|m| m.apply(&u0)).collect()
    }
}

/// `C_m = ½ Σ_{j=1}^{m−1} csc(jπ/m)`.
pub fn harmonic_csc_sum(m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::Domain("harmonic cosecant sum needs m >= 2"));
    }
    let mf = m as f64;
    // pair j with m − j to halve the work and sum small terms first
    let mut total = 0.0;
    for j in (1..=m / 2).rev() {
        let c = 1.0 / (j as f64 * PI / mf).sin();
        total += if 2 * j == m { c } else { 2.0 * c };
    }
    Ok(0.5 * total)
}

/// `C_m` against its logarithmic upper bound `(m/π)(log m + γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CscBound {
    pub value: f64,
    pub bound: f64,
    /// `bound − value`; positive when the bound holds.
    pub margin: f64,
}

impl CscBound {
    pub fn holds(&self) -> bool {
        self.margin > 0.0
    }
}

pub fn csc_bound_holds(m: usize) -> Result<CscBound> {
    let value = harmonic_csc_sum(m)?;
    let mf = m as f64;
    let bound = mf / PI * (mf.ln() + EULER_GAMMA);
    Ok(CscBound { value, bound, margin: bound - value })
}

/// Large-`m` expansion of `C_m` with `K ≤ 6` correction terms.
pub fn csc_sum_asymptotic(m: usize, terms: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::Domain("asymptotic expansion needs m >= 2"));
    }
    if terms > 6 {
        return Err(Error::Domain("at most six correction terms are supported"));
    }
    let mf = m as f64;
    let mut sum = mf / PI * (EULER_GAMMA + (2.0 * mf / PI).ln());
    let mut fact = 1.0;
    for k in 1..=terms {
        let two_k = 2 * k;
        fact *= ((two_k - 1) * two_k) as f64;
        let b = bernoulli_f64(two_k)?;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let coeff = (2f64.powi(two_k as i32 - 1) - 1.0) * b * b * PI.powi(two_k as i32 - 1) / (two_k as f64 * fact);
        sum += 2.0 * sign * coeff * mf.powi(1 - two_k as i32);
    }
    Ok(sum)
}

fn check_l(l: usize) -> Result<()> {
    if l < 2 {
        return Err(Error::Domain("polygon order l must be at least 2"));
    }
    Ok(())
}

/// Direct trigonometric form.
pub fn evaluate_direct(p: &PotentialPoint, l: usize) -> Result<f64> {
    check_l(l)?;
    let lf = l as f64;
    let n = 2.0 * lf;
    let t2 = p.phi.tan().powi(2);
    let mut sum = 0.0;
    for j in 1..=l {
        let s = (j as f64 * PI / lf - p.theta).sin();
        let d = (s * s + t2).sqrt();
        if d < SINGULAR_TOL {
            return Err(Error::Singular { term: j });
        }
        sum += 1.0 / d;
    }
    Ok(n / (4.0 * p.a * p.phi.cos()) * (2.0 * harmonic_csc_sum(l)? + sum))
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Domain("r must lie in (0, 1]"));
    }
    Ok(())
}

/// Complex-ratio form in `(r, θ)`.
pub fn evaluate_r_form(a: f64, r: f64, theta: f64, l: usize) -> Result<f64> {
    check_l(l)?;
    check_r(r)?;
    let lf = l as f64;
    let n = 2.0 * lf;
    let sr = r.sqrt();
    let mut sum = 0.0;
    for j in 1..=l {
        let psi = 2.0 * PI * j as f64 / lf - 2.0 * theta;
        let d2 = 1.0 - 2.0 * r * psi.cos() + r * r;
        let d = d2.max(0.0).sqrt();
        if d < SINGULAR_TOL {
            return Err(Error::Singular { term: j });
        }
        sum += 1.0 / d;
    }
    Ok(n * (1.0 + r) / (4.0 * a * sr) * (harmonic_csc_sum(l)? + sr * sum))
}

/// Integrand of the integral representation after `t = sin²ψ`, on `[0, π/2]`.
fn integral_kernel(r: f64, theta: f64, l: usize, psi: f64) -> f64 {
    let t = psi.sin().powi(2);
    let q = (t * r).powi(l as i32);
    let den = 1.0 + q * q - 2.0 * q * (2.0 * l as f64 * theta).cos();
    2.0 * (1.0 - q * q) / (den * (1.0 - t * r * r).sqrt())
}

/// θ-derivative of [`integral_kernel`]; strictly negative for
/// `θ ∈ (0, π/2l)` whenever `(tr)^l` does not underflow.
fn integral_kernel_dtheta(r: f64, theta: f64, l: usize, psi: f64) -> f64 {
    let t = psi.sin().powi(2);
    let lf = l as f64;
    let q = (t * r).powi(l as i32);
    let den = 1.0 + q * q - 2.0 * q * (2.0 * lf * theta).cos();
    -2.0 * (1.0 - q * q) * 4.0 * lf * q * (2.0 * lf * theta).sin() / (den * den * (1.0 - t * r * r).sqrt())
}

/// Series-derived integral representation, valid for `0 < r < 1`.
/// The rule starts at `quad_points` nodes and doubles up to
/// [`MAX_QUAD_POINTS`].
pub fn evaluate_integral_form(a: f64, r: f64, theta: f64, l: usize, quad_points: usize) -> Result<f64> {
    check_l(l)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain("integral representation requires 0 < r < 1"));
    }
    let lf = l as f64;
    let n = 2.0 * lf;
    let sr = r.sqrt();
    let integral = integrate_adaptive(0.0, FRAC_PI_2, quad_points, MAX_QUAD_POINTS.max(quad_points), QUAD_TOL, |psi| {
        integral_kernel(r, theta, l, psi)
    });
    let bracket = harmonic_csc_sum(l)? + lf * sr / PI * integral.value;
    Ok(n * (1.0 + r) / (4.0 * a * sr) * bracket)
}

/// `∂U/∂θ` from the integral representation (`0 < r < 1`).
pub fn dtheta_integral_form(a: f64, r: f64, theta: f64, l: usize) -> Result<f64> {
    check_l(l)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain("integral representation requires 0 < r < 1"));
    }
    let lf = l as f64;
    let n = 2.0 * lf;
    let sr = r.sqrt();
    let integral = integrate_adaptive(0.0, FRAC_PI_2, DEFAULT_QUAD_POINTS, MAX_QUAD_POINTS, QUAD_TOL, |psi| {
        integral_kernel_dtheta(r, theta, l, psi)
    });
    Ok(n * (1.0 + r) / (4.0 * a * sr) * lf * sr / PI * integral.value)
}

/// Largest `∂U/∂θ` over a grid of interior points of `(0, π/2l)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaWitness {
    pub max_derivative: f64,
    pub at_theta: f64,
}

/// Scans `grid` interior points of `(0, π/2l)` for the largest `∂U/∂θ`.
///
/// The derivative comes from the integral representation, where every
/// contribution has the same sign. Differencing the direct form cannot
/// resolve it near the poles: the θ-dependence there is of order `r^l`,
/// far below the rounding error of the sum.
pub fn theta_monotone_witness(a: f64, phi: f64, l: usize, grid: usize) -> Result<ThetaWitness> {
    if !(phi > 0.0 && phi < FRAC_PI_2) {
        return Err(Error::Domain("latitude must lie in (0, pi/2)"));
    }
    if grid == 0 {
        return Err(Error::Domain("grid must contain at least one point"));
    }
    let p = PotentialPoint::new(a, phi, 0.0)?;
    let r = p.r();
    let h = PI / (2.0 * l as f64) / (grid + 1) as f64;
    let mut best = ThetaWitness { max_derivative: f64::NEG_INFINITY, at_theta: 0.0 };
    for i in 1..=grid {
        let theta = i as f64 * h;
        let d = dtheta_integral_form(a, r, theta, l)?;
        if d > best.max_derivative {
            best = ThetaWitness { max_derivative: d, at_theta: theta };
        }
    }
    Ok(best)
}

/// `f_θ(φ) = C_l − ½ Σ_{j=1}^{l} cos²(jπ/l − θ) / (sin²(jπ/l − θ) + tan²φ)^{3/2}`,
/// which has the sign of `∂U/∂φ` for `φ ∈ (0, π/2)`.
pub fn phi_sign_function(theta: f64, phi: f64, l: usize) -> Result<f64> {
    check_l(l)?;
    if !(phi > 0.0 && phi < FRAC_PI_2) {
        return Err(Error::Domain("latitude must lie in (0, pi/2)"));
    }
    let lf = l as f64;
    let t2 = phi.tan().powi(2);
    let mut sum = 0.0;
    for j in 1..=l {
        let (s, c) = (j as f64 * PI / lf - theta).sin_cos();
        sum += c * c / (s * s + t2).powf(1.5);
    }
    Ok(harmonic_csc_sum(l)? - 0.5 * sum)
}

/// `U(φ = π/n, θ = 0)` at `a = 1` against `n²/(2π)(log n + γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarBound {
    pub potential: f64,
    pub bound: f64,
    pub margin: f64,
}

pub fn polar_bound_check(n: usize) -> Result<PolarBound> {
    if n < 8 || !n.is_multiple_of(2) {
        return Err(Error::Domain("polar bound needs even n >= 8"));
    }
    let nf = n as f64;
    let potential = evaluate_direct(&PotentialPoint::new(1.0, PI / nf, 0.0)?, n / 2)?;
    let bound = nf * nf / (2.0 * PI) * (nf.ln() + EULER_GAMMA);
    Ok(PolarBound { potential, bound, margin: bound - potential })
}

/// `Σ_{i<j} 1/|x_i − x_j|`.
pub fn pairwise_potential(bodies: &[Vec3]) -> f64 {
    let mut u = 0.0;
    for i in 0..bodies.len() {
        for j in i + 1..bodies.len() {
            u += 1.0 / bodies[i].distance(&bodies[j]);
        }
    }
    u
}
