//! The discrete reduced action of a generating loop and its exact gradient.
//!
//! Over one period the Lagrangian action of the symmetric orbit is
//! `(n/2) ∫₀ᵀ (|u̇₀|² + V(u₀)) dt` with `V(u) = Σ_{j=1}^{n−1} |(R_j − I)u|⁻¹`.
//! The integrand is invariant under the symmetry, so the action equals `2h`
//! times the integral over the fundamental domain. On the node grid
//! `u_0 … u_N` with step `Δ` this module uses
//!
//! ```text
//! A = 2h · (n/2) · [ Σ_{i<N} |u_{i+1} − u_i|² / Δ  +  Δ Σ_i w_i V(u_i) ]
//! ```
//!
//! with trapezoid weights `w_0 = w_N = ½`, `w_i = 1` otherwise. Its
//! stationary points satisfy the Störmer–Verlet recursion
//! `(u_{i+1} − 2u_i + u_{i−1})/Δ² = F(u_i)` with `F = ½∇V` the force on body 0.
//!
//! [`Scheme::Corrected`] replaces `V` by `V + (Δ²/48)|∇V|²`. The stationary
//! nodes `y_i` of that functional, mapped through
//! `x_i = y_i + (Δ²/12) F(y_i)` (see [`ActionFunctional::postprocess`]),
//! approximate a true solution to fourth order instead of second.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{Mat3, Vec3};
use crate::loops::{distance_to_axes, GeneratingLoop};
use crate::symmetry::{group_matrices, SymmetryParams};
use crate::{Error, Result};

/// Nodes closer than this (relative to the loop scale) to a collision axis
/// are rejected.
pub const SINGULAR_REL_TOL: f64 = 1e-10;

/// Human-readable name of the quadrature.
pub const QUADRATURE_RULE: &str = "edge-difference kinetic, trapezoid potential";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Edge-difference kinetic term and trapezoid potential term.
    #[default]
    Trapezoid,
    /// Trapezoid scheme with the `(Δ²/48)|∇V|²` potential correction.
    Corrected,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Trapezoid => "trapezoid",
            Scheme::Corrected => "corrected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionValue {
    pub total: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub n_intervals: usize,
}

/// Precomputed `D_j = R_j − I` and `G_j = D_jᵀ D_j` for `j = 1 … n−1`.
#[derive(Debug, Clone)]
pub struct ActionFunctional {
    params: SymmetryParams,
    scheme: Scheme,
    diffs: Vec<(Mat3, Mat3)>,
}

impl ActionFunctional {
    pub fn new(params: SymmetryParams) -> Self {
        Self::with_scheme(params, Scheme::Trapezoid)
    }

    pub fn with_scheme(params: SymmetryParams, scheme: Scheme) -> Self {
        let diffs = group_matrices(params.l())
            .into_iter()
            .skip(1)
            .map(|r| {
                let d = r.sub(&Mat3::IDENTITY);
                (d, d.transpose() * d)
            })
            .collect();
        ActionFunctional { params, scheme, diffs }
    }

    pub fn params(&self) -> &SymmetryParams {
        &self.params
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// `V(u) = Σ_j |D_j u|⁻¹`.
    pub fn pair_potential(&self, u: &Vec3) -> f64 {
        self.diffs.iter().map(|(d, _)| 1.0 / d.apply(u).norm()).sum()
    }

    /// `V(u)` and `∇V(u) = −Σ_j G_j u / |D_j u|³`.
    pub fn pair_potential_gradient(&self, u: &Vec3) -> (f64, Vec3) {
        let mut v = 0.0;
        let mut g = Vec3::ZERO;
        for (d, gm) in &self.diffs {
            let r2 = d.apply(u).norm_squared();
            let inv = 1.0 / r2.sqrt();
            v += inv;
            g -= gm.apply(u) * (inv * inv * inv);
        }
        (v, g)
    }

    /// Hessian of `V` at `u` applied to `w`.
    pub fn pair_potential_hessian_apply(&self, u: &Vec3, w: &Vec3) -> Vec3 {
        let mut out = Vec3::ZERO;
        for (d, gm) in &self.diffs {
            let r2 = d.apply(u).norm_squared();
            let inv = 1.0 / r2.sqrt();
            let inv3 = inv * inv * inv;
            let gu = gm.apply(u);
            out -= gm.apply(w) * inv3;
            out += gu * (3.0 * gu.dot(w) * inv3 * inv * inv);
        }
        out
    }

    /// Force `F = ½∇V` on body 0.
    pub fn force(&self, u: &Vec3) -> Vec3 {
        self.pair_potential_gradient(u).1 * 0.5
    }

    fn correction_weight(&self, dt: f64) -> f64 {
        match self.scheme {
            Scheme::Trapezoid => 0.0,
            Scheme::Corrected => dt * dt / 48.0,
        }
    }

    /// Potential term of the scheme at one node and its gradient.
    fn node_term(&self, u: &Vec3, k: f64) -> (f64, Vec3) {
        let (v, g) = self.pair_potential_gradient(u);
        if k == 0.0 {
            return (v, g);
        }
        let hg = self.pair_potential_hessian_apply(u, &g);
        (v + k * g.norm_squared(), g + hg * (2.0 * k))
    }

    fn check_nodes(&self, nodes: &[Vec3]) -> Result<()> {
        if nodes.len() < 2 {
            return Err(Error::Domain("a loop needs at least two nodes"));
        }
        let scale = nodes.iter().map(Vec3::norm).fold(0.0, f64::max);
        let tol = SINGULAR_REL_TOL * scale;
        for (i, p) in nodes.iter().enumerate() {
            let (d, _) = distance_to_axes(p, self.params.l());
            if !(d > tol) {
                return Err(Error::OnCollisionAxis { index: i, distance: d });
            }
        }
        Ok(())
    }

    fn prefactor(&self) -> f64 {
        2.0 * self.params.h() as f64 * self.params.n() as f64 / 2.0
    }

    fn dt(&self, nodes: &[Vec3]) -> f64 {
        self.params.fundamental_length() / (nodes.len() - 1) as f64
    }

    /// Action of an arbitrary node sequence on `[0, T/2h]` (plane
    /// constraints are not checked).
    pub fn value(&self, nodes: &[Vec3]) -> Result<ActionValue> {
        self.check_nodes(nodes)?;
        let dt = self.dt(nodes);
        let k = self.correction_weight(dt);
        let last = nodes.len() - 1;
        let kin: f64 = nodes.windows(2).map(|w| (w[1] - w[0]).norm_squared()).sum::<f64>() / dt;
        let mut pot = 0.0;
        for (i, p) in nodes.iter().enumerate() {
            let w = if i == 0 || i == last { 0.5 } else { 1.0 };
            let v = if k == 0.0 {
                self.pair_potential(p)
            } else {
                let (v, g) = self.pair_potential_gradient(p);
                v + k * g.norm_squared()
            };
            pot += w * v;
        }
        pot *= dt;
        let c = self.prefactor();
        Ok(ActionValue { total: c * (kin + pot), kinetic: c * kin, potential: c * pot, n_intervals: last })
    }

    /// Action together with its gradient with respect to every node.
    pub fn value_and_gradient(&self, nodes: &[Vec3]) -> Result<(ActionValue, Vec<Vec3>)> {
        self.check_nodes(nodes)?;
        let dt = self.dt(nodes);
        let k = self.correction_weight(dt);
        let last = nodes.len() - 1;
        let c = self.prefactor();
        let mut grad = alloc::vec![Vec3::ZERO; nodes.len()];
        let mut kin = 0.0;
        for i in 0..last {
            let e = nodes[i + 1] - nodes[i];
            kin += e.norm_squared();
            let ge = e * (2.0 * c / dt);
            grad[i + 1] += ge;
            grad[i] -= ge;
        }
        kin /= dt;
        let mut pot = 0.0;
        for (i, p) in nodes.iter().enumerate() {
            let w = if i == 0 || i == last { 0.5 } else { 1.0 };
            let (v, g) = self.node_term(p, k);
            pot += w * v;
            grad[i] += g * (c * w * dt);
        }
        pot *= dt;
        Ok((ActionValue { total: c * (kin + pot), kinetic: c * kin, potential: c * pot, n_intervals: last }, grad))
    }

    /// `A(u + αδ) − A(u)` evaluated term by term so that the difference keeps
    /// full relative accuracy even when it is far below the rounding error
    /// of `A` itself. Fails if `u + αδ` is singular.
    pub fn difference(&self, nodes: &[Vec3], dir: &[Vec3], alpha: f64) -> Result<f64> {
        if dir.len() != nodes.len() {
            return Err(Error::Domain("direction and nodes differ in length"));
        }
        let moved: Vec<Vec3> = nodes.iter().zip(dir).map(|(u, d)| *u + *d * alpha).collect();
        self.check_nodes(&moved)?;
        let dt = self.dt(nodes);
        let k = self.correction_weight(dt);
        let last = nodes.len() - 1;
        let mut kin = 0.0;
        for i in 0..last {
            let e = nodes[i + 1] - nodes[i];
            let de = dir[i + 1] - dir[i];
            kin += alpha * (2.0 * e.dot(&de) + alpha * de.norm_squared());
        }
        kin /= dt;
        let mut pot = 0.0;
        for i in 0..=last {
            let w = if i == 0 || i == last { 0.5 } else { 1.0 };
            let mut acc = 0.0;
            for (d, _) in &self.diffs {
                let a = d.apply(&nodes[i]);
                let b = d.apply(&dir[i]);
                let na = a.norm();
                let nb = (a + b * alpha).norm();
                let q = alpha * (2.0 * a.dot(&b) + alpha * b.norm_squared());
                acc -= q / ((na + nb) * na * nb);
            }
            if k != 0.0 {
                let g0 = self.pair_potential_gradient(&nodes[i]).1;
                let g1 = self.pair_potential_gradient(&moved[i]).1;
                acc += k * (g1 - g0).dot(&(g1 + g0));
            }
            pot += w * acc;
        }
        pot *= dt;
        Ok(self.prefactor() * (kin + pot))
    }

    /// Chain rule from node gradients to the loop's free coordinates.
    pub fn project_to_free(&self, node_grad: &[Vec3]) -> Vec<f64> {
        let last = node_grad.len() - 1;
        let (s, c) = self.params.twist_angle().sin_cos();
        let d = Vec3::new(c, s, 0.0);
        let mut out = Vec::with_capacity(3 * (last - 1) + 4);
        out.push(node_grad[0].x());
        out.push(node_grad[0].z());
        for g in &node_grad[1..last] {
            out.extend_from_slice(&g.0);
        }
        out.push(node_grad[last].dot(&d));
        out.push(node_grad[last].z());
        out
    }

    /// Maps stationary nodes of the corrected scheme to fourth-order
    /// accurate samples `y + (Δ²/12) F(y)`. The trapezoid scheme returns the
    /// loop unchanged. Endpoints stay in their planes because `F` is
    /// equivariant under the plane reflections.
    pub fn postprocess(&self, lp: &GeneratingLoop) -> Result<GeneratingLoop> {
        if self.scheme == Scheme::Trapezoid {
            return Ok(lp.clone());
        }
        let dt = lp.dt();
        let c = dt * dt / 12.0;
        let nodes: Vec<Vec3> = lp.nodes().iter().map(|y| *y + self.force(y) * c).collect();
        GeneratingLoop::from_free(*lp.params(), lp.n_intervals(), &self.project_to_free(&nodes))
    }
}

pub fn reduced_action(lp: &GeneratingLoop) -> Result<ActionValue> {
    ActionFunctional::new(*lp.params()).value(lp.nodes())
}

/// Exact gradient of [`reduced_action`] with respect to the free coordinates
/// of [`GeneratingLoop::free_coordinates`].
pub fn action_gradient(lp: &GeneratingLoop) -> Result<Vec<f64>> {
    let f = ActionFunctional::new(*lp.params());
    let (_, g) = f.value_and_gradient(lp.nodes())?;
    Ok(f.project_to_free(&g))
}

/// Gradient with respect to the raw node positions.
pub fn action_node_gradient(lp: &GeneratingLoop) -> Result<Vec<Vec3>> {
    Ok(ActionFunctional::new(*lp.params()).value_and_gradient(lp.nodes())?.1)
}
