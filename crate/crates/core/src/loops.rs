//! The generating particle `u₀` sampled on the fundamental domain
//! `[0, T/2h]`, its extension to a full period, and reconstruction of all
//! `n` bodies through `u_j(t) = R_j u₀(t)`.
//!
//! Node `0` lives in the plane `P_0` and node `N` in `P_s`. The optimizer
//! works on *free coordinates*: two in-plane coordinates for each endpoint
//! and three for every interior node, laid out as
//! `[ρ₀, z₀, x₁, y₁, z₁, …, x_{N-1}, y_{N-1}, z_{N-1}, ρ_N, z_N]`.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::Vec3;
use crate::symmetry::{
    choreography_classes, group_matrices, reflection, rotation, ChoreographyPartition, SymmetryParams,
};
use crate::{Error, Result};

/// Endpoint plane tolerance, relative to `max(1, |node|)`.
pub const PLANE_TOL: f64 = 1e-12;

/// Relative tolerance under which an endpoint height counts as zero.
pub const CONE_BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingLoop {
    params: SymmetryParams,
    nodes: Vec<Vec3>,
}

/// Unit vector spanning the horizontal direction of the plane `P_s`.
fn plane_direction(params: &SymmetryParams) -> Vec3 {
    let (s, c) = params.twist_angle().sin_cos();
    Vec3::new(c, s, 0.0)
}

fn offset_from_plane(p: &Vec3, angle: f64) -> f64 {
    let (s, c) = angle.sin_cos();
    -p.x() * s + p.y() * c
}

impl GeneratingLoop {
    /// Wraps `N + 1` nodes, checking the endpoint plane constraints.
    pub fn new(params: SymmetryParams, nodes: Vec<Vec3>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::Domain("a generating loop needs at least two intervals"));
        }
        let last = nodes.len() - 1;
        let first_off = nodes[0].y();
        if first_off.abs() > PLANE_TOL * nodes[0].norm().max(1.0) {
            return Err(Error::OffPlane { index: 0, offset: first_off });
        }
        let last_off = offset_from_plane(&nodes[last], params.twist_angle());
        if last_off.abs() > PLANE_TOL * nodes[last].norm().max(1.0) {
            return Err(Error::OffPlane { index: last, offset: last_off });
        }
        Ok(GeneratingLoop { params, nodes })
    }

    /// Samples `f` at the `N + 1` uniform times of `[0, T/2h]` and projects
    /// the endpoints orthogonally onto their planes.
    pub fn from_fn(params: SymmetryParams, n_intervals: usize, f: impl Fn(f64) -> Vec3) -> Result<Self> {
        if n_intervals < 2 {
            return Err(Error::Domain("a generating loop needs at least two intervals"));
        }
        let dt = params.fundamental_length() / n_intervals as f64;
        let mut nodes: Vec<Vec3> = (0..=n_intervals).map(|i| f(i as f64 * dt)).collect();
        nodes[0] = project_p0(&nodes[0]);
        nodes[n_intervals] = project_ps(&params, &nodes[n_intervals]);
        Self::new(params, nodes)
    }

    /// Inverse of [`GeneratingLoop::free_coordinates`].
    pub fn from_free(params: SymmetryParams, n_intervals: usize, free: &[f64]) -> Result<Self> {
        if n_intervals < 2 {
            return Err(Error::Domain("a generating loop needs at least two intervals"));
        }
        if free.len() != free_len(n_intervals) {
            return Err(Error::Domain("free coordinate vector has the wrong length"));
        }
        let mut nodes = Vec::with_capacity(n_intervals + 1);
        nodes.push(Vec3::new(free[0], 0.0, free[1]));
        for i in 1..n_intervals {
            let o = 2 + 3 * (i - 1);
            nodes.push(Vec3::new(free[o], free[o + 1], free[o + 2]));
        }
        let o = free.len() - 2;
        let d = plane_direction(&params);
        nodes.push(Vec3::new(free[o] * d.x(), free[o] * d.y(), free[o + 1]));
        Ok(GeneratingLoop { params, nodes })
    }

    pub fn free_coordinates(&self) -> Vec<f64> {
        let n = self.n_intervals();
        let mut out = Vec::with_capacity(free_len(n));
        out.push(self.nodes[0].x());
        out.push(self.nodes[0].z());
        for p in &self.nodes[1..n] {
            out.extend_from_slice(&p.0);
        }
        let d = plane_direction(&self.params);
        out.push(self.nodes[n].dot(&d));
        out.push(self.nodes[n].z());
        out
    }

    pub fn params(&self) -> &SymmetryParams {
        &self.params
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    /// Number of intervals `N` (there are `N + 1` nodes).
    pub fn n_intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Time step `(T/2h)/N`.
    pub fn dt(&self) -> f64 {
        self.params.fundamental_length() / self.n_intervals() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    /// Largest node norm.
    pub fn scale(&self) -> f64 {
        self.nodes.iter().map(Vec3::norm).fold(0.0, f64::max)
    }

    /// Discrete `∫₀^{T/2h} |u̇₀|² dt` with edge differences.
    pub fn kinetic_integral(&self) -> f64 {
        let dt = self.dt();
        self.nodes.windows(2).map(|w| (w[1] - w[0]).norm_squared()).sum::<f64>() / dt
    }

    /// The coercivity lower bound `(2h/T) sin²(sπ/l) |u₀(0)|²` for
    /// [`GeneratingLoop::kinetic_integral`] on cone loops.
    pub fn coercivity_bound(&self) -> f64 {
        let sa = self.params.twist_angle().sin();
        sa * sa * self.nodes[0].norm_squared() / self.params.fundamental_length()
    }

    /// Piecewise-linear refinement by an integer factor.
    pub fn upsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Domain("upsampling factor must be positive"));
        }
        let mut nodes = Vec::with_capacity(self.n_intervals() * factor + 1);
        for w in self.nodes.windows(2) {
            for k in 0..factor {
                nodes.push(w[0].lerp(&w[1], k as f64 / factor as f64));
            }
        }
        nodes.push(*self.nodes.last().expect("non-empty"));
        Ok(GeneratingLoop { params: self.params, nodes })
    }

    /// Same nodes scaled by `k` in space, with period `T'`.
    pub fn rescaled(&self, space: f64, period: f64) -> Result<Self> {
        let params = self.params.with_period(period)?;
        Ok(GeneratingLoop { params, nodes: self.nodes.iter().map(|p| p.scale(space)).collect() })
    }

    pub fn cone_check(&self) -> ConeCheck {
        cone_check(self)
    }

    pub fn min_distance_to_axes(&self) -> AxisDistance {
        let mut d = min_distance_to_axes(&self.nodes, self.params.l());
        d.time = self.time(d.index);
        d
    }
}

/// Number of free coordinates for `N` intervals.
pub fn free_len(n_intervals: usize) -> usize {
    3 * (n_intervals - 1) + 4
}

fn project_p0(p: &Vec3) -> Vec3 {
    Vec3::new(p.x(), 0.0, p.z())
}

fn project_ps(params: &SymmetryParams, p: &Vec3) -> Vec3 {
    let d = plane_direction(params);
    let rho = p.dot(&d);
    Vec3::new(rho * d.x(), rho * d.y(), p.z())
}

/// `u₀` sampled on `[0, T]` at the `2hN + 1` times `iΔ`: reflection through
/// `P_s` on `[T/2h, T/h]`, then rotation by `R_s^k` on `[kT/h, (k+1)T/h]`.
pub fn extend_generating(lp: &GeneratingLoop) -> Vec<Vec3> {
    let p = lp.params();
    let n = lp.n_intervals();
    let (l, s, h) = (p.l(), p.s(), p.h());
    let refl = reflection(l, s % l).expect("valid index").matrix;
    let mut base = Vec::with_capacity(2 * n + 1);
    base.extend_from_slice(lp.nodes());
    for m in 1..=n {
        base.push(refl.apply(&lp.nodes()[n - m]));
    }
    let mut out = Vec::with_capacity(2 * h * n + 1);
    for k in 0..h {
        let rot = rotation(l, (k * s) % l).expect("valid index").matrix;
        out.extend(base[..2 * n].iter().map(|q| rot.apply(q)));
    }
    out.push(out[0]);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullOrbit {
    pub params: SymmetryParams,
    /// Samples per period `M`; each trajectory has `M + 1` entries.
    pub samples: usize,
    /// `trajectories[j][i]` is body `j` at time `iT/M`.
    pub trajectories: Vec<Vec<Vec3>>,
    pub partition: ChoreographyPartition,
    /// Choreography class of each body.
    pub labels: Vec<usize>,
}

/// Builds all `n` trajectories over one period with `M` samples, `M` a
/// multiple of `2hN`. Extra samples interpolate linearly between nodes.
pub fn reconstruct(lp: &GeneratingLoop, samples: usize) -> Result<FullOrbit> {
    let p = *lp.params();
    let base_len = 2 * p.h() * lp.n_intervals();
    if samples == 0 || !samples.is_multiple_of(base_len) {
        return Err(Error::Domain("sample count must be a multiple of 2hN"));
    }
    let factor = samples / base_len;
    let ext = extend_generating(lp);
    let mut u0 = Vec::with_capacity(samples + 1);
    for w in ext.windows(2) {
        for k in 0..factor {
            u0.push(w[0].lerp(&w[1], k as f64 / factor as f64));
        }
    }
    u0.push(ext[ext.len() - 1]);
    let trajectories = group_matrices(p.l()).iter().map(|m| u0.iter().map(|q| m.apply(q)).collect()).collect();
    let partition = choreography_classes(&p);
    let labels = partition.labels(p.n());
    Ok(FullOrbit { params: p, samples, trajectories, partition, labels })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDistance {
    pub value: f64,
    pub sample: usize,
    pub bodies: (usize, usize),
}

impl FullOrbit {
    pub fn dt(&self) -> f64 {
        self.params.period() / self.samples as f64
    }

    /// Largest norm of the center of mass over all samples.
    pub fn center_of_mass_deviation(&self) -> f64 {
        let n = self.trajectories.len() as f64;
        (0..=self.samples)
            .map(|i| {
                let mut c = Vec3::ZERO;
                for t in &self.trajectories {
                    c += t[i];
                }
                c.norm() / n
            })
            .fold(0.0, f64::max)
    }

    /// Smallest pairwise distance over all samples.
    pub fn min_pair_distance(&self) -> PairDistance {
        let mut best = PairDistance { value: f64::INFINITY, sample: 0, bodies: (0, 0) };
        let nb = self.trajectories.len();
        for i in 0..=self.samples {
            for a in 0..nb {
                for b in a + 1..nb {
                    let d = self.trajectories[a][i].distance(&self.trajectories[b][i]);
                    if d < best.value {
                        best = PairDistance { value: d, sample: i, bodies: (a, b) };
                    }
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeStatus {
    InCone,
    OnBoundary,
    Outside,
}

/// Signed endpoint heights: `start_height = u₀(0)·e₃` (negative inside the
/// cone) and `end_height = u₀(T/2h)·e₃` (positive inside).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeCheck {
    pub status: ConeStatus,
    pub start_height: f64,
    pub end_height: f64,
}

impl ConeCheck {
    /// Smaller of the two distances to the cone boundary; negative outside.
    pub fn margin(&self) -> f64 {
        (-self.start_height).min(self.end_height)
    }
}

pub fn cone_check(lp: &GeneratingLoop) -> ConeCheck {
    let nodes = lp.nodes();
    let start_height = nodes[0].z();
    let end_height = nodes[nodes.len() - 1].z();
    let tol = CONE_BOUNDARY_TOL * lp.scale().max(f64::MIN_POSITIVE);
    let classify = |v: f64| {
        if v > tol {
            ConeStatus::InCone
        } else if v < -tol {
            ConeStatus::Outside
        } else {
            ConeStatus::OnBoundary
        }
    };
    let status = match (classify(-start_height), classify(end_height)) {
        (ConeStatus::InCone, ConeStatus::InCone) => ConeStatus::InCone,
        (ConeStatus::Outside, _) | (_, ConeStatus::Outside) => ConeStatus::Outside,
        _ => ConeStatus::OnBoundary,
    };
    ConeCheck { status, start_height, end_height }
}

/// A rotation axis of `D_l`: the vertical `ξ₃` axis or a horizontal line `L_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Vertical,
    Horizontal(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisDistance {
    pub value: f64,
    pub index: usize,
    pub time: f64,
    pub axis: Axis,
}

/// Distance from `p` to the collision set `Γ` and the nearest axis.
pub fn distance_to_axes(p: &Vec3, l: usize) -> (f64, Axis) {
    let (x, y, z) = (p.x(), p.y(), p.z());
    let mut best = ((x * x + y * y).sqrt(), Axis::Vertical);
    // nearest horizontal line from the polar angle of the projection
    let angle = y.atan2(x);
    let step = PI / l as f64;
    let k0 = (angle / step).round() as i64;
    for k in [k0 - 1, k0, k0 + 1] {
        let kk = k.rem_euclid(l as i64) as usize;
        let (s, c) = (kk as f64 * step).sin_cos();
        let perp = -x * s + y * c;
        let d = (perp * perp + z * z).sqrt();
        if d < best.0 {
            best = (d, Axis::Horizontal(kk));
        }
    }
    best
}

/// Minimum over `points` of the distance to `Γ`. `time` is left at zero;
/// [`GeneratingLoop::min_distance_to_axes`] fills it in.
pub fn min_distance_to_axes(points: &[Vec3], l: usize) -> AxisDistance {
    let mut best = AxisDistance { value: f64::INFINITY, index: 0, time: 0.0, axis: Axis::Vertical };
    for (i, p) in points.iter().enumerate() {
        let (d, axis) = distance_to_axes(p, l);
        if d < best.value {
            best = AxisDistance { value: d, index: i, time: 0.0, axis };
        }
    }
    best
}
