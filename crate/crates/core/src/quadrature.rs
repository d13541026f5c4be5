//! Gauss–Legendre rules on `[-1, 1]`, with nodes found by Newton iteration
//! on the three-term Legendre recurrence.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl GaussLegendre {
    /// The `n`-point rule; `n ≥ 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
        if n == 1 {
            return GaussLegendre { nodes: alloc::vec![0.0], weights: alloc::vec![2.0] };
        }
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        r * self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(m + r * x)).sum::<f64>()
    }
}

/// Result of [`integrate_adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveIntegral {
    pub value: f64,
    pub points: usize,
    pub converged: bool,
}

/// Doubles the rule size from `start` until successive values agree to
/// `tol` (relative, with an absolute floor of `tol`) or `cap` is reached.
pub fn integrate_adaptive(
    a: f64,
    b: f64,
    start: usize,
    cap: usize,
    tol: f64,
    f: impl Fn(f64) -> f64,
) -> AdaptiveIntegral {
    let mut n = start.max(1);
    let mut prev = GaussLegendre::new(n).integrate(a, b, &f);
    while n < cap {
        n = (2 * n).min(cap);
        let next = GaussLegendre::new(n).integrate(a, b, &f);
        if (next - prev).abs() <= tol * next.abs().max(1.0) {
            return AdaptiveIntegral { value: next, points: n, converged: true };
        }
        prev = next;
    }
    AdaptiveIntegral { value: prev, points: n, converged: false }
}
