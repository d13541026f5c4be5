//! Dihedral group algebra and the symmetry data of an orbit.
//!
//! Conventions: `R` is the rotation by `2π/l` about the `ξ₃` axis and `S` the
//! rotation by `π` about `ξ₁`. The `2l` group elements are indexed as
//! `R_k = R^k` and `R_{l+k} = R^k S` for `k = 0..l`. The plane reflections
//! `R̂_k` fix the vertical plane `P_k: ξ₂ = ξ₁ tan(kπ/l)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::ddouble::DD;
use crate::linalg::Mat3;
use crate::{Error, Result, EULER_GAMMA};

/// Symmetry parameters `(n, l, s, h, T)` of an orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryParams {
    n: usize,
    l: usize,
    s: usize,
    h: usize,
    period: f64,
}

impl SymmetryParams {
    /// Validated parameters: `n = 2l ≥ 4`, `1 ≤ s ≤ l/2`, `T > 0`.
    pub fn new(n: usize, s: usize, period: f64) -> Result<Self> {
        let p = Self::with_any_twist(n, s, period)?;
        if 2 * s > p.l {
            return Err(Error::Domain("twist s must satisfy 1 <= s <= l/2"));
        }
        Ok(p)
    }

    /// Like [`SymmetryParams::new`] but accepts any twist `1 ≤ s ≤ l`. The
    /// twists `s` and `l - s` describe the same geometry, so this only exists
    /// for forced evaluations outside the canonical range.
    pub fn with_any_twist(n: usize, s: usize, period: f64) -> Result<Self> {
        if !n.is_multiple_of(2) || n < 4 {
            return Err(Error::Domain("body count n must be even and at least 4"));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::Domain("period T must be positive"));
        }
        let l = n / 2;
        let h = minimal_h(l, s)?;
        Ok(SymmetryParams { n, l, s, h, period })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Length `T/2h` of the fundamental time domain.
    pub fn fundamental_length(&self) -> f64 {
        self.period / (2 * self.h) as f64
    }

    /// Same parameters with a different period.
    pub fn with_period(&self, period: f64) -> Result<Self> {
        Self::with_any_twist(self.n, self.s, period)
    }

    /// Angle `sπ/l` between the planes `P_0` and `P_s`.
    pub fn twist_angle(&self) -> f64 {
        self.s as f64 * PI / self.l as f64
    }

    /// All `n` group matrices `R_0 .. R_{n-1}`.
    pub fn group(&self) -> Vec<Mat3> {
        group_matrices(self.l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    /// `R_k`, rotation about `ξ₃`.
    Rotation,
    /// `R_{l+k} = R^k S`, half-turn about a horizontal axis.
    RotoReflection,
    /// `R̂_k`, reflection through the plane `P_k`.
    PlaneReflection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement {
    pub kind: ElementKind,
    pub index: usize,
    pub matrix: Mat3,
}

/// `R_k` for `k < l`, `R_{l+k'} = R^{k'} S` for `l ≤ k < 2l`.
pub fn rotation(l: usize, k: usize) -> Result<GroupElement> {
    if l < 2 {
        return Err(Error::Domain("polygon order l must be at least 2"));
    }
    if k >= 2 * l {
        return Err(Error::Domain("group index must be below 2l"));
    }
    let (kind, kk) = if k < l { (ElementKind::Rotation, k) } else { (ElementKind::RotoReflection, k - l) };
    let ang = 2.0 * PI * kk as f64 / l as f64;
    let (sn, cs) = exact_sin_cos(ang, kk, l);
    let matrix = match kind {
        ElementKind::Rotation => Mat3([[cs, -sn, 0.0], [sn, cs, 0.0], [0.0, 0.0, 1.0]]),
        _ => Mat3([[cs, sn, 0.0], [sn, -cs, 0.0], [0.0, 0.0, -1.0]]),
    };
    Ok(GroupElement { kind, index: k, matrix })
}

/// `R̂_k`, the reflection fixing the plane `P_k: ξ₂ = ξ₁ tan(kπ/l)`.
pub fn reflection(l: usize, k: usize) -> Result<GroupElement> {
    if l < 2 {
        return Err(Error::Domain("polygon order l must be at least 2"));
    }
    if k >= l {
        return Err(Error::Domain("reflection index must be below l"));
    }
    let (sn, cs) = exact_sin_cos(2.0 * PI * k as f64 / l as f64, k, l);
    Ok(GroupElement {
        kind: ElementKind::PlaneReflection,
        index: k,
        matrix: Mat3([[cs, sn, 0.0], [sn, -cs, 0.0], [0.0, 0.0, 1.0]]),
    })
}

// sin/cos of 2πk/l with exact values at the quarter turns, so that e.g.
// R_s^h lands exactly on the identity.
fn exact_sin_cos(angle: f64, k: usize, l: usize) -> (f64, f64) {
    let k4 = 4 * (k % l);
    if k4.is_multiple_of(l) {
        match k4 / l {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        angle.sin_cos()
    }
}

/// The `2l` matrices `R_0 .. R_{2l-1}`.
pub fn group_matrices(l: usize) -> Vec<Mat3> {
    (0..2 * l).map(|k| rotation(l, k).expect("index in range").matrix).collect()
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Least `h ≥ 1` with `s h ≡ 0 (mod l)`, i.e. `l / gcd(l, s)`.
pub fn minimal_h(l: usize, s: usize) -> Result<usize> {
    if l < 2 {
        return Err(Error::Domain("polygon order l must be at least 2"));
    }
    if s == 0 || s > l {
        return Err(Error::Domain("twist s must satisfy 1 <= s <= l"));
    }
    Ok(l / gcd(l, s))
}

/// Partition of the body indices into choreographies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoreographyPartition {
    /// Each class lists bodies `b_0, b_1, ..` with `u_{b_0}(t) = u_{b_m}(t - mT/h)`.
    pub classes: Vec<Vec<usize>>,
}

impl ChoreographyPartition {
    /// Index of the class containing `body`.
    pub fn class_of(&self, body: usize) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(&body))
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Per-body class labels.
    pub fn labels(&self, n: usize) -> Vec<usize> {
        let mut out = alloc::vec![usize::MAX; n];
        for (ci, c) in self.classes.iter().enumerate() {
            for &b in c {
                out[b] = ci;
            }
        }
        out
    }
}

/// Body reached from `body` after one time shift `T/h`.
fn shift_successor(body: usize, l: usize, s: usize) -> usize {
    if body < l {
        (body + s) % l
    } else {
        let k = body - l;
        l + (k + l - s % l) % l
    }
}

/// Choreography classes of the orbit, in the order `u_0 .. u_{l/h-1}` for the
/// first polygon followed by `u_l, u_{2l-1}, .., u_{2l-l/h+1}` for the second.
pub fn choreography_classes(params: &SymmetryParams) -> ChoreographyPartition {
    let (l, s, h) = (params.l, params.s, params.h);
    let per_polygon = l / h;
    let starts = (0..per_polygon).chain((0..per_polygon).map(|j| if j == 0 { l } else { 2 * l - j }));
    let classes = starts
        .map(|start| {
            let mut class = Vec::with_capacity(h);
            let mut b = start;
            for _ in 0..h {
                class.push(b);
                b = shift_successor(b, l, s);
            }
            debug_assert_eq!(b, start);
            class
        })
        .collect();
    ChoreographyPartition { classes }
}

/// `f(n) = ((n-1)/n)^{3/2} π/2^{3/2} · n/(log n + γ) - 1`, the largest twist
/// for which the spherical test loop beats the total-collision level.
pub fn twist_bound(n: usize) -> f64 {
    let nf = n as f64;
    ((nf - 1.0) / nf).powf(1.5) * PI / 2f64.powf(1.5) * nf / (nf.ln() + EULER_GAMMA) - 1.0
}

fn twist_bound_dd(n: usize) -> DD {
    let nf = DD::from_f64(n as f64);
    let ratio = (nf - DD::from_f64(1.0)) / (DD::from_f64(2.0) * nf);
    let pow = ratio * ratio.sqrt();
    pow * DD::PI * nf / (nf.ln() + DD::EULER_GAMMA) - DD::from_f64(1.0)
}

fn floor_dd(x: DD) -> f64 {
    let f = x.hi.floor();
    if f == x.hi && x.lo < 0.0 {
        f - 1.0
    } else {
        f
    }
}

/// Largest admissible twist for `n` bodies:
/// `floor(max(1, f(n)))`, capped at `l/2`. With `allow_n8_special` the
/// sharper eight-body estimate admits `s = 2` for `n = 8`.
pub fn admissible_s_max(n: usize, allow_n8_special: bool) -> Result<usize> {
    if !n.is_multiple_of(2) || n < 4 {
        return Err(Error::Domain("body count n must be even and at least 4"));
    }
    let l = n / 2;
    if allow_n8_special && n == 8 {
        return Ok(2);
    }
    let f = twist_bound(n);
    let floored = if (f - f.round()).abs() < 1e-9 { floor_dd(twist_bound_dd(n)) } else { f.floor() };
    let s = floored.max(1.0) as usize;
    Ok(s.min(l / 2).max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const ORTHO_TOL: f64 = 1e-14;

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation(2, 0).unwrap().matrix, Mat3::IDENTITY);
        assert!(rotation(2, 1).unwrap().matrix.max_abs_diff(&Mat3::diag(-1.0, -1.0, 1.0)) < 1e-15);
        let c = (2.0 * PI / 3.0).cos();
        let s = (2.0 * PI / 3.0).sin();
        let expect = Mat3([[c, s, 0.0], [s, -c, 0.0], [0.0, 0.0, -1.0]]);
        let m = rotation(3, 4).unwrap();
        assert_eq!(m.kind, ElementKind::RotoReflection);
        assert!(m.matrix.max_abs_diff(&expect) < 1e-15);
        assert!(rotation(3, 6).is_err());
        assert!(rotation(1, 0).is_err());
    }

    #[test]
    fn reflection_examples() {
        assert!(reflection(2, 0).unwrap().matrix.max_abs_diff(&Mat3::diag(1.0, -1.0, 1.0)) < 1e-15);
        assert!(reflection(4, 4).is_err());
        for l in 2..=12 {
            let r0 = reflection(l, 0).unwrap().matrix;
            for k in 0..l {
                let rk = reflection(l, k).unwrap().matrix;
                let prod = rk * r0;
                assert!(prod.max_abs_diff(&rotation(l, k).unwrap().matrix) < 1e-14, "l={l} k={k}");
                assert!((rk * rk).max_abs_diff(&Mat3::IDENTITY) < 1e-14);
            }
        }
    }

    #[test]
    fn orthogonality_and_determinants() {
        for l in 2..=12 {
            for k in 0..2 * l {
                let g = rotation(l, k).unwrap();
                let m = g.matrix;
                assert!((m.transpose() * m).max_abs_diff(&Mat3::IDENTITY) < ORTHO_TOL);
                assert!((m.determinant() - 1.0).abs() < ORTHO_TOL);
            }
            for k in 0..l {
                let m = reflection(l, k).unwrap().matrix;
                assert!((m.transpose() * m).max_abs_diff(&Mat3::IDENTITY) < ORTHO_TOL);
                assert!((m.determinant() + 1.0).abs() < ORTHO_TOL);
            }
        }
    }

    #[test]
    fn reflection_fixes_its_plane() {
        let l = 5;
        for k in 0..l {
            let a = k as f64 * PI / l as f64;
            let p = crate::Vec3::new(2.0 * a.cos(), 2.0 * a.sin(), -0.7);
            let q = reflection(l, k).unwrap().matrix.apply(&p);
            assert!((q - p).norm() < 1e-14);
        }
    }

    fn find(group: &[Mat3], m: &Mat3) -> Option<usize> {
        group.iter().position(|g| g.max_abs_diff(m) < 1e-12)
    }

    #[test]
    fn group_closed_under_multiplication() {
        for l in 2..=8 {
            let g = group_matrices(l);
            for a in &g {
                for b in &g {
                    assert!(find(&g, &(*a * *b)).is_some(), "l = {l}");
                }
                assert!(find(&g, &a.transpose()).is_some());
            }
        }
    }

    #[test]
    fn group_permutes_vertex_set() {
        let l = 6;
        let g = group_matrices(l);
        let p = crate::Vec3::new(0.3, -1.1, 0.45);
        let orbit: Vec<_> = g.iter().map(|m| m.apply(&p)).collect();
        for m in &g {
            for v in &orbit {
                let w = m.apply(v);
                assert!(orbit.iter().any(|o| (*o - w).norm() < 1e-12));
            }
        }
    }

    #[test]
    fn minimal_h_examples() {
        assert_eq!(minimal_h(12, 9).unwrap(), 4);
        for l in 2..=20 {
            assert_eq!(minimal_h(l, 1).unwrap(), l);
        }
        // brute-force scan
        let brute = |l: usize, s: usize| (1..=l).find(|h| (s * h).is_multiple_of(l)).unwrap();
        assert_eq!(brute(6, 4), 3);
        assert_eq!(minimal_h(6, 4).unwrap(), 3);
        for l in 2..=30 {
            for s in 1..=l {
                let h = minimal_h(l, s).unwrap();
                assert_eq!(h, brute(l, s));
                assert_eq!(l % h, 0);
                if s < l {
                    assert_eq!(h, minimal_h(l, l - s).unwrap());
                }
            }
        }
        assert!(minimal_h(5, 0).is_err());
        assert!(minimal_h(5, 6).is_err());
    }

    #[test]
    fn choreography_l12_s9() {
        let p = SymmetryParams::with_any_twist(24, 9, 1.0).unwrap();
        let c = choreography_classes(&p);
        let expect: Vec<Vec<usize>> = vec![
            vec![0, 9, 6, 3],
            vec![1, 10, 7, 4],
            vec![2, 11, 8, 5],
            vec![12, 15, 18, 21],
            vec![23, 14, 17, 20],
            vec![22, 13, 16, 19],
        ];
        assert_eq!(c.classes, expect);
    }

    #[test]
    fn choreography_l2_s1() {
        let p = SymmetryParams::new(4, 1, 1.0).unwrap();
        assert_eq!(choreography_classes(&p).classes, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn choreography_partition_shape() {
        for l in 2..=12 {
            for s in 1..=l / 2 {
                let p = SymmetryParams::new(2 * l, s, 1.0).unwrap();
                let c = choreography_classes(&p);
                assert_eq!(c.len(), 2 * l / p.h());
                let mut seen = vec![false; 2 * l];
                for class in &c.classes {
                    assert_eq!(class.len(), p.h());
                    for &b in class {
                        assert!(!seen[b]);
                        seen[b] = true;
                    }
                }
                assert!(seen.iter().all(|&x| x));
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(SymmetryParams::new(5, 1, 1.0).is_err());
        assert!(SymmetryParams::new(2, 1, 1.0).is_err());
        assert!(SymmetryParams::new(4, 2, 1.0).is_err());
        assert!(SymmetryParams::new(4, 1, 0.0).is_err());
        assert!(SymmetryParams::new(4, 1, -1.0).is_err());
        let p = SymmetryParams::new(24, 6, 2.0).unwrap();
        assert_eq!((p.l(), p.h()), (12, 2));
        assert!((p.fundamental_length() - 0.5).abs() < 1e-15);
        assert!(SymmetryParams::with_any_twist(4, 2, 1.0).is_ok());
    }

    #[test]
    fn admissible_table() {
        assert_eq!(admissible_s_max(4, false).unwrap(), 1);
        assert_eq!(admissible_s_max(8, false).unwrap(), 1);
        assert_eq!(admissible_s_max(8, true).unwrap(), 2);
        assert_eq!(admissible_s_max(10, false).unwrap(), 2);
        assert_eq!(admissible_s_max(14, false).unwrap(), 3);
        assert_eq!(admissible_s_max(26, false).unwrap(), 6);
        assert!(admissible_s_max(7, false).is_err());
        assert!(admissible_s_max(2, false).is_err());
    }

    #[test]
    fn twist_bound_monotone() {
        let mut prev = twist_bound(4);
        for n in 5..=200 {
            let f = twist_bound(n);
            assert!(f > prev, "n = {n}");
            prev = f;
        }
    }

    #[test]
    fn double_double_agrees_with_f64() {
        for n in (4..=400).step_by(2) {
            let a = twist_bound(n);
            let b = twist_bound_dd(n).to_f64();
            assert!((a - b).abs() < 1e-13 * a.abs().max(1.0), "n = {n}: {a} vs {b}");
        }
    }

    #[test]
    fn floor_dd_resolves_near_integers() {
        assert_eq!(floor_dd(DD { hi: 3.0, lo: -1e-20 }), 2.0);
        assert_eq!(floor_dd(DD { hi: 3.0, lo: 1e-20 }), 3.0);
        assert_eq!(floor_dd(DD { hi: 2.9999999999, lo: 0.0 }), 2.0);
    }
}
