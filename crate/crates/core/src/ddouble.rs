//! Double-double arithmetic (about 32 significant digits), used only to
//! settle floors of values that land within rounding distance of an integer.

use core::ops::{Add, Div, Mul, Sub};

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DD {
    pub const PI: DD = DD { hi: core::f64::consts::PI, lo: 1.2246467991473532e-16 };
    pub const LN2: DD = DD { hi: core::f64::consts::LN_2, lo: 2.3190468138462996e-17 };
    pub const EULER_GAMMA: DD = DD { hi: 0.5772156649015329, lo: -4.942915152430645e-18 };

    pub fn from_f64(x: f64) -> DD {
        DD { hi: x, lo: 0.0 }
    }

    #[cfg(test)]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn sqrt(self) -> DD {
        if self.hi <= 0.0 {
            return DD::from_f64(0.0);
        }
        // one Newton step on top of the f64 root
        let x = self.hi.sqrt();
        let xx = DD::from_f64(x) * DD::from_f64(x);
        let corr = (self - xx).hi / (2.0 * x);
        let (hi, lo) = quick_two_sum(x, corr);
        DD { hi, lo }
    }

    pub fn exp(self) -> DD {
        // x = k ln2 + r, |r| <= ln2/2, then exp(r) by Taylor on r/16 and squaring
        let k = (self.hi / DD::LN2.hi).round();
        let r = self - DD::LN2 * DD::from_f64(k);
        let r = r * DD::from_f64(1.0 / 16.0);
        let mut term = DD::from_f64(1.0);
        let mut sum = DD::from_f64(1.0);
        for i in 1..=30 {
            term = term * r / DD::from_f64(i as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-34 {
                break;
            }
        }
        for _ in 0..4 {
            sum = sum * sum;
        }
        let scale = 2f64.powi(k as i32);
        DD { hi: sum.hi * scale, lo: sum.lo * scale }
    }

    pub fn ln(self) -> DD {
        let mut y = DD::from_f64(self.hi.ln());
        for _ in 0..3 {
            // y <- y + x exp(-y) - 1
            let e = DD { hi: -y.hi, lo: -y.lo }.exp();
            y = y + self * e - DD::from_f64(1.0);
        }
        y
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, o: DD) -> DD {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, o: DD) -> DD {
        self + DD { hi: -o.hi, lo: -o.lo }
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, o: DD) -> DD {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, o: DD) -> DD {
        let q1 = self.hi / o.hi;
        let r = self - o * DD::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * DD::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + DD::from_f64(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_and_exp_invert() {
        for &x in &[0.5, 2.0, 10.0, 26.0, 1234.5] {
            let d = DD::from_f64(x);
            let back = d.ln().exp();
            let rel = ((back - d).to_f64() / x).abs();
            assert!(rel < 1e-30, "x = {x}, rel = {rel:e}");
        }
    }

    #[test]
    fn ln2_consistent() {
        let l = DD::from_f64(2.0).ln() - DD::LN2;
        assert!(l.to_f64().abs() < 1e-31);
    }

    #[test]
    fn sqrt_squares_back() {
        let two = DD::from_f64(2.0);
        let r = two.sqrt();
        assert!((r * r - two).to_f64().abs() < 1e-31);
    }
}
