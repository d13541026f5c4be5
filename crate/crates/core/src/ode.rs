//! Adaptive Dormand–Prince 5(4) integration with FSAL and a PI step controller.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; estimated from the right-hand side when `None`.
    pub initial_step: Option<f64>,
    /// Steps below `min_step_rel · |t1 − t0|` count as underflow.
    pub min_step_rel: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-12, atol: 1e-12, initial_step: None, min_step_rel: 1e-14, max_steps: 10_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeStatus {
    Completed,
    StepUnderflow,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub status: OdeStatus,
    /// Time reached (equals `t1` when completed).
    pub t: f64,
    pub y: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], o: &OdeOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..err.len() {
        let sc = o.atol + o.rtol * y0[i].abs().max(y1[i].abs());
        let e = err[i] / sc;
        acc += e * e;
    }
    (acc / err.len() as f64).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` to `t1`. `observe(t, y)` runs after
/// every accepted step, including the final one.
pub fn integrate<F, O>(mut f: F, t0: f64, y0: &[f64], t1: f64, opts: &OdeOptions, mut observe: O) -> OdeSolution
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    let dim = y0.len();
    let span = t1 - t0;
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut ynew = vec![0.0; dim];
    let mut err = vec![0.0; dim];
    let mut evaluations = 1;
    f(t, &y, &mut k1);

    let mut h = match opts.initial_step {
        Some(h) => h.abs(),
        None => {
            let d0 = error_norm(&y, &y, &y, opts).max(1e-5);
            let d1 = error_norm(&k1, &y, &y, opts).max(1e-5);
            (0.01 * d0 / d1).min(span.abs())
        }
    } * dir;
    let h_min = opts.min_step_rel * span.abs();
    let (mut accepted, mut rejected) = (0, 0);
    let mut err_prev: f64 = 1e-4;

    if span == 0.0 {
        return OdeSolution { status: OdeStatus::Completed, t, y, accepted, rejected, evaluations };
    }

    loop {
        if accepted + rejected >= opts.max_steps {
            return OdeSolution { status: OdeStatus::MaxSteps, t, y, accepted, rejected, evaluations };
        }
        let mut last = false;
        if (t + h - t1) * dir >= 0.0 {
            h = t1 - t;
            last = true;
        }
        for i in 0..dim {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &tmp, &mut k4);
        for i in 0..dim {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &tmp, &mut k5);
        for i in 0..dim {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, &tmp, &mut k6);
        for i in 0..dim {
            ynew[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        f(t + h, &ynew, &mut k7);
        evaluations += 6;
        for i in 0..dim {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&err, &y, &ynew, opts);
        let finite = en.is_finite() && ynew.iter().all(|v| v.is_finite());

        if finite && en <= 1.0 {
            t = if last { t1 } else { t + h };
            core::mem::swap(&mut y, &mut ynew);
            core::mem::swap(&mut k1, &mut k7);
            accepted += 1;
            observe(t, &y);
            if last {
                return OdeSolution { status: OdeStatus::Completed, t, y, accepted, rejected, evaluations };
            }
            let fac = 0.9 * en.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            h *= fac.clamp(0.2, 5.0);
            err_prev = en.max(1e-4);
        } else {
            rejected += 1;
            let fac = if finite { (0.9 * en.powf(-0.2)).max(0.2) } else { 0.2 };
            h *= fac;
        }
        if h.abs() < h_min {
            return OdeSolution { status: OdeStatus::StepUnderflow, t, y, accepted, rejected, evaluations };
        }
    }
}
