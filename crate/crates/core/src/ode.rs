//! Dormand–Prince 5(4) integrator with embedded error control and
//! continuous (dense) output.
//!
//! The same kernel drives the self-similar profile solver and the backward
//! stationary integration. Integration may run in either direction.

use crate::error::{Error, Result};

/// Right-hand side of `dy/dt = f(t, y)`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];
}

impl<F, const N: usize> OdeSystem<N> for F
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N] {
        self(t, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; chosen automatically when `None`.
    pub h_init: Option<f64>,
    /// Largest admissible step magnitude.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for RkSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }
}

// Dormand–Prince tableau.
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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension of one accepted step, valid on `[t0, t0 + h]`.
#[derive(Debug, Clone, Copy)]
pub struct DenseSegment<const N: usize> {
    pub t0: f64,
    pub h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> DenseSegment<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = self.r[0][i]
                + th * (self.r[1][i]
                    + th1 * (self.r[2][i] + th * (self.r[3][i] + th1 * self.r[4][i])));
        }
        out
    }
}

/// Data handed to the observer after every accepted step.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord<const N: usize> {
    pub t_prev: f64,
    pub y_prev: [f64; N],
    pub t: f64,
    pub y: [f64; N],
    /// `f(t, y)` at the new point.
    pub dydt: [f64; N],
    pub dense: DenseSegment<N>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub accepted: usize,
    pub rejected: usize,
    /// The observer asked to stop before `t_end`.
    pub stopped: bool,
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for &(c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

fn weighted_rms<const N: usize>(v: &[f64; N], y: &[f64; N], s: &RkSettings) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sc = s.atol + s.rtol * y[i].abs();
            (v[i] / sc).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

fn initial_step<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    s: &RkSettings,
) -> f64 {
    let d0 = weighted_rms(y0, y0, s);
    let d1 = weighted_rms(f0, y0, s);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(s.h_max);
    let y1 = axpy(y0, dir * h0, &[(1.0, f0)]);
    let f1 = sys.rhs(t0 + dir * h0, &y1);
    let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = weighted_rms(&diff, y0, s) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(s.h_max)
}

/// Integrates from `t0` to `t_end` (either direction), calling `observer`
/// after every accepted step.
pub fn integrate<S, O, const N: usize>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    settings: &RkSettings,
    mut observer: O,
) -> Result<Outcome<N>>
where
    S: OdeSystem<N>,
    O: FnMut(&StepRecord<N>) -> Flow,
{
    if !all_finite(&y0) || !t0.is_finite() || !t_end.is_finite() {
        return Err(Error::NonFinite { t: t0 });
    }
    let span = t_end - t0;
    if span == 0.0 {
        return Ok(Outcome {
            t: t0,
            y: y0,
            accepted: 0,
            rejected: 0,
            stopped: false,
        });
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = sys.rhs(t, &y);
    if !all_finite(&k1) {
        return Err(Error::NonFinite { t });
    }
    let mut h = settings
        .h_init
        .unwrap_or_else(|| initial_step(sys, t0, &y0, &k1, dir, settings))
        .min(settings.h_max)
        .min(span.abs());
    let (beta, safe) = (0.04, 0.9);
    let expo1 = 0.2 - beta * 0.75;
    let mut facold: f64 = 1e-4;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut last_rejected = false;

    loop {
        if accepted + rejected >= settings.max_steps {
            return Err(Error::TooManySteps(settings.max_steps));
        }
        let remaining = (t_end - t) * dir;
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::StepCollapse { t, h });
        }
        let hs = dir * h;
        let k2 = sys.rhs(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = sys.rhs(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = sys.rhs(
            t + C4 * hs,
            &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = sys.rhs(
            t + C5 * hs,
            &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let t_new = if last { t_end } else { t + hs };
        let k6 = sys.rhs(
            t + hs,
            &axpy(
                &y,
                hs,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            hs,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = sys.rhs(t_new, &y_new);

        let finite = all_finite(&y_new) && all_finite(&k7);
        let err = if finite {
            let sum: f64 = (0..N)
                .map(|i| {
                    let e = hs
                        * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                            + E7 * k7[i]);
                    let sc = settings.atol + settings.rtol * y[i].abs().max(y_new[i].abs());
                    (e / sc).powi(2)
                })
                .sum();
            (sum / N as f64).sqrt()
        } else {
            f64::INFINITY
        };

        if err <= 1.0 {
            let fac11 = err.powf(expo1);
            let mut fac = fac11 / facold.powf(beta);
            fac = (fac / safe).clamp(0.1, 5.0);
            facold = err.max(1e-4);

            let mut r = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                r[0][i] = y[i];
                r[1][i] = ydiff;
                r[2][i] = bspl;
                r[3][i] = ydiff - hs * k7[i] - bspl;
                r[4][i] = hs
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                        + D7 * k7[i]);
            }
            let record = StepRecord {
                t_prev: t,
                y_prev: y,
                t: t_new,
                y: y_new,
                dydt: k7,
                dense: DenseSegment { t0: t, h: hs, r },
            };
            accepted += 1;
            t = t_new;
            y = y_new;
            k1 = k7;
            let flow = observer(&record);
            if flow == Flow::Stop || last {
                return Ok(Outcome {
                    t,
                    y,
                    accepted,
                    rejected,
                    stopped: flow == Flow::Stop && !last,
                });
            }
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new.min(settings.h_max);
        } else {
            rejected += 1;
            last_rejected = true;
            let shrink = if err.is_finite() {
                (err.powf(expo1) / safe).min(5.0)
            } else {
                5.0
            };
            h /= shrink;
            if !finite && h <= 16.0 * f64::EPSILON * t.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::NonFinite { t });
            }
        }
    }
}
