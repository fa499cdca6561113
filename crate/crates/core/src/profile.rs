//! Self-similar profiles `u(r, t) = r^{−β} f(t/r)` of the defocusing equation.
//!
//! The profile solves the degenerate initial-value problem
//!
//! ```text
//! (1 − x²) f'' − 2βx f' + γ f + |f|^{p−1} f = 0,   f(0) = 0,  f'(0) = a
//! ```
//!
//! on `[0, 1)`. Internally the solver advances the pair `(f, g)` with
//! `g = (1 − x²)^β f'` in the stretched variable `s = −ln(1 − x)`, where
//!
//! ```text
//! df/ds =  (1 − x) (1 − x²)^{−β} g
//! dg/ds = −(1 − x) (1 − x²)^{β−1} P'(f)
//! ```
//!
//! Both right-hand sides vanish like a power of `1 − x` at the endpoint, so
//! the adaptive kernel reaches `x = 1 − δ` with geometrically refined nodes.
//! `g(1⁻) = G` is the quantity whose zeros give profiles with bounded `f'`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::interp::hermite;
use crate::ode::{integrate, DenseSegment, Flow, RkSettings};
use crate::params::ModelParams;

/// Solver settings for the profile equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Endpoint margin: integration stops at `x = 1 − δ`.
    pub delta: f64,
    /// Largest step in the stretched variable `s`.
    pub h_max: f64,
    /// Upper bound on stored nodes; extra nodes are thinned evenly.
    pub max_nodes: usize,
}

impl Default for ProfileSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            delta: 1e-8,
            h_max: 0.05,
            max_nodes: 40_000,
        }
    }
}

impl ProfileSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "endpoint margin delta must lie in (0, 0.5), got {}",
                self.delta
            )));
        }
        if !(self.h_max > 0.0) || self.max_nodes < 2 {
            return Err(Error::InvalidArgument("h_max > 0 and max_nodes >= 2 required".into()));
        }
        Ok(())
    }
}

/// Solution of the profile equation on `[0, 1 − δ]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileSolution {
    /// Shooting parameter `f'(0)`.
    pub a: f64,
    pub params: ModelParams,
    pub x_nodes: Grid1D,
    /// `1 − x` at each node, carried separately to keep relative accuracy near `x = 1`.
    pub one_minus_x: Vec<f64>,
    pub f: Vec<f64>,
    pub f_prime: Vec<f64>,
    /// `(1 − x²)^β f'` at each node.
    pub weighted_slope: Vec<f64>,
    /// Endpoint limit `G = lim (1 − x²)^β f'(x)`.
    pub g_limit: f64,
    /// Endpoint value `f(1)`, approximated by `f(1 − δ)`.
    pub f1: f64,
    pub n_extrema: usize,
    pub delta: f64,
    #[serde(skip)]
    segments: Vec<DenseSegment<2>>,
}

fn rhs(params: &ModelParams, s: f64, y: &[f64; 2]) -> [f64; 2] {
    let e = (-s).exp();
    let two_minus = 2.0 - e;
    let w = e * two_minus;
    let wb = w.powf(params.beta);
    // e·w^{−β} written so that no intermediate underflows near the endpoint
    let df = e.powf(1.0 - params.beta) * two_minus.powf(-params.beta) * y[1];
    let dg = -wb / two_minus * params.potential_prime(y[0]);
    [df, dg]
}

/// Integrates the profile equation for `f'(0) = a`.
pub fn solve_profile(a: f64, params: &ModelParams, settings: &ProfileSettings) -> Result<ProfileSolution> {
    settings.validate()?;
    if !a.is_finite() {
        return Err(Error::InvalidArgument(format!("shooting parameter must be finite, got {a}")));
    }
    let s_end = -settings.delta.ln();
    let mut s_nodes = vec![0.0];
    let mut states = vec![[0.0, a]];
    let mut segments = Vec::new();
    if a != 0.0 {
        let rk = RkSettings {
            rtol: settings.rtol,
            atol: settings.atol,
            h_init: None,
            h_max: settings.h_max,
            max_steps: 10_000_000,
        };
        let sys = |s: f64, y: &[f64; 2]| rhs(params, s, y);
        integrate(&sys, 0.0, [0.0, a], s_end, &rk, |rec| {
            s_nodes.push(rec.t);
            states.push(rec.y);
            segments.push(rec.dense);
            Flow::Continue
        })?;
    } else {
        // f ≡ 0
        s_nodes.push(s_end);
        states.push([0.0, 0.0]);
    }
    build_solution(a, params, settings, s_nodes, states, segments)
}

fn build_solution(
    a: f64,
    params: &ModelParams,
    settings: &ProfileSettings,
    mut s_nodes: Vec<f64>,
    mut states: Vec<[f64; 2]>,
    segments: Vec<DenseSegment<2>>,
) -> Result<ProfileSolution> {
    if states.iter().any(|y| !y[0].is_finite() || !y[1].is_finite()) {
        return Err(Error::NonFinite { t: f64::NAN });
    }
    let last = *states.last().expect("at least one state");
    let s_end = *s_nodes.last().expect("at least one node");
    let gap_end = (-s_end).exp();
    let w_end = gap_end * (2.0 - gap_end);
    let f1 = last[0];
    let g_limit = last[1] - w_end.powf(params.beta) * params.potential_prime(f1) / (2.0 * params.beta);

    if s_nodes.len() > settings.max_nodes {
        let n = s_nodes.len();
        let keep: Vec<usize> = (0..settings.max_nodes)
            .map(|k| ((k as f64) * (n - 1) as f64 / (settings.max_nodes - 1) as f64).round() as usize)
            .collect();
        s_nodes = keep.iter().map(|&i| s_nodes[i]).collect();
        states = keep.iter().map(|&i| states[i]).collect();
        s_nodes.dedup();
    }

    let one_minus_x: Vec<f64> = s_nodes.iter().map(|s| (-s).exp()).collect();
    let x: Vec<f64> = s_nodes.iter().map(|s| -(-s).exp_m1()).collect();
    let f: Vec<f64> = states.iter().map(|y| y[0]).collect();
    let weighted_slope: Vec<f64> = states.iter().map(|y| y[1]).collect();
    let f_prime: Vec<f64> = one_minus_x
        .iter()
        .zip(&weighted_slope)
        .map(|(&e, &g)| g * (e * (2.0 - e)).powf(-params.beta))
        .collect();

    let mut sol = ProfileSolution {
        a,
        params: *params,
        x_nodes: Grid1D::irregular(x)?,
        one_minus_x,
        f,
        f_prime,
        weighted_slope,
        g_limit,
        f1,
        n_extrema: 0,
        delta: settings.delta,
        segments,
    };
    sol.n_extrema = extrema_locations(&sol).len();
    Ok(sol)
}

impl ProfileSolution {
    fn segment_at(&self, s: f64) -> Option<&DenseSegment<2>> {
        if self.segments.is_empty() {
            return None;
        }
        let i = self.segments.partition_point(|seg| seg.t1() < s);
        self.segments.get(i.min(self.segments.len() - 1))
    }

    /// `(f, f')` at any `|x| ≤ 1 − δ`, using the odd extension for `x < 0`.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        let ax = x.abs();
        let x_max = self.x_nodes.last();
        if !(ax <= x_max) {
            return Err(Error::OutOfRange {
                r: x,
                lo: -x_max,
                hi: x_max,
            });
        }
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        let w = (1.0 - ax) * (1.0 + ax);
        let (f, fp) = if let Some(seg) = self.segment_at(-(-ax).ln_1p()) {
            let y = seg.eval(-(-ax).ln_1p());
            (y[0], y[1] * w.powf(-self.params.beta))
        } else {
            let nodes = self.x_nodes.nodes();
            let i = self.x_nodes.locate(ax);
            let (x0, x1) = (nodes[i], nodes[i + 1]);
            hermite(x0, x1, self.f[i], self.f[i + 1], self.f_prime[i], self.f_prime[i + 1], ax)
        };
        Ok((sign * f, fp))
    }

    /// `f''` from the equation itself at `|x| < 1`.
    pub fn second_derivative(&self, x: f64, f: f64, fp: f64) -> f64 {
        let m = &self.params;
        (2.0 * m.beta * x * fp - m.potential_prime(f)) / ((1.0 - x) * (1.0 + x))
    }

    /// Upper semi-conserved quantity `½(1−x²)^{2β} f'² + (1−x²)^{2β−1} P(f)` at every node.
    pub fn upper_energy(&self) -> Vec<f64> {
        let m = &self.params;
        self.one_minus_x
            .iter()
            .zip(self.f.iter().zip(&self.weighted_slope))
            .map(|(&e, (&f, &g))| {
                let w = e * (2.0 - e);
                0.5 * g * g + w.powf(2.0 * m.beta - 1.0) * m.potential(f)
            })
            .collect()
    }

    /// Lower quantity `½(1−x²) f'² + P(f)` at every node.
    pub fn lower_energy(&self) -> Vec<f64> {
        let m = &self.params;
        self.one_minus_x
            .iter()
            .zip(self.f.iter().zip(&self.f_prime))
            .map(|(&e, (&f, &fp))| 0.5 * e * (2.0 - e) * fp * fp + m.potential(f))
            .collect()
    }
}

/// `(max_upper_violation, min_lower_margin)`: the largest increase of the
/// upper semi-conserved quantity between consecutive nodes, and the smallest
/// value of `½(1−x²)f'² + P(f) − a²/2`.
pub fn conservation_report(sol: &ProfileSolution) -> (f64, f64) {
    let q = sol.upper_energy();
    let max_upper = q
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0_f64, f64::max);
    let half_a2 = 0.5 * sol.a * sol.a;
    let min_lower = sol
        .lower_energy()
        .iter()
        .map(|l| l - half_a2)
        .fold(f64::INFINITY, f64::min);
    (max_upper, min_lower)
}

const SUBSAMPLES: usize = 5;

/// Interior zeros of `f'` on `(0, 1 − δ)`, each located by bisection on the
/// dense solver output.
pub fn extrema_locations(sol: &ProfileSolution) -> Vec<f64> {
    let mut out = Vec::new();
    if sol.a == 0.0 {
        return out;
    }
    let to_x = |s: f64| -(-s).exp_m1();
    if sol.segments.is_empty() {
        // Only node data available.
        let g = &sol.weighted_slope;
        let x = sol.x_nodes.nodes();
        for i in 1..g.len().saturating_sub(1) {
            if g[i] == 0.0 || g[i].signum() != g[i + 1].signum() && g[i + 1] != 0.0 {
                out.push(0.5 * (x[i] + x[i + 1]));
            }
        }
        return out;
    }
    let mut prev_sign = sol.a.signum();
    for seg in &sol.segments {
        let mut prev_s = seg.t0;
        for k in 1..=SUBSAMPLES {
            let s = if k == SUBSAMPLES {
                seg.t1()
            } else {
                seg.t0 + seg.h * k as f64 / SUBSAMPLES as f64
            };
            let g = seg.eval(s)[1];
            if g != 0.0 && g.signum() != prev_sign {
                let (mut lo, mut hi) = (prev_s, s);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if seg.eval(mid)[1].signum() == prev_sign {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let root = 0.5 * (lo + hi);
                let f_root = seg.eval(root)[0];
                // f' = 0 with f ≠ 0 forces f'' ≠ 0: an isolated extremum
                if f_root != 0.0 {
                    out.push(to_x(root));
                }
                prev_sign = g.signum();
            }
            prev_s = s;
        }
    }
    out
}

pub fn count_extrema(sol: &ProfileSolution) -> usize {
    extrema_locations(sol).len()
}

/// Shooting controls for [`find_bounded_profiles`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootSettings {
    /// Bisection stops once the bracket is narrower than `a_tol_rel · a`.
    pub a_tol_rel: f64,
    /// Acceptance threshold on `|G|`; `None` uses `1e-8·(1 + a^p)`.
    pub g_tol: Option<f64>,
}

impl Default for ShootSettings {
    fn default() -> Self {
        Self {
            a_tol_rel: 1e-14,
            g_tol: None,
        }
    }
}

impl ShootSettings {
    pub fn g_tol_at(&self, a: f64, p: f64) -> f64 {
        self.g_tol.unwrap_or(1e-8 * (1.0 + a.abs().powf(p)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedProfile {
    pub a: f64,
    pub abs_g: f64,
}

/// Endpoint limit `G(a)`.
pub fn endpoint_limit(a: f64, params: &ModelParams, settings: &ProfileSettings) -> Result<f64> {
    Ok(solve_profile(a, params, settings)?.g_limit)
}

/// Scans `G(a)` on `n_scan` equispaced points of `[a_lo, a_hi]` and bisects
/// every sign change. Returned roots satisfy `|G| < g_tol`, in increasing `a`.
pub fn find_bounded_profiles(
    params: &ModelParams,
    a_lo: f64,
    a_hi: f64,
    n_scan: usize,
    settings: &ProfileSettings,
    shoot: &ShootSettings,
) -> Result<Vec<BoundedProfile>> {
    if !(a_lo > 0.0 && a_hi > a_lo) || n_scan < 2 {
        return Err(Error::InvalidArgument(format!(
            "need 0 < a_lo < a_hi and n_scan >= 2 (got [{a_lo}, {a_hi}], {n_scan})"
        )));
    }
    let step = (a_hi - a_lo) / (n_scan - 1) as f64;
    let samples: Vec<f64> = (0..n_scan)
        .map(|k| if k + 1 == n_scan { a_hi } else { a_lo + k as f64 * step })
        .collect();
    let values: Vec<f64> = samples
        .par_iter()
        .map(|&a| endpoint_limit(a, params, settings))
        .collect::<Result<_>>()?;

    let brackets: Vec<(f64, f64, f64, f64)> = (0..n_scan - 1)
        .filter_map(|k| {
            let (g0, g1) = (values[k], values[k + 1]);
            if g0 == 0.0 {
                Some((samples[k], samples[k], g0, g0))
            } else if g0.signum() != g1.signum() && g1 != 0.0 {
                Some((samples[k], samples[k + 1], g0, g1))
            } else {
                None
            }
        })
        .collect();

    let roots: Vec<Option<BoundedProfile>> = brackets
        .par_iter()
        .map(|&(lo, hi, g_lo, _)| -> Result<Option<BoundedProfile>> {
            let (mut lo, mut hi) = (lo, hi);
            let sign_lo = g_lo.signum();
            let mut best = (lo, g_lo.abs());
            for _ in 0..200 {
                if hi - lo <= shoot.a_tol_rel * hi {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let g = endpoint_limit(mid, params, settings)?;
                if g.abs() < best.1 {
                    best = (mid, g.abs());
                }
                if g == 0.0 {
                    break;
                }
                if g.signum() == sign_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let tol = shoot.g_tol_at(best.0, params.p);
            Ok((best.1 < tol).then_some(BoundedProfile {
                a: best.0,
                abs_g: best.1,
            }))
        })
        .collect::<Result<_>>()?;
    Ok(roots.into_iter().flatten().collect())
}
