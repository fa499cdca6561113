//! Stationary profiles `z(r) = r·U(r)` of `−ΔU = ζ|U|^{p−1}U`.
//!
//! With `z = rU` the radial equation becomes
//!
//! ```text
//! z'' = −ζ |z|^{p−1} z / r^{p−1},      z(∞) = 1,  z'(∞) = 0.
//! ```
//!
//! The defocusing case `ζ = −1` reads `z'' = |z|^{p−1}z/r^{p−1}`: there `z` is
//! convex and decreasing and blows up at a finite radius `R₋ > 0`.
//!
//! Profiles are built by backward integration in `s = ln r` of the pair
//! `(z, y = r z')`, seeded at `R_inf` with the first-order asymptotics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid1D, Spacing};
use crate::interp::hermite;
use crate::ode::{integrate, DenseSegment, Flow, RkSettings};
use crate::params::{ModelParams, Zeta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryConfig {
    pub r_inf: f64,
    /// Lower end of the focusing profile.
    pub r_min: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Blow-up threshold on `z`.
    pub z_max: f64,
    /// Required relative width of the blow-up bracket.
    pub r_tol: f64,
    /// Stored nodes per unit of the logarithmic grid coordinate.
    pub nodes_per_unit: f64,
    /// Defocusing storage stops at `R₋·(1 + near_gap)`.
    pub near_gap: f64,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self {
            r_inf: 1e4,
            r_min: 1e-3,
            rtol: 1e-10,
            atol: 1e-12,
            z_max: 1e12,
            r_tol: 1e-8,
            nodes_per_unit: 1000.0,
            near_gap: 1e-6,
        }
    }
}

impl StationaryConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.r_inf > 1.0
            && self.r_min > 0.0
            && self.r_min < 1.0
            && self.rtol > 0.0
            && self.atol > 0.0
            && self.z_max > 1.0
            && self.r_tol > 0.0
            && self.nodes_per_unit >= 10.0
            && self.near_gap > 0.0
            && self.near_gap < 1.0
            && self.r_inf.is_finite()
            && self.z_max.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid stationary configuration {self:?}")))
        }
    }
}

/// `lo ≤ R₋ ≤ hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowUpBracket {
    pub lo: f64,
    pub hi: f64,
}

impl BlowUpBracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn relative_width(&self) -> f64 {
        (self.hi - self.lo) / self.lo
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryProfile {
    pub params: ModelParams,
    pub r_nodes: Grid1D,
    pub z: Vec<f64>,
    pub z_prime: Vec<f64>,
    pub r_minus: Option<BlowUpBracket>,
    pub r_inf: f64,
}

/// Asymptotic seed `(z, z')` at radius `r`.
pub fn asymptotic_seed(params: &ModelParams, r: f64) -> (f64, f64) {
    let p = params.p;
    let zeta = params.zeta.sign();
    let z = 1.0 - zeta * r.powf(3.0 - p) / ((p - 2.0) * (p - 3.0));
    let zp = zeta * r.powf(2.0 - p) / (p - 2.0);
    (z, zp)
}

fn log_rhs(params: &ModelParams, s: f64, y: &[f64; 2]) -> [f64; 2] {
    let r = s.exp();
    [
        y[1],
        y[1] - params.zeta.sign() * r.powf(3.0 - params.p) * params.signed_power(y[0]),
    ]
}

fn rk(cfg: &StationaryConfig, h_max: f64) -> RkSettings {
    RkSettings {
        rtol: cfg.rtol,
        atol: cfg.atol,
        h_init: None,
        h_max,
        max_steps: 20_000_000,
    }
}

/// Locates the defocusing blow-up radius by integrating in a rescaled time
/// `τ` with `ds/dτ = −z^{−(p−1)/2}`, in which `z` grows only exponentially.
fn bracket_blow_up(params: &ModelParams, cfg: &StationaryConfig) -> Result<BlowUpBracket> {
    let (z0, zp0) = asymptotic_seed(params, cfg.r_inf);
    let s0 = cfg.r_inf.ln();
    let s_min = cfg.r_min.ln();
    let half_pm1 = 0.5 * (params.p - 1.0);
    let m = 2.0 / (params.p - 1.0);
    let sys = |_tau: f64, y: &[f64; 3]| -> [f64; 3] {
        let phi = y[1].max(1.0).powf(-half_pm1);
        let r = y[0].exp();
        let dy = y[2] - params.zeta.sign() * r.powf(3.0 - params.p) * params.signed_power(y[1]);
        [-phi, -phi * y[2], -phi * dy]
    };
    let mut h_max = 1.0;
    for _ in 0..40 {
        let mut prev = [s0, z0, cfg.r_inf * zp0];
        let mut hit: Option<([f64; 3], [f64; 3])> = None;
        let mut missed = false;
        integrate(&sys, 0.0, prev, 1e9, &rk(cfg, h_max), |rec| {
            if rec.y[1] > cfg.z_max {
                hit = Some((rec.y_prev, rec.y));
                return Flow::Stop;
            }
            if rec.y[0] < s_min {
                missed = true;
                return Flow::Stop;
            }
            prev = rec.y;
            Flow::Continue
        })?;
        if missed {
            return Err(Error::MissingBlowUp { r_min: cfg.r_min });
        }
        let Some((before, last)) = hit else {
            return Err(Error::MissingBlowUp { r_min: cfg.r_min });
        };
        let r_last = last[0].exp();
        let zp_last = last[2] / r_last;
        // near R₋, z ≈ A (r − R₋)^{−m}: r − R₋ ≈ m z/|z'|
        let lo = r_last - 2.0 * m * last[1] / zp_last.abs();
        let hi = before[0].exp();
        let br = BlowUpBracket { lo, hi };
        if br.relative_width() <= cfg.r_tol {
            return Ok(br);
        }
        h_max *= 0.5;
    }
    Err(Error::InvalidArgument(
        "blow-up bracket did not shrink below r_tol".into(),
    ))
}

fn sample_segments(
    segments: &[DenseSegment<2>],
    s_nodes_desc: &[f64],
) -> Vec<[f64; 2]> {
    // segments run backward in s; nodes are given in decreasing order
    let mut out = Vec::with_capacity(s_nodes_desc.len());
    let mut k = 0;
    for &s in s_nodes_desc {
        while k + 1 < segments.len() && s < segments[k].t1() {
            k += 1;
        }
        out.push(segments[k].eval(s));
    }
    out
}

/// Builds the stationary profile for the given sign.
///
/// Focusing profiles cover `[r_min, R_inf]`; defocusing ones cover
/// `[R₋(1 + near_gap), R_inf]` on a grid logarithmic in `r − R₋`.
pub fn solve_stationary(zeta: Zeta, params: &ModelParams, cfg: &StationaryConfig) -> Result<StationaryProfile> {
    cfg.validate()?;
    let params = ModelParams { zeta, ..*params };
    let (z0, zp0) = asymptotic_seed(&params, cfg.r_inf);
    let s0 = cfg.r_inf.ln();

    let (r_minus, grid) = match zeta {
        Zeta::Focusing => {
            let n = ((cfg.r_inf / cfg.r_min).ln() * cfg.nodes_per_unit).ceil() as usize + 1;
            (None, Grid1D::logarithmic(cfg.r_min, cfg.r_inf, n, 0.0)?)
        }
        Zeta::Defocusing => {
            let br = bracket_blow_up(&params, cfg)?;
            let origin = br.mid();
            let a = origin * (1.0 + cfg.near_gap);
            let n = (((cfg.r_inf - origin) / (a - origin)).ln() * cfg.nodes_per_unit).ceil() as usize + 1;
            (Some(br), Grid1D::logarithmic(a, cfg.r_inf, n, origin)?)
        }
    };

    let s_stop = grid.first().ln();
    let mut segments = Vec::new();
    let mut blew_up = None;
    let sys = |s: f64, y: &[f64; 2]| log_rhs(&params, s, y);
    integrate(&sys, s0, [z0, cfg.r_inf * zp0], s_stop, &rk(cfg, 0.25), |rec| {
        if rec.y[0].abs() > cfg.z_max {
            blew_up = Some(rec.t.exp());
            return Flow::Stop;
        }
        segments.push(rec.dense);
        Flow::Continue
    })?;
    if let Some(r) = blew_up {
        return Err(Error::UnexpectedBlowUp { r });
    }

    let s_desc: Vec<f64> = grid.nodes().iter().rev().map(|r| r.ln()).collect();
    let mut states = sample_segments(&segments, &s_desc);
    states.reverse();
    // endpoints exactly at the seed
    let n = states.len();
    states[n - 1] = [z0, cfg.r_inf * zp0];
    let z: Vec<f64> = states.iter().map(|y| y[0]).collect();
    let z_prime: Vec<f64> = states
        .iter()
        .zip(grid.nodes())
        .map(|(y, r)| y[1] / r)
        .collect();
    if z.iter().chain(&z_prime).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: f64::NAN });
    }
    Ok(StationaryProfile {
        params,
        r_nodes: grid,
        z,
        z_prime,
        r_minus,
        r_inf: cfg.r_inf,
    })
}

impl StationaryProfile {
    /// `(z, z')` at radius `r`: cubic Hermite inside the grid, asymptotic form beyond `R_inf`.
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if let Some(br) = self.r_minus {
            if r <= br.hi {
                return Err(Error::InsideBlowUp { x: r, radius: br.hi });
            }
        }
        if r > self.r_inf {
            return Ok(asymptotic_seed(&self.params, r));
        }
        if !(r >= self.r_nodes.first()) {
            return Err(Error::OutOfRange {
                r,
                lo: self.r_nodes.first(),
                hi: self.r_inf,
            });
        }
        let i = self.r_nodes.locate(r);
        let x = self.r_nodes.nodes();
        Ok(hermite(
            x[i],
            x[i + 1],
            self.z[i],
            self.z[i + 1],
            self.z_prime[i],
            self.z_prime[i + 1],
            r,
        ))
    }

    /// `U(r) = z(r)/r` and `U'(r)`.
    pub fn eval_u(&self, r: f64) -> Result<(f64, f64)> {
        let (z, zp) = self.eval(r)?;
        Ok((z / r, (zp - z / r) / r))
    }

    pub fn u_values(&self) -> Vec<f64> {
        self.z.iter().zip(self.r_nodes.nodes()).map(|(z, r)| z / r).collect()
    }
}

/// Second-difference residual of the `z`-equation at every interior node.
///
/// Differences are taken in the uniform grid coordinate `σ = ln(r − origin)`,
/// so the entry at node `j` is `(r−origin)²·|z'' + ζ|z|^{p−1}z/r^{p−1}|`,
/// divided by `1 + |z|^p`.
pub fn ode_residual(profile: &StationaryProfile) -> Result<Vec<f64>> {
    let (origin, d) = match profile.r_nodes.spacing() {
        Spacing::Logarithmic { origin, step } => (origin, step),
        _ => {
            return Err(Error::InvalidArgument(
                "residual needs a logarithmic grid".into(),
            ))
        }
    };
    let m = &profile.params;
    let r = profile.r_nodes.nodes();
    let z = &profile.z;
    let out = (1..z.len() - 1)
        .map(|j| {
            let rho = r[j] - origin;
            let z_ss = (z[j + 1] - 2.0 * z[j] + z[j - 1]) / (d * d);
            let z_s = (z[j + 1] - z[j - 1]) / (2.0 * d);
            let forcing = rho * rho * m.zeta.sign() * m.signed_power(z[j]) * r[j].powf(1.0 - m.p);
            (z_ss - z_s + forcing).abs() / (1.0 + z[j].abs().powf(m.p))
        })
        .collect();
    Ok(out)
}

/// One rung `z(r) ≥ r^{−β_k}/c_k` of the defocusing lower-bound ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderCoefficients {
    pub k: usize,
    pub beta_k: f64,
    /// `c_k` itself for `k ≤ 6`; larger indices are only given through `ln_c_k`.
    pub c_k: Option<f64>,
    pub ln_c_k: f64,
}

impl LadderCoefficients {
    /// `r^{−β_k}/c_k`, evaluated in logarithms.
    pub fn bound(&self, r: f64) -> f64 {
        (-self.beta_k * r.ln() - self.ln_c_k).exp()
    }
}

pub const LADDER_MAX: usize = 12;
const LADDER_DIRECT: usize = 6;

/// `β_{k+1} = pβ_k + p − 3`, `c_{k+1} = (pβ_k + p − 3)(pβ_k + p − 2)c_k^p`, from `β_0 = 0`, `c_0 = 1`.
pub fn ladder(k_max: usize, params: &ModelParams) -> Result<Vec<LadderCoefficients>> {
    if k_max > LADDER_MAX {
        return Err(Error::InvalidArgument(format!(
            "ladder index {k_max} exceeds {LADDER_MAX}"
        )));
    }
    let p = params.p;
    let mut out = vec![LadderCoefficients {
        k: 0,
        beta_k: 0.0,
        c_k: Some(1.0),
        ln_c_k: 0.0,
    }];
    // β_k carried as an unevaluated sum hi + lo so rounding does not accumulate
    let mut beta_lo = 0.0;
    for k in 0..k_max {
        let cur = out[k];
        let (hi, lo) = two_prod(p, cur.beta_k);
        let (sum, err) = two_sum(hi, p - 3.0);
        let tail = lo + err + p * beta_lo;
        let a = sum + tail;
        beta_lo = tail - (a - sum);
        let b = a + 1.0;
        let ln_c = a.ln() + b.ln() + p * cur.ln_c_k;
        let c_k = if k + 1 <= LADDER_DIRECT {
            cur.c_k.map(|c| a * b * c.powf(p)).filter(|c| c.is_finite())
        } else {
            None
        };
        out.push(LadderCoefficients {
            k: k + 1,
            beta_k: a,
            c_k,
            ln_c_k: ln_c,
        });
    }
    Ok(out)
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Closed form `β_k = (p−3)(p^k − 1)/(p−1)`.
pub fn ladder_beta_closed_form(k: usize, p: f64) -> f64 {
    (p - 3.0) * (p.powf(k as f64) - 1.0) / (p - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderMargin {
    pub k: usize,
    /// `min (z − r^{−β_k}/c_k)` over nodes with `r < 1`.
    pub min_margin: f64,
    /// Same minimum after dividing each margin by `z`.
    pub min_relative_margin: f64,
}

pub fn check_ladder_bounds(profile: &StationaryProfile, k_max: usize) -> Result<Vec<LadderMargin>> {
    if profile.params.zeta != Zeta::Defocusing {
        return Err(Error::WrongBranch("focusing"));
    }
    let rungs = ladder(k_max, &profile.params)?;
    Ok(rungs
        .iter()
        .map(|c| {
            let mut min_margin = f64::INFINITY;
            let mut min_rel = f64::INFINITY;
            for (&r, &z) in profile.r_nodes.nodes().iter().zip(&profile.z) {
                if r >= 1.0 {
                    break;
                }
                let m = z - c.bound(r);
                min_margin = min_margin.min(m);
                min_rel = min_rel.min(m / z);
            }
            LadderMargin {
                k: c.k,
                min_margin,
                min_relative_margin: min_rel,
            }
        })
        .collect())
}

/// `U_C(x) = sgn(C)|C|^{−2/(p−3)} U(x/|C|^{(p−1)/(p−3)})`, with `U_0 = 0`.
///
/// `U` is the focusing or defocusing stationary solution carried by `profile`.
pub fn evaluate_rescaled(profile: &StationaryProfile, c: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("need x > 0 and finite C, got x = {x}, C = {c}")));
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    let p = profile.params.p;
    let ac = c.abs();
    let len = ac.powf((p - 1.0) / (p - 3.0));
    if let Some(br) = profile.r_minus {
        if x <= len * br.hi {
            return Err(Error::InsideBlowUp {
                x,
                radius: len * br.hi,
            });
        }
    }
    let (u, _) = profile.eval_u(x / len)?;
    Ok(c.signum() * ac.powf(-2.0 / (p - 3.0)) * u)
}

/// `(U_C, ∂_x U_C)` for the same family.
pub fn evaluate_rescaled_with_slope(profile: &StationaryProfile, c: f64, x: f64) -> Result<(f64, f64)> {
    if c == 0.0 {
        return Ok((0.0, 0.0));
    }
    let value = evaluate_rescaled(profile, c, x)?;
    let p = profile.params.p;
    let ac = c.abs();
    let len = ac.powf((p - 1.0) / (p - 3.0));
    let (_, du) = profile.eval_u(x / len)?;
    Ok((value, c.signum() * ac.powf(-2.0 / (p - 3.0)) * du / len))
}
