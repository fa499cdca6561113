//! Exterior evolution of `w = r·u` for
//!
//! ```text
//! w_tt − w_rr = ζ χ_{r > |t| + R₀} |w|^{p−1} w / r^{p−1},    w(0, t) = 0,
//! ```
//!
//! on a uniform grid `r_j = j Δr`, `0 ≤ j ≤ J`, with the leapfrog scheme.
//! At Courant number one the homogeneous update is exact discrete transport
//! and the strict exterior `r_j > t_n + R₀` depends only on exterior data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::profile::ProfileSolution;

/// How the initial data are extended into `r < R₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteriorExtension {
    /// `u(r) = u(R₀)` for `r < R₀`.
    Clamp,
    /// `u(r) = 0` for `r < R₀`.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveConfig {
    pub params: ModelParams,
    /// Truncation radius of the forcing.
    pub r0: f64,
    pub dr: f64,
    /// Courant number `Δt/Δr`.
    pub lambda: f64,
    pub r_max: f64,
    pub extension: InteriorExtension,
}

impl WaveConfig {
    pub fn new(params: ModelParams, r0: f64, dr: f64, r_max: f64) -> Result<Self> {
        let cfg = Self {
            params,
            r0,
            dr,
            lambda: 1.0,
            r_max,
            extension: InteriorExtension::Clamp,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::InvalidArgument(format!("R0 must be positive, got {}", self.r0)));
        }
        if !(self.dr > 0.0 && self.dr.is_finite()) {
            return Err(Error::InvalidArgument(format!("dr must be positive, got {}", self.dr)));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "Courant number must lie in (0, 1], got {}",
                self.lambda
            )));
        }
        if !(self.r_max >= 4.0 * self.dr && self.r_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "r_max = {} is too small for dr = {}",
                self.r_max, self.dr
            )));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.lambda * self.dr
    }

    /// Index of the last node, `J = round(r_max/Δr)`.
    pub fn last_index(&self) -> usize {
        (self.r_max / self.dr).round() as usize
    }

    /// Smallest `r_max` keeping the outer boundary causally disconnected from
    /// data supported in `r ≤ support` up to time `t_max`.
    pub fn causal_r_max(r0: f64, t_max: f64, support: f64, dr: f64) -> f64 {
        r0 + t_max + support + 2.0 * dr
    }
}

/// Two consecutive time levels of `w`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveState {
    pub cfg: WaveConfig,
    /// Number of steps taken; `t = t_start + n Δt`.
    pub n: usize,
    pub t_start: f64,
    pub w_curr: Vec<f64>,
    pub w_prev: Vec<f64>,
    #[serde(skip)]
    r_pow: Vec<f64>,
    #[serde(skip)]
    scratch: Vec<f64>,
}

fn forcing_weights(cfg: &WaveConfig, len: usize) -> Vec<f64> {
    let e = 1.0 - cfg.params.p;
    (0..len)
        .map(|j| if j == 0 { 0.0 } else { (j as f64 * cfg.dr).powf(e) })
        .collect()
}

/// Leapfrog update of nodes `lo..hi`; returns the sum of `0·w^{n+1}`.
#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn update_range<N: Fn(f64) -> f64>(
    nx: &mut [f64],
    c: &[f64],
    pv: &[f64],
    r_pow: &[f64],
    lo: usize,
    hi: usize,
    unit: bool,
    l2: f64,
    scale: f64,
    nl: N,
) -> f64 {
    if lo >= hi {
        return 0.0;
    }
    let nx = &mut nx[lo..hi];
    let left = &c[lo - 1..hi - 1];
    let mid = &c[lo..hi];
    let right = &c[lo + 1..hi + 1];
    let pv = &pv[lo..hi];
    let rp = &r_pow[lo..hi];
    let mut probe = 0.0;
    if unit {
        for i in 0..nx.len() {
            let v = right[i] + left[i] - pv[i] + scale * nl(mid[i]) * rp[i];
            probe += v * 0.0;
            nx[i] = v;
        }
    } else {
        for i in 0..nx.len() {
            let v = 2.0 * mid[i] - pv[i] + l2 * (right[i] - 2.0 * mid[i] + left[i]) + scale * nl(mid[i]) * rp[i];
            probe += v * 0.0;
            nx[i] = v;
        }
    }
    probe
}

#[inline]
fn nonlinearity(w: f64, k: Option<i32>, pm1: f64) -> f64 {
    match k {
        Some(k) => w.abs().powi(k) * w,
        None => w.abs().powf(pm1) * w,
    }
}

fn integer_power(p: f64) -> Option<i32> {
    let k = p - 1.0;
    (k == k.round()).then_some(k as i32)
}

impl WaveState {
    pub fn t(&self) -> f64 {
        self.t_start + self.n as f64 * self.cfg.dt()
    }

    pub fn r(&self, j: usize) -> f64 {
        j as f64 * self.cfg.dr
    }

    pub fn len(&self) -> usize {
        self.w_curr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w_curr.is_empty()
    }

    /// State with explicitly given levels `w(t0 − Δt)` and `w(t0)`.
    pub fn from_levels(cfg: &WaveConfig, t0: f64, w_prev: Vec<f64>, w_curr: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        let len = cfg.last_index() + 1;
        if w_prev.len() != len || w_curr.len() != len {
            return Err(Error::LengthMismatch {
                values: w_curr.len().min(w_prev.len()),
                nodes: len,
            });
        }
        if let Some(j) = w_curr.iter().chain(&w_prev).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: (j % len) as f64 * cfg.dr });
        }
        let mut s = Self {
            cfg: *cfg,
            n: 0,
            t_start: t0,
            w_curr,
            w_prev,
            r_pow: forcing_weights(cfg, len),
            scratch: vec![0.0; len],
        };
        s.w_curr[0] = 0.0;
        s.w_prev[0] = 0.0;
        Ok(s)
    }

    /// Forcing `F^n_j`, zero inside the truncated region.
    fn forcing_at(&self, j: usize, w: f64, t: f64) -> f64 {
        if self.r(j) > t.abs() + self.cfg.r0 {
            self.cfg.params.zeta.sign() * nonlinearity(w, integer_power(self.cfg.params.p), self.cfg.params.p - 1.0) * self.r_pow[j]
        } else {
            0.0
        }
    }

    /// First index with `r_j > |t| + R₀`.
    fn forcing_start(&self, t: f64) -> usize {
        let edge = t.abs() + self.cfg.r0;
        let mut j = (edge / self.cfg.dr).floor().max(0.0) as usize;
        while j < self.len() && self.r(j) <= edge {
            j += 1;
        }
        while j > 0 && self.r(j - 1) > edge {
            j -= 1;
        }
        j
    }

    /// Writes `w^{n+1}` into the scratch buffer; `false` if any value is non-finite.
    fn compute_next(&mut self) -> bool {
        let len = self.len();
        if self.r_pow.len() != len {
            self.r_pow = forcing_weights(&self.cfg, len);
        }
        self.scratch.resize(len, 0.0);
        let t = self.t();
        let dt = self.cfg.dt();
        let dt2 = dt * dt;
        let l2 = self.cfg.lambda * self.cfg.lambda;
        let zeta = self.cfg.params.zeta.sign();
        let k = integer_power(self.cfg.params.p);
        let pm1 = self.cfg.params.p - 1.0;
        let jf = self.forcing_start(t).max(1);
        let last = len - 1;
        let c = &self.w_curr;
        let pv = &self.w_prev;
        let nx = &mut self.scratch;
        let unit = self.cfg.lambda == 1.0;
        let lo = jf.min(last);
        // v·0 is NaN exactly when v is not finite
        let mut probe = 0.0;
        probe += update_range(nx, c, pv, &self.r_pow, 1, lo, unit, l2, 0.0, |_| 0.0);
        let scale = dt2 * zeta;
        probe += match k {
            Some(3) => update_range(nx, c, pv, &self.r_pow, lo, last, unit, l2, scale, |w| w * w * w * w.abs()),
            Some(k) => update_range(nx, c, pv, &self.r_pow, lo, last, unit, l2, scale, |w| w.abs().powi(k) * w),
            None => update_range(nx, c, pv, &self.r_pow, lo, last, unit, l2, scale, |w| w.abs().powf(pm1) * w),
        };
        let bad = probe.is_nan();
        // outgoing one-sided update at the outer node
        nx[last] = c[last] - self.cfg.lambda * (c[last] - c[last - 1]);
        nx[0] = 0.0;
        !bad && nx[last].is_finite()
    }

    fn commit(&mut self) {
        std::mem::swap(&mut self.w_prev, &mut self.w_curr);
        std::mem::swap(&mut self.w_curr, &mut self.scratch);
        self.n += 1;
    }

    /// Advances one time level; on a non-finite update the state is left unchanged.
    pub fn step(&mut self) -> Result<()> {
        if !self.compute_next() {
            return Err(Error::NonFinite {
                t: self.t() + self.cfg.dt(),
            });
        }
        self.commit();
        Ok(())
    }

    /// Centred `w_t` at the current level, using a one-step look-ahead.
    pub fn velocity(&mut self) -> Result<Vec<f64>> {
        if !self.compute_next() {
            return Err(Error::NonFinite {
                t: self.t() + self.cfg.dt(),
            });
        }
        let inv = 0.5 / self.cfg.dt();
        Ok(self
            .scratch
            .iter()
            .zip(&self.w_prev)
            .map(|(a, b)| (a - b) * inv)
            .collect())
    }

    fn snapshot(&self) -> Snapshot {
        let inv = 0.5 / self.cfg.dt();
        let t = self.t();
        Snapshot {
            t,
            n: self.n,
            dr: self.cfg.dr,
            w: self.w_curr.clone(),
            w_t: self
                .scratch
                .iter()
                .zip(&self.w_prev)
                .map(|(a, b)| (a - b) * inv)
                .collect(),
            r_clean: self.cfg.r_max - (t - self.t_start) - self.cfg.dr,
        }
    }
}

/// Builds the initial state from radial data `(u0, u1)` with the interior
/// extension rule and a second-order Taylor start.
pub fn make_initial_state<F0, F1>(u0: F0, u1: F1, cfg: &WaveConfig) -> Result<WaveState>
where
    F0: Fn(f64) -> f64,
    F1: Fn(f64) -> f64,
{
    cfg.validate()?;
    let len = cfg.last_index() + 1;
    let dt = cfg.dt();
    let sample = |f: &dyn Fn(f64) -> f64, r: f64| -> f64 {
        if r >= cfg.r0 {
            r * f(r)
        } else {
            match cfg.extension {
                InteriorExtension::Clamp => r * f(cfg.r0),
                InteriorExtension::Zero => 0.0,
            }
        }
    };
    let mut w0 = vec![0.0; len];
    let mut w1 = vec![0.0; len];
    for j in 1..len {
        let r = j as f64 * cfg.dr;
        w0[j] = sample(&u0, r);
        w1[j] = sample(&u1, r);
        if !w0[j].is_finite() || !w1[j].is_finite() {
            return Err(Error::InvalidArgument(format!(
                "initial data are not finite at r = {r}"
            )));
        }
    }
    let mut state = WaveState::from_levels(cfg, 0.0, w0.clone(), w0)?;
    // w^{−1} = w^0 − Δt w_t + Δt²/2 (w_rr + F): the first leapfrog step then
    // reproduces the forward Taylor start
    let inv_dr2 = 1.0 / (cfg.dr * cfg.dr);
    let last = len - 1;
    for j in 1..last {
        let c = &state.w_curr;
        let lap = (c[j + 1] - 2.0 * c[j] + c[j - 1]) * inv_dr2;
        let f = state.forcing_at(j, c[j], 0.0);
        state.w_prev[j] = c[j] - dt * w1[j] + 0.5 * dt * dt * (lap + f);
    }
    state.w_prev[last] = state.w_curr[last] - dt * w1[last];
    Ok(state)
}

/// Recorded time level: `w` and centred `w_t` on the full grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub n: usize,
    pub dr: f64,
    pub w: Vec<f64>,
    pub w_t: Vec<f64>,
    /// Outermost radius unaffected by the outer boundary, `r_max − t − Δr`.
    pub r_clean: f64,
}

impl Snapshot {
    /// Snapshot built directly from sampled fields (no solver run).
    pub fn from_fields(t: f64, dr: f64, w: Vec<f64>, w_t: Vec<f64>) -> Result<Self> {
        if w.len() != w_t.len() || w.len() < 3 {
            return Err(Error::LengthMismatch {
                values: w_t.len(),
                nodes: w.len(),
            });
        }
        let r_clean = (w.len() - 1) as f64 * dr;
        Ok(Self {
            t,
            n: 0,
            dr,
            w,
            w_t,
            r_clean,
        })
    }

    pub fn r(&self, j: usize) -> f64 {
        j as f64 * self.dr
    }

    pub fn r_max(&self) -> f64 {
        (self.w.len() - 1) as f64 * self.dr
    }

    /// Last node index inside the clean region.
    pub fn clean_index(&self) -> usize {
        ((self.r_clean / self.dr).floor() as usize).min(self.w.len() - 1)
    }

    /// Centred `w_r` (one-sided at the ends).
    pub fn w_r(&self) -> Vec<f64> {
        let n = self.w.len();
        let inv = 1.0 / self.dr;
        let mut out = vec![0.0; n];
        out[0] = (self.w[1] - self.w[0]) * inv;
        out[n - 1] = (self.w[n - 1] - self.w[n - 2]) * inv;
        for j in 1..n - 1 {
            out[j] = 0.5 * (self.w[j + 1] - self.w[j - 1]) * inv;
        }
        out
    }

    /// `u = w/r`, with `u(0)` extrapolated from `w_r(0)`.
    pub fn u(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .w
            .iter()
            .enumerate()
            .map(|(j, w)| if j == 0 { 0.0 } else { w / self.r(j) })
            .collect();
        out[0] = (self.w[1] - self.w[0]) / self.dr;
        out
    }

    /// Linear interpolation of `w` at radius `r`.
    pub fn w_at(&self, r: f64) -> f64 {
        let x = r / self.dr;
        let j = (x.floor() as usize).min(self.w.len() - 2);
        let th = x - j as f64;
        self.w[j] * (1.0 - th) + self.w[j + 1] * th
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub cfg: WaveConfig,
    pub record_every: usize,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// Snapshot recorded at time `t` (to within a hundredth of a step).
    pub fn at_time(&self, t: f64) -> Result<&Snapshot> {
        let tol = 0.01 * self.cfg.dt();
        self.snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= tol)
            .ok_or(Error::Misaligned { t })
    }
}

/// Steps `state` up to time `t_end`, recording every `record_every` steps and at the final level.
///
/// On a non-finite update the state is left at the last good level and the
/// error is returned.
pub fn evolve(state: &mut WaveState, t_end: f64, record_every: usize) -> Result<Trajectory> {
    let mut snapshots = Vec::new();
    evolve_with(state, t_end, record_every, |s| {
        snapshots.push(s);
        Ok(())
    })?;
    Ok(Trajectory {
        cfg: state.cfg,
        record_every,
        snapshots,
    })
}

/// Same stepping as [`evolve`], handing each snapshot to `observer` instead of storing it.
pub fn evolve_with<O>(state: &mut WaveState, t_end: f64, record_every: usize, mut observer: O) -> Result<()>
where
    O: FnMut(Snapshot) -> Result<()>,
{
    if record_every == 0 {
        return Err(Error::InvalidArgument("record_every must be at least 1".into()));
    }
    let dt = state.cfg.dt();
    let steps_f = (t_end - state.t()) / dt;
    if !(steps_f > -1e-9) {
        return Err(Error::InvalidArgument(format!(
            "end time {t_end} precedes the current time {}",
            state.t()
        )));
    }
    let steps = steps_f.round() as usize;
    if (steps_f - steps as f64).abs() > 1e-6 {
        return Err(Error::Misaligned { t: t_end });
    }
    for k in 0..=steps {
        if !state.compute_next() {
            return Err(Error::NonFinite { t: state.t() + dt });
        }
        if k % record_every == 0 || k == steps {
            observer(state.snapshot())?;
        }
        if k < steps {
            state.commit();
        }
    }
    Ok(())
}

/// `(u, u_t, u_r)` of the self-similar solution `u = r^{−β} f(t/r)`, `|t| < r`.
pub fn self_similar_field(profile: &ProfileSolution, r: f64, t: f64) -> Result<(f64, f64, f64)> {
    if !(r > t.abs()) {
        return Err(Error::OutsideLightCone { r, t });
    }
    let beta = profile.params.beta;
    let (f, fp) = profile.eval(t / r)?;
    let rb = r.powf(-beta);
    let u = rb * f;
    let u_t = rb / r * fp;
    let u_r = -beta * rb / r * f - t * rb / (r * r) * fp;
    Ok((u, u_t, u_r))
}
