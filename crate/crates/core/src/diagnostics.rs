//! Channel-of-energy diagnostics on recorded snapshots of `w = r·u`.
//!
//! Energies and pairings are per steradian. Integrals that formally extend
//! to `r = ∞` are computed up to the clean radius of the snapshot plus a
//! power-law tail fitted on the last decade of the integrand.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_offset_power, fit_power_law, PowerLawFit};
use crate::params::ModelParams;
use crate::quadrature::{cumulative_from_right, uniform_window};
use crate::wave::{Snapshot, Trajectory};

const TAIL_SAMPLES: usize = 64;

/// Up to `TAIL_SAMPLES` node indices, log-spaced on `[r_lo, r_hi]`.
fn log_spaced_indices(dr: f64, r_lo: f64, r_hi: f64) -> Vec<usize> {
    let j_lo = (r_lo / dr).ceil().max(1.0) as usize;
    let j_hi = (r_hi / dr).floor() as usize;
    if j_hi <= j_lo + 1 {
        return Vec::new();
    }
    let (a, b) = ((j_lo as f64).ln(), (j_hi as f64).ln());
    let mut out: Vec<usize> = (0..TAIL_SAMPLES)
        .map(|k| (a + (b - a) * k as f64 / (TAIL_SAMPLES - 1) as f64).exp().round() as usize)
        .map(|j| j.clamp(j_lo, j_hi))
        .collect();
    out.dedup();
    out
}

/// Analytic continuation of `∫_{r_hi}^∞ values` from a power law fitted on
/// `[max(r_lo, r_hi/10), r_hi]`.
///
/// `Ok(None)` when the sampled integrand is not strictly positive (data that
/// vanish near the edge carry no tail).
fn fitted_tail(values: &[f64], dr: f64, r_lo: f64, r_hi: f64) -> Result<Option<PowerLawFit>> {
    let idx = log_spaced_indices(dr, r_lo.max(0.1 * r_hi), r_hi);
    if idx.len() < 3 {
        return Ok(None);
    }
    let samples: Vec<(f64, f64)> = idx.iter().map(|&j| (j as f64 * dr, values[j])).collect();
    if samples.iter().any(|&(_, y)| !(y > 0.0)) {
        return Ok(None);
    }
    let fit = fit_power_law(&samples)?;
    if !(fit.exponent < -1.0) {
        return Err(Error::NonIntegrableTail {
            exponent: fit.exponent,
        });
    }
    Ok(Some(fit))
}

fn window(snap: &Snapshot, lo: f64) -> Result<(f64, f64)> {
    let hi = snap.r_clean.min(snap.r_max());
    if !(hi > lo) || lo < 0.0 {
        return Err(Error::EmptyWindow { lo, hi });
    }
    Ok((lo, hi))
}

fn energy_density(snap: &Snapshot) -> Vec<f64> {
    snap.w_r()
        .iter()
        .zip(&snap.w_t)
        .map(|(a, b)| a * a + b * b)
        .collect()
}

/// `∫ (w_r² + w_t²) dr` over `[lo, hi]`.
pub fn window_energy(snap: &Snapshot, lo: f64, hi: f64) -> Result<f64> {
    uniform_window(&energy_density(snap), snap.dr, lo, hi)
}

/// `∫_{|t|+R}^{r_clean} (w_r² + w_t²) dr`.
pub fn exterior_energy(snap: &Snapshot, r: f64) -> Result<f64> {
    let (lo, hi) = window(snap, snap.t.abs() + r)?;
    window_energy(snap, lo, hi)
}

/// Exterior energy including the fitted tail beyond the clean radius.
///
/// The tail is omitted when the density vanishes near the edge.
pub fn exterior_energy_with_tail(snap: &Snapshot, r: f64) -> Result<f64> {
    let (lo, hi) = window(snap, snap.t.abs() + r)?;
    let dens = energy_density(snap);
    let body = uniform_window(&dens, snap.dr, lo, hi)?;
    let tail = match fitted_tail(&dens, snap.dr, lo, hi)? {
        Some(fit) => fit.tail_integral(hi)?,
        None => 0.0,
    };
    Ok(body + tail)
}

/// `|∫_R^{R'} w_r² dr − [∫_R^{R'} r²u_r² dr − R u(R)² + R' u(R')²]|` together with
/// the normalising energy `∫_R^{R'} r²(u_r² + u_t²) dr`.
///
/// `R` is moved to the first node at or beyond it and `R'` is the last clean
/// node. Both gradients are cell differences, so the discrete defect is
/// `(Δr²/4)∫u_r² dr` and no difference stencil straddles the light-cone kink
/// at the lower end of an exterior window.
pub fn energy_identity_terms(snap: &Snapshot, r: f64) -> Result<(f64, f64)> {
    let (lo, hi) = window(snap, r)?;
    let h = snap.dr;
    let j_lo = ((lo / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let j_hi = ((hi / h) * (1.0 + 1e-12)).floor() as usize;
    if j_hi <= j_lo {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let u = |j: usize| snap.w[j] / snap.r(j);
    let (mut lhs, mut grad, mut kin) = (0.0, 0.0, 0.0);
    for j in j_lo..j_hi {
        let dw = (snap.w[j + 1] - snap.w[j]) / h;
        let du = (u(j + 1) - u(j)) / h;
        let rm = snap.r(j) + 0.5 * h;
        lhs += h * dw * dw;
        grad += h * rm * rm * du * du;
        kin += 0.5 * h * (snap.w_t[j] * snap.w_t[j] + snap.w_t[j + 1] * snap.w_t[j + 1]);
    }
    let boundary = snap.r(j_hi) * u(j_hi).powi(2) - snap.r(j_lo) * u(j_lo).powi(2);
    Ok(((lhs - (grad + boundary)).abs(), grad + kin))
}

pub fn energy_identity_residual(snap: &Snapshot, r: f64) -> Result<f64> {
    Ok(energy_identity_terms(snap, r)?.0)
}

/// Projection of `(u, u_t)` on the generator `(1/r, 0)` of the exterior space at radius `R`.
///
/// Returns `λ = R·u(R)` and the cosine of the angle, `None` when the data norm vanishes.
pub fn projection_onto_generator(snap: &Snapshot, r: f64) -> Result<(f64, Option<f64>)> {
    let (lo, hi) = window(snap, r)?;
    let w_r = snap.w_r();
    let n = snap.w.len();
    let mut dens = vec![0.0; n];
    for j in 1..n {
        let ru_r = w_r[j] - snap.w[j] / snap.r(j);
        dens[j] = ru_r * ru_r + snap.w_t[j] * snap.w_t[j];
    }
    let body = uniform_window(&dens, snap.dr, lo, hi)?;
    let tail = match fitted_tail(&dens, snap.dr, lo, hi)? {
        Some(fit) => fit.tail_integral(hi)?,
        None => 0.0,
    };
    let norm2 = body + tail;
    let lambda = snap.w_at(lo);
    let cos = (norm2 > 0.0).then(|| lambda / lo.sqrt() / norm2.sqrt());
    Ok((lambda, cos))
}

/// Worst margin of `|u(r)| ≤ r^{−1/2} (∫_r^∞ s² u_r² ds)^{1/2}` over the clean nodes.
pub fn pointwise_bound_check(snap: &Snapshot) -> Result<f64> {
    let hi_j = snap.clean_index();
    if hi_j < 2 {
        return Err(Error::EmptyWindow {
            lo: snap.dr,
            hi: snap.r_clean,
        });
    }
    let u = snap.u();
    let nodes: Vec<f64> = (1..=hi_j).map(|j| snap.r(j)).collect();
    let dens: Vec<f64> = (1..=hi_j)
        .map(|j| {
            let r = snap.r(j);
            let ur = if j < snap.w.len() - 1 {
                (u[j + 1] - u[j - 1]) / (2.0 * snap.dr)
            } else {
                (u[j] - u[j - 1]) / snap.dr
            };
            r * r * ur * ur
        })
        .collect();
    let mut full = vec![0.0; snap.w.len()];
    full[1..=hi_j].copy_from_slice(&dens);
    let r_hi = snap.r(hi_j);
    let tail = match fitted_tail(&full, snap.dr, snap.dr, r_hi) {
        Ok(Some(fit)) => fit.tail_integral(r_hi).unwrap_or(0.0),
        _ => 0.0,
    };
    let cum = cumulative_from_right(&nodes, &dens);
    Ok(nodes
        .iter()
        .zip(&cum)
        .enumerate()
        .map(|(i, (&r, &c))| ((c + tail).max(0.0) / r).sqrt() - u[i + 1].abs())
        .fold(f64::INFINITY, f64::min))
}

/// `|v₊(r0, t0) − v₊(r0 + T − t0, T) + ζ ∫_{t0}^{T} r|u|^{p−1}u dt'|` along the
/// outgoing characteristic `r = r0 + t' − t0`, with `v₊ = w_t − w_r`.
pub fn characteristic_residual(traj: &Trajectory, r0: f64, t0: f64, t_end: f64) -> Result<f64> {
    let params: ModelParams = traj.cfg.params;
    if !(r0 > t0.abs() + traj.cfg.r0) {
        return Err(Error::InvalidArgument(format!(
            "characteristic foot r0 = {r0} is not exterior at t0 = {t0}"
        )));
    }
    let first = traj.at_time(t0)?;
    let last = traj.at_time(t_end)?;
    let r_end = r0 + last.t - first.t;
    if r_end > last.r_clean {
        return Err(Error::CharacteristicExitsGrid {
            needed: r_end,
            available: last.r_clean,
        });
    }
    let along: Vec<&Snapshot> = traj
        .snapshots
        .iter()
        .filter(|s| s.t >= first.t && s.t <= last.t)
        .collect();
    if along.len() < 2 {
        return Err(Error::TooFewSnapshots {
            needed: 2,
            got: along.len(),
        });
    }
    let zeta = params.zeta.sign();
    let source = |s: &Snapshot| {
        let r = r0 + s.t - first.t;
        params.signed_power(s.w_at(r)) * r.powf(1.0 - params.p)
    };
    let mut integral = 0.0;
    for pair in along.windows(2) {
        integral += 0.5 * (pair[1].t - pair[0].t) * (source(pair[0]) + source(pair[1]));
    }
    let v_plus = |s: &Snapshot, r: f64| {
        let j = (r / s.dr).round() as usize;
        let w_r = (s.w[j + 1] - s.w[j - 1]) / (2.0 * s.dr);
        s.w_t[j] - w_r
    };
    Ok((v_plus(first, r0) - v_plus(last, r_end) + zeta * integral).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NonradiativeConsistent,
    Radiating,
    Inconclusive,
}

/// Far-field fit `w ≈ C + D r^{3−p}` and the decay exponent of `|u − C/r|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarField {
    pub t: f64,
    pub c: f64,
    pub d: f64,
    pub residual_exponent: Option<f64>,
}

/// Per-snapshot row of a [`ChannelReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSample {
    pub t: f64,
    pub e_ext: f64,
    pub e_ext_total: f64,
    pub lambda_proj: f64,
    pub cos_angle: Option<f64>,
    pub spatial_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    #[serde(rename = "R")]
    pub r: f64,
    pub p: f64,
    pub zeta: f64,
    pub times: Vec<f64>,
    /// Exterior energy up to the clean radius.
    pub e_ext: Vec<f64>,
    /// Exterior energy including the fitted tail.
    pub e_ext_total: Vec<f64>,
    pub lambda_proj: Vec<f64>,
    pub cos_angle: Vec<Option<f64>>,
    /// Fit of `e_ext_total` against `t` over `fit_window`.
    pub decay_fit: Option<PowerLawFit>,
    pub fit_window: (f64, f64),
    pub target_exponent: f64,
    pub spatial_exponents: Vec<Option<f64>>,
    pub far_field: Option<FarField>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayOptions {
    /// Time window of the energy fit; `None` uses `[t_last/5, t_last]`.
    pub fit_window: Option<(f64, f64)>,
    /// Slack added to the target exponent `−(5−p)/(p−1)`.
    pub slack: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self {
            fit_window: None,
            slack: 0.1,
        }
    }
}

fn spatial_exponent(snap: &Snapshot, r: f64) -> Option<f64> {
    let lo = (2.0 * snap.t.abs()).max(snap.t.abs() + r);
    let hi = 0.5 * snap.r_clean;
    let u = snap.u();
    let samples: Vec<(f64, f64)> = log_spaced_indices(snap.dr, lo, hi)
        .into_iter()
        .map(|j| (snap.r(j), u[j].abs()))
        .collect();
    fit_power_law(&samples).ok().map(|f| f.exponent)
}

pub fn far_field(snap: &Snapshot, params: &ModelParams) -> Result<FarField> {
    let hi = snap.r_clean.min(snap.r_max());
    let lo = (0.1 * hi).max(snap.t.abs() + snap.dr);
    let idx = log_spaced_indices(snap.dr, lo, hi);
    let samples: Vec<(f64, f64)> = idx.iter().map(|&j| (snap.r(j), snap.w[j])).collect();
    if samples.len() < 3 {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let (c, d) = fit_offset_power(&samples, 3.0 - params.p)?;
    let resid: Vec<(f64, f64)> = samples.iter().map(|&(r, w)| (r, ((w - c) / r).abs())).collect();
    let residual_exponent = fit_power_law(&resid).ok().map(|f| f.exponent);
    Ok(FarField {
        t: snap.t,
        c,
        d,
        residual_exponent,
    })
}

pub fn channel_sample(snap: &Snapshot, r: f64) -> Result<ChannelSample> {
    let e_ext = exterior_energy(snap, r)?;
    let e_ext_total = exterior_energy_with_tail(snap, r)?;
    let (lambda_proj, cos_angle) = projection_onto_generator(snap, snap.t.abs() + r)?;
    Ok(ChannelSample {
        t: snap.t,
        e_ext,
        e_ext_total,
        lambda_proj,
        cos_angle,
        spatial_exponent: spatial_exponent(snap, r),
    })
}

/// Assembles a report from rows ordered by time.
pub fn assemble_report(
    samples: &[ChannelSample],
    far: Option<FarField>,
    params: &ModelParams,
    r: f64,
    opts: &DecayOptions,
) -> Result<ChannelReport> {
    if samples.len() < 4 {
        return Err(Error::TooFewSnapshots {
            needed: 4,
            got: samples.len(),
        });
    }
    let t_last = samples.last().map(|s| s.t).unwrap_or(0.0);
    let fit_window = opts.fit_window.unwrap_or((0.2 * t_last, t_last));
    let in_window: Vec<&ChannelSample> = samples
        .iter()
        .filter(|s| s.t > 0.0 && s.t >= fit_window.0 && s.t <= fit_window.1)
        .collect();
    let points: Vec<(f64, f64)> = in_window.iter().map(|s| (s.t, s.e_ext_total)).collect();
    let decay_fit = fit_power_law(&points).ok();
    let target_exponent = params.energy_decay_exponent();
    let decreasing = samples.windows(2).all(|w| w[1].e_ext_total < w[0].e_ext_total);
    let verdict = match decay_fit {
        None => Verdict::Inconclusive,
        Some(fit) if fit.exponent <= target_exponent + opts.slack && decreasing => Verdict::NonradiativeConsistent,
        Some(fit) if fit.exponent > target_exponent + opts.slack => Verdict::Radiating,
        Some(_) => Verdict::Inconclusive,
    };
    Ok(ChannelReport {
        r,
        p: params.p,
        zeta: params.zeta.sign(),
        times: samples.iter().map(|s| s.t).collect(),
        e_ext: samples.iter().map(|s| s.e_ext).collect(),
        e_ext_total: samples.iter().map(|s| s.e_ext_total).collect(),
        lambda_proj: samples.iter().map(|s| s.lambda_proj).collect(),
        cos_angle: samples.iter().map(|s| s.cos_angle).collect(),
        decay_fit,
        fit_window,
        target_exponent,
        spatial_exponents: samples.iter().map(|s| s.spatial_exponent).collect(),
        far_field: far,
        verdict,
    })
}

pub fn decay_report(traj: &Trajectory, r: f64) -> Result<ChannelReport> {
    decay_report_with(traj, r, &DecayOptions::default())
}

pub fn decay_report_with(traj: &Trajectory, r: f64, opts: &DecayOptions) -> Result<ChannelReport> {
    if traj.snapshots.len() < 4 {
        return Err(Error::TooFewSnapshots {
            needed: 4,
            got: traj.snapshots.len(),
        });
    }
    let samples: Vec<ChannelSample> = traj
        .snapshots
        .par_iter()
        .map(|s| channel_sample(s, r))
        .collect::<Result<_>>()?;
    let far = traj
        .snapshots
        .last()
        .and_then(|s| far_field(s, &traj.cfg.params).ok());
    assemble_report(&samples, far, &traj.cfg.params, r, opts)
}
