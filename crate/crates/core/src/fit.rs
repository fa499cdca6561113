//! Least-squares fits used by the decay diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `y ≈ amplitude · x^exponent`, fitted in log–log coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub amplitude: f64,
    /// Root-mean-square residual of `ln y` about the fitted line.
    pub rms_residual: f64,
}

impl PowerLawFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * x.powf(self.exponent)
    }

    /// `∫_{x0}^{∞} amplitude·x^exponent dx`; requires `exponent < −1`.
    pub fn tail_integral(&self, x0: f64) -> Result<f64> {
        if !(self.exponent < -1.0) {
            return Err(Error::NonIntegrableTail {
                exponent: self.exponent,
            });
        }
        Ok(self.amplitude * x0.powf(self.exponent + 1.0) / (-(self.exponent + 1.0)))
    }
}

pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<PowerLawFit> {
    if samples.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "power-law fit needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    if let Some((index, &(x, y))) = samples
        .iter()
        .enumerate()
        .find(|(_, &(x, y))| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::NonPositiveSample { index, x, y });
    }
    let logs: Vec<(f64, f64)> = samples.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let (slope, intercept) = line_fit(&logs)?;
    let ss: f64 = logs
        .iter()
        .map(|&(lx, ly)| {
            let r = ly - (intercept + slope * lx);
            r * r
        })
        .sum();
    Ok(PowerLawFit {
        exponent: slope,
        amplitude: intercept.exp(),
        rms_residual: (ss / logs.len() as f64).sqrt(),
    })
}

/// Ordinary least-squares line `y = slope·x + intercept`.
pub fn line_fit(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if !(sxx > 0.0) {
        return Err(Error::InvalidArgument(
            "degenerate abscissae in least-squares fit".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Least-squares `y ≈ c0 + c1·x^q` with a known exponent `q`.
pub fn fit_offset_power(samples: &[(f64, f64)], q: f64) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(x, y)| (x.powf(q), y)).collect();
    let (c1, c0) = line_fit(&pts)?;
    Ok((c0, c1))
}
