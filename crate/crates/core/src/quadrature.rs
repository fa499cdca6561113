//! Composite trapezoid quadrature on sampled data.

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Composite trapezoid integral of `values` sampled on `grid`.
///
/// Exact for integrands that are linear between nodes.
pub fn integrate_grid(values: &[f64], grid: &Grid1D) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(Error::LengthMismatch {
            values: values.len(),
            nodes: grid.len(),
        });
    }
    Ok(trapezoid(grid.nodes(), values))
}

/// Trapezoid sum over raw node/value slices of equal length.
pub fn trapezoid(nodes: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(nodes.len(), values.len());
    nodes
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Trapezoid integral over `[lo, hi]` of data on a uniform grid `r_j = j·dr`,
/// with partial end cells handled by linear interpolation.
pub fn uniform_window(values: &[f64], dr: f64, lo: f64, hi: f64) -> Result<f64> {
    let n = values.len();
    let r_last = (n - 1) as f64 * dr;
    if !(hi > lo) || lo < 0.0 || hi > r_last * (1.0 + 1e-14) {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let hi = hi.min(r_last);
    let value_at = |r: f64| -> f64 {
        let j = ((r / dr).floor() as usize).min(n - 2);
        let theta = r / dr - j as f64;
        values[j] * (1.0 - theta) + values[j + 1] * theta
    };
    // first node strictly inside (lo, hi) and last node strictly inside
    let j_lo = (lo / dr).floor() as usize + 1;
    let j_hi = ((hi / dr).ceil() as usize).saturating_sub(1);
    if j_lo > j_hi {
        let (a, b) = (value_at(lo), value_at(hi));
        return Ok(0.5 * (hi - lo) * (a + b));
    }
    let r_jlo = j_lo as f64 * dr;
    let r_jhi = j_hi as f64 * dr;
    let mut total = 0.5 * (r_jlo - lo) * (value_at(lo) + values[j_lo]);
    for j in j_lo..j_hi {
        total += 0.5 * dr * (values[j] + values[j + 1]);
    }
    total += 0.5 * (hi - r_jhi) * (values[j_hi] + value_at(hi));
    Ok(total)
}

/// Running integrals `∫_{x_i}^{x_last}` for every node (trapezoid), last entry 0.
pub fn cumulative_from_right(nodes: &[f64], values: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut out = vec![0.0; n];
    for i in (0..n.saturating_sub(1)).rev() {
        out[i] = out[i + 1] + 0.5 * (nodes[i + 1] - nodes[i]) * (values[i] + values[i + 1]);
    }
    out
}
