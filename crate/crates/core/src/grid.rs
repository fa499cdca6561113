use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the nodes of a [`Grid1D`] were laid out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Spacing {
    /// `r_j = r_0 + j h`
    Uniform { step: f64 },
    /// `ln(r_j − origin)` uniform with spacing `step`.
    Logarithmic { origin: f64, step: f64 },
    /// No structure beyond monotonicity (e.g. adaptive solver nodes).
    Irregular,
}

/// Strictly increasing set of at least two nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    nodes: Vec<f64>,
    spacing: Spacing,
}

impl Grid1D {
    pub fn new(nodes: Vec<f64>, spacing: Spacing) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a grid needs at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        if let Some(i) = nodes
            .windows(2)
            .position(|w| !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "grid nodes must be finite and strictly increasing (index {i})"
            )));
        }
        Ok(Self { nodes, spacing })
    }

    pub fn irregular(nodes: Vec<f64>) -> Result<Self> {
        Self::new(nodes, Spacing::Irregular)
    }

    /// `n` equispaced nodes covering `[a, b]`.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 || !(b > a) {
            return Err(Error::InvalidArgument(format!(
                "uniform grid needs n >= 2 and b > a (n = {n}, [{a}, {b}])"
            )));
        }
        let h = (b - a) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|j| a + j as f64 * h).collect();
        nodes[n - 1] = b;
        Self::new(nodes, Spacing::Uniform { step: h })
    }

    /// Nodes `origin + exp(σ_j)` with `σ_j` equispaced, covering `[a, b]`, `a > origin`.
    pub fn logarithmic(a: f64, b: f64, n: usize, origin: f64) -> Result<Self> {
        if n < 2 || !(b > a) || !(a > origin) {
            return Err(Error::InvalidArgument(format!(
                "logarithmic grid needs n >= 2 and origin < a < b (n = {n}, origin = {origin}, [{a}, {b}])"
            )));
        }
        let s0 = (a - origin).ln();
        let s1 = (b - origin).ln();
        let h = (s1 - s0) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n)
            .map(|j| origin + (s0 + j as f64 * h).exp())
            .collect();
        nodes[0] = a;
        nodes[n - 1] = b;
        Self::new(nodes, Spacing::Logarithmic { origin, step: h })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.nodes[0]
    }

    pub fn last(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index `i` with `nodes[i] <= x < nodes[i + 1]`, clamped to a valid cell.
    pub fn locate(&self, x: f64) -> usize {
        let n = self.nodes.len();
        let i = self.nodes.partition_point(|&v| v <= x);
        i.saturating_sub(1).min(n - 2)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.first() && x <= self.last()
    }
}
