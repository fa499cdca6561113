//! Initial data descriptors.

use std::sync::Arc;

use nonrad_core::stationary::{evaluate_rescaled, solve_stationary, StationaryConfig, StationaryProfile};
use nonrad_core::{derive_params, ModelParams, Zeta};
use serde::Serialize;

use crate::args::{DataArgs, DataKind, ModelArgs};
use crate::error::CliError;

pub type Field = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Radial data `(u0, u1)` with the model they are meant for.
pub struct InitialData {
    pub params: ModelParams,
    pub u0: Field,
    pub u1: Field,
    /// Outer edge of the support, `None` for data with power-law tails.
    pub support: Option<f64>,
    pub descriptor: Descriptor,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Descriptor {
    SelfSimilar { a: f64 },
    Stationary { c: f64, r_minus: Option<f64> },
    Bump { center: f64, width: f64, amplitude: f64 },
    File { path: String, rows: usize },
}

pub fn parse_zeta(model: &ModelArgs, default: Zeta) -> Result<Zeta, CliError> {
    match &model.zeta {
        None => Ok(default),
        Some(s) => s.parse::<Zeta>().map_err(|e| CliError::Invalid(e.to_string())),
    }
}

pub fn params(model: &ModelArgs, default: Zeta) -> Result<ModelParams, CliError> {
    let zeta = parse_zeta(model, default)?;
    derive_params(model.p, zeta).map_err(|e| CliError::Invalid(e.to_string()))
}

fn finite(name: &str, v: Option<f64>) -> Result<f64, CliError> {
    match v {
        Some(x) if x.is_finite() => Ok(x),
        Some(x) => Err(CliError::Invalid(format!("--{name} must be finite, got {x}"))),
        None => Err(CliError::Invalid(format!("--{name} is required for this data"))),
    }
}

fn bump_shape(r: f64, center: f64, width: f64) -> f64 {
    let x = (r - center) / width;
    if x.abs() < 1.0 {
        (1.0 - x * x).powi(4)
    } else {
        0.0
    }
}

/// Default sign of the nonlinearity for each kind of data.
pub fn default_zeta(kind: DataKind) -> Zeta {
    match kind {
        DataKind::Stationary => Zeta::Focusing,
        _ => Zeta::Defocusing,
    }
}

pub fn stationary_profile(params: &ModelParams) -> Result<StationaryProfile, CliError> {
    Ok(solve_stationary(params.zeta, params, &StationaryConfig::default())?)
}

/// Validates the descriptor; numerics (the stationary solve) run only after validation passes.
pub fn prepare(model: &ModelArgs, data: &DataArgs, r0: f64) -> Result<InitialData, CliError> {
    let params = params(model, default_zeta(data.data))?;
    match data.data {
        DataKind::SelfSimilar => {
            let a = finite("a", data.a)?;
            if params.zeta != Zeta::Defocusing {
                return Err(CliError::Invalid(
                    "self-similar data solve the defocusing equation; use --zeta -1".into(),
                ));
            }
            let b = params.beta;
            Ok(InitialData {
                params,
                u0: Arc::new(|_| 0.0),
                u1: Arc::new(move |r: f64| a * r.powf(-b - 1.0)),
                support: None,
                descriptor: Descriptor::SelfSimilar { a },
            })
        }
        DataKind::Stationary => {
            let c = finite("C", data.c)?;
            let prof = Arc::new(stationary_profile(&params)?);
            let len = c.abs().powf((params.p - 1.0) / (params.p - 3.0));
            let r_minus = prof.r_minus.map(|b| b.hi * len);
            if c != 0.0 {
                evaluate_rescaled(&prof, c, r0).map_err(|e| CliError::Invalid(format!("stationary data at R0 = {r0}: {e}")))?;
            }
            let p2 = Arc::clone(&prof);
            Ok(InitialData {
                params,
                u0: Arc::new(move |r: f64| evaluate_rescaled(&p2, c, r).unwrap_or(f64::NAN)),
                u1: Arc::new(|_| 0.0),
                support: None,
                descriptor: Descriptor::Stationary { c, r_minus },
            })
        }
        DataKind::Bump => {
            let center = finite("center", data.center)?;
            let width = finite("width", data.width)?;
            let amplitude = finite("amplitude", data.amplitude)?;
            if !(width > 0.0 && center - width >= 0.0) {
                return Err(CliError::Invalid(format!(
                    "bump needs width > 0 and center >= width (got center {center}, width {width})"
                )));
            }
            Ok(InitialData {
                params,
                u0: Arc::new(move |r: f64| amplitude * bump_shape(r, center, width)),
                u1: Arc::new(|_| 0.0),
                support: Some(center + width),
                descriptor: Descriptor::Bump {
                    center,
                    width,
                    amplitude,
                },
            })
        }
        DataKind::File => {
            let path = data
                .path
                .clone()
                .ok_or_else(|| CliError::Invalid("--path is required for file data".into()))?;
            let table = Arc::new(read_table(&path)?);
            let rows = table.r.len();
            let last = *table.r.last().unwrap();
            let (t0, t1) = (Arc::clone(&table), Arc::clone(&table));
            Ok(InitialData {
                params,
                u0: Arc::new(move |r| t0.eval(r, 0)),
                u1: Arc::new(move |r| t1.eval(r, 1)),
                support: Some(last),
                descriptor: Descriptor::File {
                    path: path.display().to_string(),
                    rows,
                },
            })
        }
    }
}

/// Tabulated `(u0, u1)`, linear in between, constant below the first radius and zero beyond the last.
pub struct Table {
    r: Vec<f64>,
    cols: [Vec<f64>; 2],
}

impl Table {
    fn eval(&self, r: f64, k: usize) -> f64 {
        let (x, y) = (&self.r, &self.cols[k]);
        if r <= x[0] {
            return y[0];
        }
        if r > x[x.len() - 1] {
            return 0.0;
        }
        let i = x.partition_point(|&v| v <= r).saturating_sub(1).min(x.len() - 2);
        let th = (r - x[i]) / (x[i + 1] - x[i]);
        y[i] * (1.0 - th) + y[i + 1] * th
    }
}

fn read_table(path: &std::path::Path) -> Result<Table, CliError> {
    let bad = |msg: String| CliError::Invalid(format!("{}: {msg}", path.display()));
    let mut rd = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name).ok_or_else(|| bad(format!("missing column {name}")));
    let (ir, i0, i1) = (col("r")?, col("u0")?, col("u1")?);
    let mut t = Table {
        r: Vec::new(),
        cols: [Vec::new(), Vec::new()],
    };
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let get = |i: usize| -> Result<f64, CliError> {
            let v: f64 = rec
                .get(i)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| bad(format!("row {}: not a number", line + 2)))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(format!("row {}: non-finite value", line + 2)))
            }
        };
        t.r.push(get(ir)?);
        t.cols[0].push(get(i0)?);
        t.cols[1].push(get(i1)?);
    }
    if t.r.len() < 2 {
        return Err(bad("need at least two rows".into()));
    }
    if !(t.r[0] > 0.0) || t.r.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(bad("radii must be positive and strictly increasing".into()));
    }
    Ok(t)
}
