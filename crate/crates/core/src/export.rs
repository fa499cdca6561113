//! CSV and JSON artifacts.
//!
//! Every CSV has a header row. Floats are written in shortest round-trip
//! form, so reading a file back reproduces the stored values bitwise.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::ChannelReport;
use crate::error::{Error, Result};
use crate::profile::ProfileSolution;
use crate::stationary::StationaryProfile;
use crate::wave::{Snapshot, Trajectory, WaveConfig};

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

fn write_rows<P: AsRef<Path>>(path: P, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<P: AsRef<Path>, T: Serialize>(path: P, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Sidecar written next to `profile.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSidecar {
    pub a: f64,
    pub p: f64,
    pub zeta: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub f1: f64,
    #[serde(rename = "N_extrema")]
    pub n_extrema: usize,
    pub delta: f64,
}

impl From<&ProfileSolution> for ProfileSidecar {
    fn from(s: &ProfileSolution) -> Self {
        Self {
            a: s.a,
            p: s.params.p,
            zeta: s.params.zeta.sign(),
            g: s.g_limit,
            f1: s.f1,
            n_extrema: s.n_extrema,
            delta: s.delta,
        }
    }
}

/// Writes `x, f, f_prime` rows and the JSON sidecar.
pub fn write_profile(csv_path: &Path, json_path: &Path, sol: &ProfileSolution) -> Result<()> {
    let x = sol.x_nodes.nodes();
    write_rows(
        csv_path,
        &["x", "f", "f_prime"],
        (0..x.len()).map(|i| vec![x[i], sol.f[i], sol.f_prime[i]]),
    )?;
    write_json(json_path, &ProfileSidecar::from(sol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarySidecar {
    pub p: f64,
    pub zeta: f64,
    #[serde(rename = "R_inf")]
    pub r_inf: f64,
    #[serde(rename = "R_minus_lo")]
    pub r_minus_lo: Option<f64>,
    #[serde(rename = "R_minus_hi")]
    pub r_minus_hi: Option<f64>,
}

/// Writes `r, z, z_prime, U` rows and the JSON sidecar.
pub fn write_stationary(csv_path: &Path, json_path: &Path, prof: &StationaryProfile) -> Result<()> {
    let r = prof.r_nodes.nodes();
    write_rows(
        csv_path,
        &["r", "z", "z_prime", "U"],
        (0..r.len()).map(|i| vec![r[i], prof.z[i], prof.z_prime[i], prof.z[i] / r[i]]),
    )?;
    write_json(
        json_path,
        &StationarySidecar {
            p: prof.params.p,
            zeta: prof.params.zeta.sign(),
            r_inf: prof.r_inf,
            r_minus_lo: prof.r_minus.map(|b| b.lo),
            r_minus_hi: prof.r_minus.map(|b| b.hi),
        },
    )
}

/// Writes `r, w, u, w_r, w_t` rows for one snapshot.
pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    let u = snap.u();
    let w_r = snap.w_r();
    write_rows(
        path,
        &["r", "w", "u", "w_r", "w_t"],
        (0..snap.w.len()).map(|j| vec![snap.r(j), snap.w[j], u[j], w_r[j], snap.w_t[j]]),
    )
}

/// Reads `w` and `w_t` back from a snapshot CSV; `dr` comes from the first two rows.
pub fn read_snapshot(path: &Path, t: f64, r_clean: f64) -> Result<Snapshot> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = rd.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("{}: missing column {name}", path.display())))
    };
    let (ir, iw, it) = (col("r")?, col("w")?, col("w_t")?);
    let (mut r, mut w, mut w_t) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let get = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| Error::Format("short row".into()))?
                .parse::<f64>()
                .map_err(|e| Error::Format(e.to_string()))
        };
        r.push(get(ir)?);
        w.push(get(iw)?);
        w_t.push(get(it)?);
    }
    if r.len() < 3 {
        return Err(Error::Format(format!("{}: too few rows", path.display())));
    }
    let dr = r[1] - r[0];
    let mut snap = Snapshot::from_fields(t, dr, w, w_t)?;
    snap.r_clean = r_clean;
    Ok(snap)
}

/// Index file of a trajectory directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryIndex {
    pub cfg: WaveConfig,
    pub record_every: usize,
    pub times: Vec<f64>,
    pub steps: Vec<usize>,
    pub r_clean: Vec<f64>,
    pub files: Vec<String>,
}

pub fn snapshot_file_name(k: usize) -> String {
    format!("{k:04}.csv")
}

/// Writes `NNNN.csv` per snapshot and `index.json` into `dir`; returns the written file names.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let name = snapshot_file_name(k);
        write_snapshot(&dir.join(&name), snap)?;
        files.push(name);
    }
    let index = TrajectoryIndex {
        cfg: traj.cfg,
        record_every: traj.record_every,
        times: traj.times(),
        steps: traj.snapshots.iter().map(|s| s.n).collect(),
        r_clean: traj.snapshots.iter().map(|s| s.r_clean).collect(),
        files: files.clone(),
    };
    write_json(dir.join("index.json"), &index)?;
    files.push("index.json".into());
    Ok(files)
}

pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(dir.join("index.json"))?;
    let index: TrajectoryIndex = serde_json::from_str(&text)?;
    let snapshots = index
        .files
        .iter()
        .zip(index.times.iter().zip(&index.r_clean))
        .zip(&index.steps)
        .map(|((f, (&t, &rc)), &n)| {
            let mut s = read_snapshot(&dir.join(f), t, rc)?;
            s.n = n;
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        cfg: index.cfg,
        record_every: index.record_every,
        snapshots,
    })
}

/// Writes the report as JSON and its per-time rows as CSV (`t, E_ext, lambda, cos_angle`).
pub fn write_report(json_path: &Path, csv_path: &Path, rep: &ChannelReport) -> Result<()> {
    write_json(json_path, rep)?;
    write_rows(
        csv_path,
        &["t", "E_ext", "E_ext_total", "lambda", "cos_angle"],
        (0..rep.times.len()).map(|i| {
            vec![
                rep.times[i],
                rep.e_ext[i],
                rep.e_ext_total[i],
                rep.lambda_proj[i],
                rep.cos_angle[i].unwrap_or(f64::NAN),
            ]
        }),
    )
}
