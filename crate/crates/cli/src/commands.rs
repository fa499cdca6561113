//! Command implementations. Each validates its inputs, runs, and writes its artifacts plus `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nonrad_core::diagnostics::{decay_report_with, exterior_energy_with_tail, projection_onto_generator, DecayOptions};
use nonrad_core::export::{self, snapshot_file_name, TrajectoryIndex};
use nonrad_core::profile::{find_bounded_profiles, solve_profile, ProfileSettings, ShootSettings};
use nonrad_core::stationary::{evaluate_rescaled, StationaryConfig};
use nonrad_core::wave::{evolve, evolve_with, make_initial_state, Snapshot, WaveConfig};
use nonrad_core::{ModelParams, Zeta};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::*;
use crate::data::{self, InitialData};
use crate::error::CliError;
use crate::manifest;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn check(e: nonrad_core::Result<()>) -> Result<(), CliError> {
    e.map_err(|e| invalid(e.to_string()))
}

pub fn default_out(name: &str) -> PathBuf {
    let root = std::env::var_os("NONRAD_OUT_ROOT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"));
    root.join(name)
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| invalid(format!("cannot create output directory {}: {e}", dir.display())))?;
    let md = fs::metadata(dir)?;
    if md.permissions().readonly() {
        return Err(invalid(format!("output directory {} is not writable", dir.display())));
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let name = cli.command.name();
    match cli.command {
        Command::Profile(c) => profile(&c, &cli.out.unwrap_or_else(|| default_out(name)), started),
        Command::Shoot(c) => shoot(&c, &cli.out.unwrap_or_else(|| default_out(name)), started),
        Command::Stationary(c) => stationary(&c, &cli.out.unwrap_or_else(|| default_out(name)), started),
        Command::Simulate(c) => simulate(&c, &cli.out.unwrap_or_else(|| default_out(name)), started),
        Command::Diagnose(c) => {
            let out = cli.out.unwrap_or_else(|| c.run.join("diagnose"));
            diagnose(&c, &out, started)
        }
        Command::Sweep(c) => sweep(&c, &cli.out.unwrap_or_else(|| default_out(name)), started),
    }
}

fn profile_settings(s: &ProfileSolverArgs) -> Result<ProfileSettings, CliError> {
    let settings = ProfileSettings {
        rtol: s.rtol,
        atol: s.atol,
        delta: s.delta,
        h_max: s.h_max,
        max_nodes: s.max_nodes,
    };
    check(settings.validate())?;
    Ok(settings)
}

fn stationary_config(s: &StationarySolverArgs) -> Result<StationaryConfig, CliError> {
    let cfg = StationaryConfig {
        r_inf: s.r_inf,
        r_min: s.r_min,
        rtol: s.rtol,
        atol: s.atol,
        z_max: s.z_max,
        r_tol: s.r_tol,
        nodes_per_unit: s.nodes_per_unit,
        ..StationaryConfig::default()
    };
    check(cfg.validate())?;
    Ok(cfg)
}

fn profile(cmd: &ProfileCmd, out: &Path, started: Instant) -> Result<(), CliError> {
    let params = data::params(&cmd.model, Zeta::Defocusing)?;
    let settings = profile_settings(&cmd.solver)?;
    if !cmd.a.is_finite() {
        return Err(invalid(format!("--a must be finite, got {}", cmd.a)));
    }
    prepare_dir(out)?;
    let sol = solve_profile(cmd.a, &params, &settings)?;
    export::write_profile(&out.join("profile.csv"), &out.join("profile.json"), &sol)?;
    println!("a = {} G = {:e} f1 = {} N_extrema = {}", sol.a, sol.g_limit, sol.f1, sol.n_extrema);
    manifest::write(out, "profile", cmd, started, &["profile.csv".into(), "profile.json".into()])
}

fn parse_pair(s: &str, flag: &str) -> Result<(f64, f64), CliError> {
    let bad = || invalid(format!("--{flag} expects lo:hi, got {s:?}"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(bad());
    }
    Ok((lo, hi))
}

#[derive(Serialize)]
struct RootsFile {
    p: f64,
    zeta: f64,
    a_lo: f64,
    a_hi: f64,
    scan: usize,
    roots: Vec<nonrad_core::profile::BoundedProfile>,
}

fn shoot(cmd: &ShootCmd, out: &Path, started: Instant) -> Result<(), CliError> {
    let params = data::params(&cmd.model, Zeta::Defocusing)?;
    let settings = profile_settings(&cmd.solver)?;
    let (mut lo, hi) = parse_pair(&cmd.a_range, "a-range")?;
    if cmd.scan < 2 {
        return Err(invalid("--scan must be at least 2"));
    }
    if lo == 0.0 {
        lo = hi / cmd.scan as f64;
    }
    if !(lo > 0.0) {
        return Err(invalid(format!("--a-range must lie in a > 0, got {}", cmd.a_range)));
    }
    if let Some(g) = cmd.g_tol {
        if !(g > 0.0 && g.is_finite()) {
            return Err(invalid(format!("--g-tol must be positive, got {g}")));
        }
    }
    prepare_dir(out)?;
    let shoot = ShootSettings {
        g_tol: cmd.g_tol,
        ..ShootSettings::default()
    };
    let roots = find_bounded_profiles(&params, lo, hi, cmd.scan, &settings, &shoot)?;
    for r in &roots {
        println!("a = {} |G| = {:e}", r.a, r.abs_g);
    }
    let file = RootsFile {
        p: params.p,
        zeta: params.zeta.sign(),
        a_lo: lo,
        a_hi: hi,
        scan: cmd.scan,
        roots,
    };
    export::write_json(out.join("roots.json"), &file)?;
    manifest::write(out, "shoot", cmd, started, &["roots.json".into()])
}

fn stationary(cmd: &StationaryCmd, out: &Path, started: Instant) -> Result<(), CliError> {
    let params = data::params(&cmd.model, Zeta::Focusing)?;
    let cfg = stationary_config(&cmd.solver)?;
    prepare_dir(out)?;
    let prof = nonrad_core::stationary::solve_stationary(params.zeta, &params, &cfg)?;
    export::write_stationary(&out.join("stationary.csv"), &out.join("stationary.json"), &prof)?;
    match prof.r_minus {
        Some(b) => println!("R_minus in [{}, {}]", b.lo, b.hi),
        None => println!("global on [{}, {}]", cfg.r_min, cfg.r_inf),
    }
    manifest::write(out, "stationary", cmd, started, &["stationary.csv".into(), "stationary.json".into()])
}

/// Number of steps between snapshots when `every` is a multiple of `dt`.
fn record_stride(every: f64, dt: f64) -> Result<usize, CliError> {
    if !(every > 0.0 && every.is_finite()) {
        return Err(invalid(format!("--every must be positive, got {every}")));
    }
    let k = (every / dt).round();
    if k < 1.0 || ((k * dt - every) / every).abs() > 1e-9 {
        return Err(invalid(format!("--every = {every} is not a multiple of the time step {dt}")));
    }
    Ok(k as usize)
}

fn parse_r_max(s: &str) -> Result<Option<f64>, CliError> {
    if s.trim() == "auto" {
        return Ok(None);
    }
    let v: f64 = s.trim().parse().map_err(|_| invalid(format!("--r-max expects a number or auto, got {s:?}")))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("--r-max must be positive, got {v}")));
    }
    Ok(Some(v))
}

/// Grid extent that keeps the outgoing front of the data inside the clean region at time `t`.
fn auto_r_max(support: Option<f64>, r0: f64, t: f64) -> f64 {
    support.unwrap_or(0.0) + 2.0 * (t + r0) + 20.0
}

#[derive(Serialize)]
struct SimulateEcho<'a> {
    p: f64,
    zeta: f64,
    #[serde(rename = "R0")]
    r0: f64,
    dr: f64,
    lambda: f64,
    #[serde(rename = "T")]
    t: f64,
    r_max: f64,
    record_every: usize,
    data_descriptor: &'a data::Descriptor,
    args: &'a SimulateCmd,
}

struct Checked {
    cfg: WaveConfig,
    stride: usize,
}

fn check_pde(pde: &PdeArgs, params: ModelParams, support: Option<f64>) -> Result<Checked, CliError> {
    if !(pde.t > 0.0 && pde.t.is_finite()) {
        return Err(invalid(format!("--T must be positive, got {}", pde.t)));
    }
    let r_max = match parse_r_max(&pde.r_max)? {
        Some(v) => v,
        None => auto_r_max(support, pde.r0, pde.t),
    };
    let cfg = WaveConfig {
        params,
        r0: pde.r0,
        dr: pde.dr,
        lambda: pde.lambda,
        r_max,
        extension: nonrad_core::wave::InteriorExtension::Clamp,
    };
    check(cfg.validate())?;
    if r_max - pde.t - pde.dr <= pde.t + pde.r0 {
        return Err(invalid(format!(
            "--r-max = {r_max} leaves no clean exterior at T = {}; need r_max > 2T + R0 + dr",
            pde.t
        )));
    }
    let stride = record_stride(pde.every, cfg.dt())?;
    Ok(Checked { cfg, stride })
}

fn simulate(cmd: &SimulateCmd, out: &Path, started: Instant) -> Result<(), CliError> {
    // PDE settings first so no data numerics run on a bad grid.
    let zeta_default = data::default_zeta(cmd.data.data);
    let params = data::params(&cmd.model, zeta_default)?;
    let support_hint = match cmd.data.data {
        DataKind::Bump => match (cmd.data.center, cmd.data.width) {
            (Some(c), Some(w)) => Some(c + w),
            _ => None,
        },
        _ => None,
    };
    check_pde(&cmd.pde, params, support_hint)?;
    let init = data::prepare(&cmd.model, &cmd.data, cmd.pde.r0)?;
    let Checked { cfg, stride } = check_pde(&cmd.pde, init.params, init.support)?;
    prepare_dir(out)?;
    let dir = out.join("trajectory");
    fs::create_dir_all(&dir)?;

    let InitialData { u0, u1, descriptor, .. } = init;
    let mut state = make_initial_state(|r| u0(r), |r| u1(r), &cfg)?;
    let mut index = TrajectoryIndex {
        cfg,
        record_every: stride,
        times: Vec::new(),
        steps: Vec::new(),
        r_clean: Vec::new(),
        files: Vec::new(),
    };
    evolve_with(&mut state, cmd.pde.t, stride, |snap| {
        let name = snapshot_file_name(index.files.len());
        export::write_snapshot(&dir.join(&name), &snap)?;
        index.times.push(snap.t);
        index.steps.push(snap.n);
        index.r_clean.push(snap.r_clean);
        index.files.push(name);
        Ok(())
    })?;
    export::write_json(dir.join("index.json"), &index)?;
    println!("{} snapshots up to t = {}", index.files.len(), index.times.last().copied().unwrap_or(0.0));

    let mut files: Vec<String> = index.files.iter().map(|f| format!("trajectory/{f}")).collect();
    files.push("trajectory/index.json".into());
    let echo = SimulateEcho {
        p: cfg.params.p,
        zeta: cfg.params.zeta.sign(),
        r0: cfg.r0,
        dr: cfg.dr,
        lambda: cfg.lambda,
        t: cmd.pde.t,
        r_max: cfg.r_max,
        record_every: stride,
        data_descriptor: &descriptor,
        args: cmd,
    };
    manifest::write(out, "simulate", &echo, started, &files)
}

fn diagnose(cmd: &DiagnoseCmd, out: &Path, started: Instant) -> Result<(), CliError> {
    let fit_window = cmd.fit_window.as_deref().map(|s| parse_pair(s, "fit-window")).transpose()?;
    if !(cmd.slack >= 0.0 && cmd.slack.is_finite()) {
        return Err(invalid(format!("--slack must be nonnegative, got {}", cmd.slack)));
    }
    let tdir = cmd.run.join("trajectory");
    if !tdir.join("index.json").is_file() {
        return Err(invalid(format!("{} has no trajectory/index.json", cmd.run.display())));
    }
    let traj = export::read_trajectory(&tdir).map_err(|e| invalid(e.to_string()))?;
    let r = cmd.r.unwrap_or(traj.cfg.r0);
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("--R must be positive, got {r}")));
    }
    prepare_dir(out)?;
    let opts = DecayOptions {
        fit_window,
        slack: cmd.slack,
    };
    let rep = decay_report_with(&traj, r, &opts)?;
    export::write_report(&out.join("report.json"), &out.join("report.csv"), &rep)?;
    let verdict = serde_json::to_value(rep.verdict)?;
    match rep.decay_fit {
        Some(f) => println!(
            "verdict {} (exponent {:.4}, target {:.4})",
            verdict.as_str().unwrap_or("?"),
            f.exponent,
            rep.target_exponent
        ),
        None => println!("verdict {}", verdict.as_str().unwrap_or("?")),
    }
    manifest::write(out, "diagnose", cmd, started, &["report.json".into(), "report.csv".into()])
}

/// Parses a comma list, `lin:lo:hi:n` or `log:lo:hi:n`.
pub fn parse_values(s: &str) -> Result<Vec<f64>, CliError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let bad = || invalid(format!("--values: cannot parse {s:?}"));
    let num = |t: &str| -> Result<f64, CliError> {
        let v: f64 = t.trim().parse().map_err(|_| bad())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    if let Some(rest) = s.strip_prefix("lin:").or_else(|| s.strip_prefix("log:")) {
        let log = s.starts_with("log:");
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if log && !(lo > 0.0 && hi > 0.0) {
            return Err(invalid("--values log: needs positive bounds"));
        }
        return Ok((0..n)
            .map(|k| {
                if n == 1 {
                    return lo;
                }
                let th = k as f64 / (n - 1) as f64;
                if k + 1 == n {
                    hi
                } else if log {
                    (lo.ln() + th * (hi.ln() - lo.ln())).exp()
                } else {
                    lo + th * (hi - lo)
                }
            })
            .collect());
    }
    s.split(',').map(num).collect()
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

struct SweepRow {
    cells: Vec<String>,
}

fn row_status(res: Result<Vec<String>, CliError>, width: usize) -> Vec<String> {
    match res {
        Ok(mut c) => {
            c.push("ok".into());
            c
        }
        Err(e) => {
            let mut c = vec![String::new(); width];
            c.push(e.to_string());
            c
        }
    }
}

const MAX_SAMPLED_NODES: usize = 1 << 22;

/// Samples `(r·u0, r·u1)` on `r_j = j·dr` from `r_lo` out; nodes below it stay zero.
fn sampled_snapshot(u0: &dyn Fn(f64) -> f64, u1: &dyn Fn(f64) -> f64, dr: f64, r_lo: f64, r_max: f64) -> Result<Snapshot, CliError> {
    let n = (r_max / dr).round() as usize + 1;
    let mut w = vec![0.0; n];
    let mut w_t = vec![0.0; n];
    for j in 1..n {
        let r = j as f64 * dr;
        if r >= r_lo {
            w[j] = r * u0(r);
            w_t[j] = r * u1(r);
            if !(w[j].is_finite() && w_t[j].is_finite()) {
                return Err(invalid(format!("data not finite at r = {r}")));
            }
        }
    }
    Ok(Snapshot::from_fields(0.0, dr, w, w_t)?)
}

fn sweep(cmd: &SweepCmd, out: &Path, started: Instant) -> Result<(), CliError> {
    let values = parse_values(&cmd.values)?;
    if let Some(j) = cmd.jobs {
        if j == 0 {
            return Err(invalid("--jobs must be at least 1"));
        }
    }
    if !(cmd.dr > 0.0 && cmd.dr.is_finite()) {
        return Err(invalid(format!("--dr must be positive, got {}", cmd.dr)));
    }
    if !(cmd.r0 > 0.0 && cmd.r0.is_finite()) {
        return Err(invalid(format!("--R0 must be positive, got {}", cmd.r0)));
    }
    let r_max_flag = parse_r_max(&cmd.r_max)?;
    let header: Vec<&str> = match cmd.over {
        SweepOver::A => vec!["a", "G", "f1", "N_extrema", "decay_exponent", "verdict"],
        SweepOver::C => vec!["C", "R", "R_minus", "lambda", "cos_angle"],
        SweepOver::R => vec!["R", "lambda", "cos_angle", "E_ext"],
    };
    let width = header.len();

    // Shared, validated inputs per sweep kind; per-row work shares nothing mutable.
    type RowFn<'a> = Box<dyn Fn(f64) -> Result<Vec<String>, CliError> + Send + Sync + 'a>;
    let row: RowFn = match cmd.over {
        SweepOver::A => {
            let zeta = data::parse_zeta(&cmd.model, Zeta::Defocusing)?;
            let params = data::params(&cmd.model, zeta)?;
            let settings = ProfileSettings::default();
            if let Some(t) = cmd.t {
                if params.zeta != Zeta::Defocusing {
                    return Err(invalid("--T in an a-sweep evolves self-similar data, which needs --zeta -1"));
                }
                let pde = PdeArgs {
                    r0: cmd.r0,
                    dr: cmd.dr,
                    lambda: 1.0,
                    t,
                    r_max: cmd.r_max.clone(),
                    every: 1.0,
                };
                check_pde(&pde, params, None)?;
            }
            let (t, r0, dr) = (cmd.t, cmd.r0, cmd.dr);
            Box::new(move |a: f64| {
                let sol = solve_profile(a, &params, &settings)?;
                let mut c = vec![a.to_string(), sol.g_limit.to_string(), sol.f1.to_string(), sol.n_extrema.to_string()];
                match t {
                    Some(t) => {
                        let r_max = r_max_flag.unwrap_or_else(|| auto_r_max(None, r0, t));
                        let cfg = WaveConfig::new(params, r0, dr, r_max)?;
                        let b = params.beta;
                        let mut st = make_initial_state(|_| 0.0, |r: f64| a * r.powf(-b - 1.0), &cfg)?;
                        let stride = record_stride(1.0, cfg.dt())?;
                        let traj = evolve(&mut st, t, stride)?;
                        let rep = decay_report_with(&traj, r0, &DecayOptions::default())?;
                        c.push(cell(rep.decay_fit.map(|f| f.exponent)));
                        c.push(serde_json::to_value(rep.verdict)?.as_str().unwrap_or("").to_string());
                    }
                    None => c.extend([String::new(), String::new()]),
                }
                Ok(c)
            })
        }
        SweepOver::C => {
            let r = cmd.r;
            if !(r > 0.0 && r.is_finite()) {
                return Err(invalid(format!("--R must be positive, got {r}")));
            }
            let params = data::params(&cmd.model, Zeta::Focusing)?;
            if let Some(m) = r_max_flag {
                if !(m > r + 4.0 * cmd.dr) {
                    return Err(invalid(format!("--r-max = {m} must exceed --R")));
                }
            }
            let prof = data::stationary_profile(&params)?;
            let dr = cmd.dr;
            Box::new(move |c: f64| {
                let p = params.p;
                let len = c.abs().powf((p - 1.0) / (p - 3.0));
                let r_minus = prof.r_minus.map(|b| b.hi * len);
                // auto extent scales with the profile length so rows on one scaling curve see the same window
                let r_max = match r_max_flag {
                    Some(m) => m,
                    None => (1000.0 * r.max(len)).min(r + MAX_SAMPLED_NODES as f64 * dr),
                };
                if let Some(rm) = r_minus {
                    if r - 2.0 * dr <= rm {
                        return Err(invalid(format!("R = {r} is within 2dr of the blow-up radius {rm}")));
                    }
                }
                let u0 = |x: f64| evaluate_rescaled(&prof, c, x).unwrap_or(f64::NAN);
                let snap = sampled_snapshot(&u0, &|_| 0.0, dr, r - 2.0 * dr, r_max)?;
                let (lambda, cos) = projection_onto_generator(&snap, r)?;
                Ok(vec![c.to_string(), r.to_string(), cell(r_minus), lambda.to_string(), cell(cos)])
            })
        }
        SweepOver::R => {
            let init = data::prepare(&cmd.model, &cmd.data, cmd.r0)?;
            let dr = cmd.dr;
            let max_r = values.iter().cloned().fold(0.0, f64::max);
            let r_max = r_max_flag.unwrap_or((100.0 * max_r).max(1000.0).max(init.support.unwrap_or(0.0) + 10.0));
            if values.iter().any(|&v| !(v > 0.0 && v + 4.0 * dr < r_max)) {
                return Err(invalid(format!("--values for an R-sweep must lie in (0, r_max = {r_max})")));
            }
            Box::new(move |r: f64| {
                let snap = sampled_snapshot(&*init.u0, &*init.u1, dr, (r - 2.0 * dr).max(dr), r_max)?;
                let (lambda, cos) = projection_onto_generator(&snap, r)?;
                let e = exterior_energy_with_tail(&snap, r)?;
                Ok(vec![r.to_string(), lambda.to_string(), cell(cos), e.to_string()])
            })
        }
    };

    prepare_dir(out)?;
    let compute = || -> Vec<SweepRow> {
        values
            .par_iter()
            .map(|&v| SweepRow {
                cells: row_status(row(v), width),
            })
            .collect()
    };
    let rows = match cmd.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| invalid(e.to_string()))?
            .install(compute),
        None => compute(),
    };
    let mut w = csv::Writer::from_path(out.join("sweep.csv")).map_err(|e| invalid(e.to_string()))?;
    let mut head: Vec<&str> = header.clone();
    head.push("status");
    w.write_record(&head).map_err(|e| invalid(e.to_string()))?;
    let failed = rows.iter().filter(|r| r.cells[width] != "ok").count();
    for (v, mut r) in values.iter().zip(rows) {
        // failed rows keep their parameter value
        if r.cells[0].is_empty() {
            r.cells[0] = v.to_string();
        }
        w.write_record(&r.cells).map_err(|e| invalid(e.to_string()))?;
    }
    w.flush()?;
    println!("{} rows{}", values.len(), if failed > 0 { format!(", {failed} failed") } else { String::new() });
    manifest::write(out, "sweep", cmd, started, &["sweep.csv".into()])
}
