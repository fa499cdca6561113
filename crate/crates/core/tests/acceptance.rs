//! Acceptance checks at p = 4. Run with `cargo test --test acceptance`;
//! prints one PASS/FAIL line per criterion and exits non-zero on any failure.

mod common;

use std::time::Instant;

use common::{first_root, observed_order, self_similar_error, self_similar_state};
use nonrad_core::diagnostics::{assemble_report, channel_sample, energy_identity_terms, DecayOptions};
use nonrad_core::grid::Grid1D;
use nonrad_core::profile::{conservation_report, count_extrema, solve_profile};
use nonrad_core::stationary::{check_ladder_bounds, solve_stationary, StationaryConfig};
use nonrad_core::wave::evolve_with;
use nonrad_core::{
    characteristic_residual, decay_report, derive_params, evolve, find_bounded_profiles, fit_power_law,
    make_initial_state, projection_onto_generator, ProfileSettings, ShootSettings, Snapshot, Trajectory,
    WaveConfig, Zeta,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const R0: f64 = 0.5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Worst `residual/total` of the energy identity over a set of snapshots, windows `[t + R0, r_clean]`.
fn identity_ratio<'a>(snaps: impl IntoIterator<Item = &'a Snapshot>) -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut n = 0;
    for s in snaps {
        worst = worst.max(snapshot_identity_ratio(s));
        n += 1;
    }
    (worst, n)
}

fn snapshot_identity_ratio(s: &Snapshot) -> f64 {
    let (res, total) = energy_identity_terms(s, s.t + R0).unwrap();
    if total > 0.0 {
        res / total
    } else {
        res
    }
}

struct Shared {
    c1_runs: Vec<Trajectory>,
    c2_identity: (f64, usize),
    c9_run: Option<Trajectory>,
    c10_run: Option<Trajectory>,
}

fn criterion_1(sh: &mut Shared) -> Outcome {
    let mut errs = Vec::new();
    for k in 8..=11 {
        let dr = 0.5f64.powi(k);
        let mut st = self_similar_state(dr, R0, 20.0);
        let traj = evolve(&mut st, 1.0, 64).unwrap();
        errs.push(self_similar_error(traj.snapshots.last().unwrap(), R0));
        sh.c1_runs.push(traj);
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| observed_order(w[0], w[1])).collect();
    let e10 = errs[2];
    let pass = e10 <= 1e-3 && orders.iter().all(|q| (1.9..=2.1).contains(q));
    check(
        pass,
        format!(
            "a* = {:.10}, sup error at dr=2^-10: {:.3e} (<= 1e-3); orders over 2^-8..2^-11: {:.3?} (in [1.9, 2.1])",
            first_root().a,
            e10,
            orders
        ),
    )
}

fn criterion_2(sh: &mut Shared) -> Outcome {
    // r_max large enough that the fitted far-field tail of the energy is unbiased
    let dr = 0.5f64.powi(8);
    let mut st = self_similar_state(dr, R0, 4700.0);
    let mut rows = Vec::new();
    let mut worst_identity = 0.0f64;
    let mut count = 0;
    let mut last = None;
    evolve_with(&mut st, 50.0, 512, |s| {
        rows.push(channel_sample(&s, R0)?);
        worst_identity = worst_identity.max(snapshot_identity_ratio(&s));
        count += 1;
        last = Some(s);
        Ok(())
    })
    .unwrap();
    sh.c2_identity = (worst_identity, count);
    let params = first_root().params;
    let far = last.and_then(|s| nonrad_core::diagnostics::far_field(&s, &params).ok());
    let opts = DecayOptions {
        fit_window: Some((10.0, 50.0)),
        ..Default::default()
    };
    let rep = assemble_report(&rows, far, &params, R0, &opts).unwrap();
    let slope = rep.decay_fit.unwrap().exponent;
    let truncated: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.t >= 10.0)
        .map(|r| (r.t, r.e_ext))
        .collect();
    let truncated_slope = fit_power_law(&truncated).unwrap().exponent;
    let bound = -1.0 / 3.0 + 0.05;
    check(
        slope <= bound,
        format!(
            "slope of E_ext(t; 0.5) with tail over [10, 50]: {slope:.4} (<= {bound:.4}); truncated at r_clean: {truncated_slope:.4}; verdict {:?}",
            rep.verdict
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = ProfileSettings::default();
    let mut worst_upper = 0.0f64;
    let mut worst_lower = 0.0f64;
    for _ in 0..50 {
        let p = rng.gen_range(3.01..4.99);
        let a = 10f64.powf(rng.gen_range(-1.0..2.0));
        let m = derive_params(p, Zeta::Defocusing).unwrap();
        let sol = solve_profile(a, &m, &s).unwrap();
        let (viol, margin) = conservation_report(&sol);
        worst_upper = worst_upper.max(viol / (a * a));
        worst_lower = worst_lower.min(margin / (a * a));
    }
    check(
        worst_upper <= 1e-7 && worst_lower >= -1e-6,
        format!("50 pairs: max upper violation/a^2 = {worst_upper:.3e} (<= 1e-7), min lower margin/a^2 = {worst_lower:.3e} (>= -1e-6)"),
    )
}

fn criterion_4() -> Outcome {
    let m = derive_params(4.0, Zeta::Defocusing).unwrap();
    let s = ProfileSettings::default();
    let roots = find_bounded_profiles(&m, 0.1, 50.0, 500, &s, &ShootSettings::default()).unwrap();
    let mut ok = roots.len() >= 2;
    let mut parts = Vec::new();
    for r in &roots {
        let sol = solve_profile(r.a, &m, &s).unwrap();
        let sup = sol.f_prime.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let cap = 10.0 * (r.a + r.a.powi(4));
        ok &= r.abs_g < 1e-6 && sup.is_finite() && sup <= cap;
        parts.push(format!("a={:.6} |G|={:.1e} max|f'|={:.3}", r.a, r.abs_g, sup));
    }
    check(ok, format!("{} roots: {}", roots.len(), parts.join("; ")))
}

fn criterion_5() -> Outcome {
    let m = derive_params(4.0, Zeta::Defocusing).unwrap();
    let s = ProfileSettings::default();
    let amps = [10.0, 30.0, 100.0, 300.0, 1000.0];
    let counts: Vec<usize> = amps
        .iter()
        .map(|&a| count_extrema(&solve_profile(a, &m, &s).unwrap()))
        .collect();
    let monotone = counts.windows(2).all(|w| w[1] >= w[0]);
    let pts: Vec<(f64, f64)> = amps.iter().zip(&counts).map(|(&a, &n)| (a, n as f64)).collect();
    let exponent = fit_power_law(&pts).map(|f| f.exponent).unwrap_or(f64::NAN);
    check(
        monotone && exponent >= 0.45,
        format!("N(a) = {counts:?}, nondecreasing: {monotone}, growth exponent {exponent:.3} (>= 0.45)"),
    )
}

fn criterion_6() -> Outcome {
    let cfg = StationaryConfig::default();
    let mf = derive_params(4.0, Zeta::Focusing).unwrap();
    let foc = solve_stationary(Zeta::Focusing, &mf, &cfg).unwrap();
    let (mut max_r, mut k) = (0.0f64, 0.0f64);
    for (r, z) in foc.r_nodes.nodes().iter().zip(&foc.z) {
        if *r >= 10.0 {
            max_r = max_r.max(r * (z - 1.0).abs());
            k = k.max((z - 1.0).abs() * r.powf(mf.p - 3.0));
        }
    }
    let md = derive_params(4.0, Zeta::Defocusing).unwrap();
    let def = solve_stationary(Zeta::Defocusing, &md, &cfg).unwrap();
    let br = def.r_minus.unwrap();
    let bound = md.blow_up_radius_bound();
    let margins = check_ladder_bounds(&def, 3).unwrap();
    let worst = margins.iter().map(|m| m.min_relative_margin).fold(f64::INFINITY, f64::min);
    let pass = max_r.is_finite() && k.is_finite() && br.relative_width() <= 1e-8 && br.lo >= bound && worst >= -1e-9;
    check(
        pass,
        format!(
            "max r|z-1| on [10, 1e4] = {max_r:.6}, K = {k:.6}; R- in [{:.10}, {:.10}] width {:.1e} (<= 1e-8), bound 4^-6 = {bound:.3e}; ladder k<=3 min margin/z = {worst:.3e} (>= -1e-9)",
            br.lo,
            br.hi,
            br.relative_width()
        ),
    )
}

fn criterion_7() -> Outcome {
    let m = derive_params(4.0, Zeta::Focusing).unwrap();
    let grid = Grid1D::logarithmic(1e-3, 1e3, 1000, 0.0).unwrap();
    let b = m.beta;
    let worst = grid
        .nodes()
        .iter()
        .map(|&r| {
            let z = m.c_p * r.powf(1.0 - b);
            let z_rr = -m.c_p * b * (1.0 - b) * r.powf(-1.0 - b);
            let rhs = -z.powf(m.p) / r.powf(m.p - 1.0);
            (z_rr - rhs).abs() / rhs.abs()
        })
        .fold(0.0, f64::max);
    check(worst <= 1e-12, format!("max relative residual on 1000 nodes: {worst:.2e} (<= 1e-12)"))
}

fn criterion_8() -> Outcome {
    let m = derive_params(4.0, Zeta::Focusing).unwrap();
    let dr = 1.0 / 64.0;
    let n = (2e4 / dr) as usize + 1;
    let w: Vec<f64> = (0..n).map(|j| m.c_p * (j as f64 * dr).powf(1.0 - m.beta)).collect();
    let snap = Snapshot::from_fields(0.0, dr, w, vec![0.0; n]).unwrap();
    let target = m.singular_angle_cosine();
    let cos: Vec<f64> = [1.0, 10.0, 100.0]
        .iter()
        .map(|&r| projection_onto_generator(&snap, r).unwrap().1.unwrap())
        .collect();
    let err = cos.iter().map(|c| (c - target).abs()).fold(0.0, f64::max);
    let spread = cos.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - cos.iter().cloned().fold(f64::INFINITY, f64::min);
    check(
        err <= 1e-3 && spread <= 1e-3,
        format!("cos at R = 1, 10, 100: {cos:.7?}; target {target:.7}; max error {err:.2e}, spread {spread:.2e} (<= 1e-3)"),
    )
}

fn criterion_9(sh: &mut Shared) -> Outcome {
    let m = derive_params(4.0, Zeta::Focusing).unwrap();
    let prof = solve_stationary(Zeta::Focusing, &m, &StationaryConfig::default()).unwrap();
    let dr = 0.5f64.powi(9);
    let cfg = WaveConfig::new(m, R0, dr, 200.0).unwrap();
    let u_plus = |r: f64| prof.eval_u(r).unwrap().0;
    let mut st = make_initial_state(u_plus, |_| 0.0, &cfg).unwrap();
    let traj = evolve(&mut st, 10.0, 512).unwrap();
    let mut err = 0.0f64;
    for s in &traj.snapshots {
        let u = s.u();
        for j in 1..=s.clean_index() {
            if s.r(j) > s.t + R0 {
                err = err.max((u[j] - u_plus(s.r(j))).abs());
            }
        }
    }
    // scale: sup of |U+| over the exterior r >= R0
    let scale = u_plus(R0).abs();
    let cap = 10.0 * dr * dr * scale;
    let rep = decay_report(&traj, R0).unwrap();
    let far = rep.far_field.unwrap();
    let c_err = (far.c - 1.0).abs();
    let resid = far.residual_exponent.unwrap_or(f64::NAN);
    sh.c9_run = Some(traj);
    check(
        err <= cap && c_err <= 1e-3,
        format!(
            "sup |u - U+| over t in [0, 10]: {err:.3e} (<= 10 dr^2 scale = {cap:.3e}); far-field C = {:.6} (error {c_err:.1e} <= 1e-3); |u - C/r| exponent {resid:.3}; verdict {:?}",
            far.c, rep.verdict
        ),
    )
}

fn criterion_10(sh: &mut Shared) -> Outcome {
    let prof = first_root();
    let dr = 0.5f64.powi(10);
    let mut st = self_similar_state(dr, R0, 44.0);
    let traj = evolve(&mut st, 20.0, 64).unwrap();
    let res = characteristic_residual(&traj, 3.0, 0.0, 20.0).unwrap();
    let m = prof.params;
    let eps = prof.f.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let pb = m.p * m.beta;
    let (t_end, r0): (f64, f64) = (20.0, 3.0);
    let tail = 2.0 * eps.powf(m.p) * (t_end + r0).powf(2.0 - pb) / (pb - 2.0);
    sh.c10_run = Some(traj);
    check(
        res <= 1e-3 + tail,
        format!("residual at (3, 0), T = 20: {res:.3e} (<= 1e-3 + tail bound {tail:.3e})"),
    )
}

fn criterion_11(sh: &Shared) -> Outcome {
    let (r1, n1) = identity_ratio(sh.c1_runs.iter().flat_map(|t| t.snapshots.iter()));
    let (r10, n10) = identity_ratio(sh.c10_run.iter().flat_map(|t| t.snapshots.iter()));
    let (r2, n2) = sh.c2_identity;
    let (r9, n9) = identity_ratio(sh.c9_run.iter().flat_map(|t| t.snapshots.iter()));
    let worst = r1.max(r10).max(r2).max(r9);
    let enough = n1 > 0 && n9 > 0;
    check(
        enough && worst <= 1e-6,
        format!(
            "residual/energy: self-similar runs {:.2e} ({} snapshots at T=1, {:.2e} over {} at T=20, {:.2e} over {} at T=50); static run {:.2e} ({} snapshots); limit 1e-6",
            r1, n1, r10, n10, r2, n2, r9, n9
        ),
    )
}

fn main() {
    let mut shared = Shared {
        c1_runs: Vec::new(),
        c2_identity: (0.0, 0),
        c9_run: None,
        c10_run: None,
    };
    // runtime caps in seconds
    let mut results: Vec<(usize, f64, Option<f64>, Outcome)> = Vec::new();
    let mut run = |id: usize, cap: Option<f64>, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let out = f();
        let secs = t0.elapsed().as_secs_f64();
        let within = cap.map_or(true, |c| secs <= c);
        let pass = out.pass && within;
        println!(
            "criterion {id:>2}: {} | {} | {secs:.1} s{}",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            cap.map(|c| format!(" (cap {c} s)")).unwrap_or_default()
        );
        results.push((id, secs, cap, Outcome { pass, detail: out.detail }));
    };
    // warm the shared root outside the timed sections
    let _ = first_root();
    run(1, Some(120.0), &mut || criterion_1(&mut shared));
    run(2, Some(300.0), &mut || criterion_2(&mut shared));
    run(3, Some(60.0), &mut criterion_3);
    run(4, Some(180.0), &mut criterion_4);
    run(5, Some(300.0), &mut criterion_5);
    run(6, Some(60.0), &mut criterion_6);
    run(7, Some(1.0), &mut criterion_7);
    run(8, Some(10.0), &mut criterion_8);
    run(9, Some(120.0), &mut || criterion_9(&mut shared));
    run(10, Some(60.0), &mut || criterion_10(&mut shared));
    run(11, None, &mut || criterion_11(&shared));
    let failed: Vec<usize> = results.iter().filter(|r| !r.3.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
