mod common;

use common::{defocusing4, first_root, observed_order, self_similar_error, self_similar_state};
use nonrad_core::wave::{evolve_with, InteriorExtension};
use nonrad_core::{derive_params, evolve, make_initial_state, self_similar_field, Error, WaveConfig, WaveState, Zeta};
use proptest::prelude::*;

fn bump(r: f64, center: f64, width: f64) -> f64 {
    let x = (r - center) / width;
    if x.abs() < 1.0 {
        (1.0 - x * x).powi(4)
    } else {
        0.0
    }
}

#[test]
fn zero_data_stay_zero() {
    let cfg = WaveConfig::new(defocusing4(), 0.5, 1.0 / 64.0, 12.0).unwrap();
    let mut st = make_initial_state(|_| 0.0, |_| 0.0, &cfg).unwrap();
    let traj = evolve(&mut st, 5.0, 32).unwrap();
    for s in &traj.snapshots {
        assert!(s.w.iter().chain(&s.w_t).all(|v| *v == 0.0));
    }
}

#[test]
fn unit_courant_number_transports_exactly() {
    let dr = 1.0 / 64.0;
    // forcing region starts beyond the grid: homogeneous equation
    let cfg = WaveConfig::new(defocusing4(), 1e3, dr, 20.0).unwrap();
    let len = cfg.last_index() + 1;
    let phi = |r: f64| bump(r, 4.0, 1.0);
    let w0: Vec<f64> = (0..len).map(|j| phi(j as f64 * dr)).collect();
    let wm: Vec<f64> = (0..len).map(|j| phi(j as f64 * dr + dr)).collect();
    let mut st = WaveState::from_levels(&cfg, 0.0, wm, w0).unwrap();
    let traj = evolve(&mut st, 10.0, 64).unwrap();
    for s in &traj.snapshots {
        for j in 0..len {
            let exact = phi(j as f64 * dr - s.t);
            assert!((s.w[j] - exact).abs() <= 4.0 * f64::EPSILON, "t = {}, j = {j}", s.t);
        }
    }
}

#[test]
fn taylor_start_transport_is_second_order() {
    let err = |dr: f64| {
        // tiny amplitude: the forcing is ~1e-12 relative, far below the start error
        let cfg = WaveConfig::new(defocusing4(), 0.01, dr, 16.0).unwrap();
        // w = φ(r − t): u0 = φ/r, u1 = −φ'/r
        let h = 1e-6;
        let mut st = make_initial_state(
            |r| 1e-4 * bump(r, 4.0, 1.0) / r,
            move |r| -1e-4 * (bump(r + h, 4.0, 1.0) - bump(r - h, 4.0, 1.0)) / (2.0 * h * r),
            &cfg,
        )
        .unwrap();
        let traj = evolve(&mut st, 4.0, 1 << 20).unwrap();
        let s = traj.snapshots.last().unwrap();
        (0..s.w.len())
            .map(|j| (s.w[j] - 1e-4 * bump(s.r(j) - s.t, 4.0, 1.0)).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1.0 / 64.0), err(1.0 / 128.0));
    let order = observed_order(e1, e2);
    assert!(order > 1.8, "errors {e1:e}, {e2:e}, order {order}");
}

#[test]
fn interior_extension_does_not_reach_the_exterior() {
    let prof = first_root();
    let (a, beta) = (prof.a, prof.params.beta);
    let run = |ext: InteriorExtension| {
        let mut cfg = WaveConfig::new(prof.params, 0.5, 1.0 / 128.0, 12.0).unwrap();
        cfg.extension = ext;
        let mut st = make_initial_state(|r| 0.3 / (1.0 + r), move |r| a * r.powf(-beta - 1.0), &cfg).unwrap();
        evolve(&mut st, 4.0, 64).unwrap()
    };
    let (c, z) = (run(InteriorExtension::Clamp), run(InteriorExtension::Zero));
    let mut differs_inside = false;
    for (sc, sz) in c.snapshots.iter().zip(&z.snapshots) {
        for j in 0..sc.w.len() {
            if sc.r(j) > sc.t + 0.5 {
                assert_eq!(sc.w[j].to_bits(), sz.w[j].to_bits(), "t = {}, r = {}", sc.t, sc.r(j));
            } else if sc.w[j] != sz.w[j] {
                differs_inside = true;
            }
        }
    }
    assert!(differs_inside);
}

#[test]
fn zero_end_time_gives_the_input_state() {
    let mut st = self_similar_state(1.0 / 64.0, 0.5, 8.0);
    let w0 = st.w_curr.clone();
    let traj = evolve(&mut st, 0.0, 10).unwrap();
    assert_eq!(traj.snapshots.len(), 1);
    assert_eq!(traj.snapshots[0].w, w0);
    assert_eq!(traj.snapshots[0].t, 0.0);
    assert_eq!(st.w_curr, w0);
}

#[test]
fn records_on_cadence_and_at_the_end() {
    let mut st = self_similar_state(1.0 / 64.0, 0.5, 8.0);
    let traj = evolve(&mut st, 1.0, 20).unwrap();
    let steps: Vec<usize> = traj.snapshots.iter().map(|s| s.n).collect();
    assert_eq!(steps, vec![0, 20, 40, 60, 64]);
    assert!((st.t() - 1.0).abs() < 1e-15);
    assert!(evolve(&mut st, 1.0 + 1.0 / 200.0, 1).is_err());
}

#[test]
fn self_similar_field_initial_values() {
    let prof = first_root();
    for r in [0.1, 1.0, 7.5, 300.0] {
        let (u, u_t, _) = self_similar_field(prof, r, 0.0).unwrap();
        assert_eq!(u, 0.0);
        let expected = prof.a * r.powf(-prof.params.beta - 1.0);
        assert!((u_t - expected).abs() <= 4.0 * f64::EPSILON * expected);
    }
    assert!(matches!(
        self_similar_field(prof, 1.0, 1.0),
        Err(Error::OutsideLightCone { .. })
    ));
}

#[test]
fn self_similar_field_solves_the_equation() {
    let prof = first_root();
    let m = prof.params;
    let (r, t, h) = (2.0, 1.0, 1e-3);
    let u = |r: f64, t: f64| self_similar_field(prof, r, t).unwrap().0;
    let u_tt = (u(r, t + h) - 2.0 * u(r, t) + u(r, t - h)) / (h * h);
    let u_rr = (u(r + h, t) - 2.0 * u(r, t) + u(r - h, t)) / (h * h);
    let u_r = (u(r + h, t) - u(r - h, t)) / (2.0 * h);
    let (u0, _, u_r_exact) = self_similar_field(prof, r, t).unwrap();
    let res = u_tt - u_rr - 2.0 / r * u_r - m.zeta.sign() * m.signed_power(u0);
    assert!(res.abs() <= 1e-4, "residual {res:e}");
    assert!((u_r - u_r_exact).abs() <= 1e-6);
}

#[test]
fn self_similar_convergence_on_coarse_grids() {
    let errs: Vec<f64> = [6, 7, 8]
        .iter()
        .map(|k| {
            let mut st = self_similar_state(0.5f64.powi(*k), 0.5, 10.0);
            let traj = evolve(&mut st, 1.0, 1 << 20).unwrap();
            self_similar_error(traj.snapshots.last().unwrap(), 0.5)
        })
        .collect();
    for w in errs.windows(2) {
        let q = observed_order(w[0], w[1]);
        assert!((1.9..=2.1).contains(&q), "errors {errs:?}");
    }
}

#[test]
fn reduced_courant_number_is_stable_and_accurate() {
    let prof = first_root();
    let mut cfg = WaveConfig::new(prof.params, 0.5, 1.0 / 128.0, 10.0).unwrap();
    cfg.lambda = 0.5;
    let (a, beta) = (prof.a, prof.params.beta);
    let mut st = make_initial_state(|_| 0.0, move |r| a * r.powf(-beta - 1.0), &cfg).unwrap();
    let mut worst = 0.0f64;
    evolve_with(&mut st, 2.0, 64, |s| {
        worst = worst.max(self_similar_error(&s, 0.5));
        Ok(())
    })
    .unwrap();
    assert!(worst <= 1e-4, "{worst:e}");
}

#[test]
fn blow_up_is_reported_and_state_kept_finite() {
    let m = derive_params(4.0, Zeta::Focusing).unwrap();
    let cfg = WaveConfig::new(m, 0.1, 1.0 / 32.0, 20.0).unwrap();
    let mut st = make_initial_state(|r| 50.0 * bump(r, 5.0, 1.0), |_| 0.0, &cfg).unwrap();
    let err = evolve(&mut st, 10.0, 8).unwrap_err();
    assert!(matches!(err, Error::NonFinite { .. }));
    assert!(err.is_numerical());
    assert!(st.w_curr.iter().chain(&st.w_prev).all(|v| v.is_finite()));
}

#[test]
fn invalid_configs_are_rejected() {
    let m = defocusing4();
    assert!(WaveConfig::new(m, 0.0, 0.01, 5.0).is_err());
    assert!(WaveConfig::new(m, 0.5, 0.0, 5.0).is_err());
    assert!(WaveConfig::new(m, 0.5, 0.01, 0.02).is_err());
    let mut cfg = WaveConfig::new(m, 0.5, 0.01, 5.0).unwrap();
    cfg.lambda = 1.5;
    assert!(cfg.validate().is_err());
    assert!(make_initial_state(|_| f64::NAN, |_| 0.0, &WaveConfig::new(m, 0.5, 0.01, 5.0).unwrap()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn nothing_travels_faster_than_light(
        support in 1.0f64..4.0,
        amp in -0.5f64..0.5,
        focusing: bool,
        t_end in 0.5f64..4.0,
    ) {
        let z = if focusing { Zeta::Focusing } else { Zeta::Defocusing };
        let dr = 1.0 / 64.0;
        let cfg = WaveConfig::new(derive_params(4.0, z).unwrap(), 0.25, dr, 12.0).unwrap();
        let c = 0.5 * support;
        let mut st = make_initial_state(
            move |r| amp * bump(r, c, c) / r.max(1e-3),
            move |r| amp * bump(r, c, 0.5 * c),
            &cfg,
        )
        .unwrap();
        let t_end = (t_end / dr).round() * dr;
        let traj = evolve(&mut st, t_end, 16).unwrap();
        for s in &traj.snapshots {
            for j in 0..s.w.len() {
                if s.r(j) > support + s.t + dr {
                    prop_assert_eq!(s.w[j], 0.0);
                }
            }
        }
    }
}
