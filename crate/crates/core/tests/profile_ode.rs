use nonrad_core::ode::{integrate, Flow, RkSettings};
use nonrad_core::profile::{
    conservation_report, count_extrema, endpoint_limit, extrema_locations, find_bounded_profiles,
    solve_profile, ProfileSettings, ShootSettings,
};
use nonrad_core::{derive_params, ModelParams, Zeta};
use proptest::prelude::*;

fn p4() -> ModelParams {
    derive_params(4.0, Zeta::Defocusing).unwrap()
}

/// Fixed-step RK4 in `τ` with `x = 1 − (1 − τ)³`; for β = 2/3 both
/// right-hand sides of `(f, (1−x²)^β f')` are smooth up to `x = 1`.
fn rk4_endpoint(a: f64, delta: f64, steps: usize) -> f64 {
    let m = p4();
    let rhs = |tau: f64, y: [f64; 2]| -> [f64; 2] {
        let q = 1.0 - tau;
        let e = q * q * q;
        let two = 2.0 - e;
        [
            3.0 * y[1] * two.powf(-2.0 / 3.0),
            -3.0 * q * two.powf(-1.0 / 3.0) * m.potential_prime(y[0]),
        ]
    };
    let tau_end = 1.0 - delta.cbrt();
    let h = tau_end / steps as f64;
    let mut y = [0.0, a];
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = rhs(t, y);
        let k2 = rhs(t + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs(t + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y[0]
}

#[test]
fn endpoint_value_matches_fixed_step_rk4() {
    let sol = solve_profile(1.0, &p4(), &ProfileSettings::default()).unwrap();
    let oracle = rk4_endpoint(1.0, 1e-8, 10_000_000);
    let last = *sol.f.last().unwrap();
    assert!(
        (last - oracle).abs() <= 1e-6 * oracle.abs(),
        "solver {last} vs oracle {oracle}"
    );
}

#[test]
fn semi_conservation_at_one_and_ten() {
    let m = p4();
    let s = ProfileSettings::default();
    let one = solve_profile(1.0, &m, &s).unwrap();
    assert!(conservation_report(&one).0 <= 1e-7);
    let ten = solve_profile(10.0, &m, &s).unwrap();
    let (viol, margin) = conservation_report(&ten);
    assert!(margin >= -1e-6 * 100.0, "lower margin {margin}");
    assert!(viol <= 1e-7 * 100.0, "upper violation {viol}");
}

#[test]
fn odd_extension_matches_direct_negative_side_integration() {
    let m = p4();
    let s = ProfileSettings::default();
    let a = 7.0;
    let sol = solve_profile(a, &m, &s).unwrap();
    // s' = −ln(1 + x) runs from x = 0 to x = −1 + δ
    let sys = |sp: f64, y: &[f64; 2]| -> [f64; 2] {
        let e = (-sp).exp();
        let w = e * (2.0 - e);
        [
            -e * y[1] * w.powf(-m.beta),
            e * w.powf(m.beta - 1.0) * m.potential_prime(y[0]),
        ]
    };
    let rk = RkSettings {
        rtol: 1e-11,
        atol: 1e-13,
        h_max: 0.05,
        ..Default::default()
    };
    let mut segs = Vec::new();
    integrate(&sys, 0.0, [0.0, a], -(1e-8f64).ln(), &rk, |rec| {
        segs.push(rec.dense);
        Flow::Continue
    })
    .unwrap();
    let mut worst = 0.0f64;
    for (x, f) in sol.x_nodes.nodes().iter().zip(&sol.f) {
        let sp = -(-x).ln_1p();
        let seg = segs.iter().find(|g| g.t1() >= sp).unwrap_or(segs.last().unwrap());
        let f_neg = seg.eval(sp)[0];
        worst = worst.max((f_neg + f).abs());
    }
    assert!(worst <= 1e-8 * a, "odd symmetry defect {worst:e}");
}

#[test]
fn extrema_counts_small_and_growing() {
    let m = p4();
    let s = ProfileSettings::default();
    assert_eq!(count_extrema(&solve_profile(0.1, &m, &s).unwrap()), 0);
    let n100 = count_extrema(&solve_profile(100.0, &m, &s).unwrap());
    let n1000 = count_extrema(&solve_profile(1000.0, &m, &s).unwrap());
    assert!(n1000 + 1 >= n100, "N(100) = {n100}, N(1000) = {n1000}");
    assert!(n1000 > n100);
}

#[test]
fn no_extremum_next_to_the_endpoint_when_g_nonzero() {
    let m = p4();
    let s = ProfileSettings::default();
    for a in [0.5, 3.0, 8.0, 25.0] {
        let sol = solve_profile(a, &m, &s).unwrap();
        assert!(sol.g_limit.abs() > 1e-3);
        let last = extrema_locations(&sol).last().copied().unwrap_or(0.0);
        assert!(last < 1.0 - 1e-4, "a = {a}: extremum at {last}");
        // the sign of f' near 1 is the sign of G
        let fp_end = *sol.f_prime.last().unwrap();
        assert_eq!(fp_end.signum(), sol.g_limit.signum());
    }
}

#[test]
fn g_estimator_is_first_order_in_the_margin() {
    let m = p4();
    let delta = 1e-8;
    // measured: |G(δ) − G(2δ)|/δ stays below 1 + a^p with room to spare
    for a in [0.5, 2.0, 9.0, 30.0] {
        let s1 = ProfileSettings {
            delta,
            ..Default::default()
        };
        let s2 = ProfileSettings {
            delta: 2.0 * delta,
            ..Default::default()
        };
        let g1 = solve_profile(a, &m, &s1).unwrap().g_limit;
        let g2 = solve_profile(a, &m, &s2).unwrap().g_limit;
        let c = (g1 - g2).abs() / delta;
        assert!(c <= 1.0 + a.powf(m.p), "a = {a}: |ΔG|/δ = {c}");
    }
}

#[test]
fn uniform_and_variation_bounds() {
    let m = p4();
    let s = ProfileSettings::default();
    // measured constants at p = 4: sup|f|/|a| ≈ 1.9 (a = 0.1) and decreasing in a
    const K_UNIFORM: f64 = 2.5;
    const K_VARIATION: f64 = 10.0;
    for a in [0.1, 1.0, 10.0, 100.0] {
        let sol = solve_profile(a, &m, &s).unwrap();
        let sup = sol.f.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        assert!(sup <= K_UNIFORM * a, "a = {a}: sup|f| = {sup}");
        for x0 in [0.9, 0.99, 0.999] {
            let tail: Vec<f64> = sol
                .x_nodes
                .nodes()
                .iter()
                .zip(&sol.f)
                .filter(|(x, _)| **x >= x0)
                .map(|(_, f)| *f)
                .collect();
            let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
            let bound = K_VARIATION * a * (1.0 - x0).powf(1.0 - m.beta);
            assert!(hi - lo <= bound, "a = {a}, x0 = {x0}: {} > {bound}", hi - lo);
        }
    }
}

#[test]
fn bounded_profiles_are_found_and_pinned() {
    let m = p4();
    let s = ProfileSettings::default();
    let roots = find_bounded_profiles(&m, 0.1, 50.0, 500, &s, &ShootSettings::default()).unwrap();
    assert!(roots.len() >= 2);
    // first two roots at p = 4, recorded from this solver
    assert!((roots[0].a - 0.980756708727).abs() < 1e-9, "{}", roots[0].a);
    assert!((roots[1].a - 5.254570278607).abs() < 1e-9, "{}", roots[1].a);
    for r in &roots {
        assert!(r.abs_g < ShootSettings::default().g_tol_at(r.a, m.p));
        let sol = solve_profile(r.a, &m, &s).unwrap();
        let sup = sol.f_prime.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        assert!(sup <= 10.0 * (r.a + r.a.powf(m.p)), "a = {}: sup|f'| = {sup}", r.a);
    }
}

#[test]
fn no_sign_change_gives_empty_list() {
    let m = p4();
    let s = ProfileSettings::default();
    let roots = find_bounded_profiles(&m, 0.1, 0.5, 5, &s, &ShootSettings::default()).unwrap();
    assert!(roots.is_empty());
}

#[test]
fn g_depends_continuously_on_a() {
    let m = p4();
    let s = ProfileSettings::default();
    for a in [2.0, 8.0, 15.0, 40.0] {
        let g0 = endpoint_limit(a, &m, &s).unwrap();
        let g1 = endpoint_limit(a * (1.0 + 1e-6), &m, &s).unwrap();
        assert!((g0 - g1).abs() < 1e-3 * (1.0 + g0.abs()), "a = {a}: {g0} vs {g1}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn semi_conservation_and_endpoint_bound(p in 3.05f64..4.95, a in 0.05f64..60.0) {
        let m = derive_params(p, Zeta::Defocusing).unwrap();
        let sol = solve_profile(a, &m, &ProfileSettings::default()).unwrap();
        let q = sol.upper_energy();
        prop_assert_eq!(q[0], 0.5 * a * a);
        let (viol, margin) = conservation_report(&sol);
        prop_assert!(viol <= 1e-7 * a * a);
        prop_assert!(margin >= -1e-6 * a * a);
        for (fp, gap) in sol.f_prime.iter().zip(&sol.one_minus_x) {
            prop_assert!(fp.abs() <= a * gap.powf(-m.beta) * (1.0 + 1e-6));
        }
    }

    #[test]
    fn negating_a_negates_the_profile(a in 0.05f64..30.0) {
        let m = p4();
        let s = ProfileSettings::default();
        let plus = solve_profile(a, &m, &s).unwrap();
        let minus = solve_profile(-a, &m, &s).unwrap();
        prop_assert_eq!(plus.g_limit, -minus.g_limit);
        prop_assert_eq!(plus.n_extrema, minus.n_extrema);
    }
}
