#![allow(dead_code)]

use std::sync::OnceLock;

use nonrad_core::profile::{find_bounded_profiles, solve_profile, ProfileSettings, ShootSettings};
use nonrad_core::wave::{self_similar_field, Snapshot};
use nonrad_core::{derive_params, make_initial_state, ModelParams, ProfileSolution, WaveConfig, WaveState, Zeta};

pub fn defocusing4() -> ModelParams {
    derive_params(4.0, Zeta::Defocusing).unwrap()
}

/// First bounded-profile root at p = 4 and its profile.
pub fn first_root() -> &'static ProfileSolution {
    static P: OnceLock<ProfileSolution> = OnceLock::new();
    P.get_or_init(|| {
        let m = defocusing4();
        let s = ProfileSettings::default();
        let roots = find_bounded_profiles(&m, 0.5, 2.0, 30, &s, &ShootSettings::default()).unwrap();
        solve_profile(roots[0].a, &m, &s).unwrap()
    })
}

/// Initial state for the self-similar data `(0, a r^{−β−1})`.
pub fn self_similar_state(dr: f64, r0: f64, r_max: f64) -> WaveState {
    let prof = first_root();
    let cfg = WaveConfig::new(prof.params, r0, dr, r_max).unwrap();
    let a = prof.a;
    let beta = prof.params.beta;
    make_initial_state(|_| 0.0, move |r| a * r.powf(-beta - 1.0), &cfg).unwrap()
}

/// `sup |u − u_exact|` over grid nodes with `t + R₀ < r ≤ r_clean`.
pub fn self_similar_error(snap: &Snapshot, r0: f64) -> f64 {
    let prof = first_root();
    let u = snap.u();
    let mut worst = 0.0f64;
    for j in 1..=snap.clean_index() {
        let r = snap.r(j);
        if r <= snap.t + r0 {
            continue;
        }
        let (exact, _, _) = self_similar_field(prof, r, snap.t).unwrap();
        worst = worst.max((u[j] - exact).abs());
    }
    worst
}

pub fn observed_order(e_coarse: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).log2()
}
