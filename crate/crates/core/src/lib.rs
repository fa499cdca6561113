//! Numerical tools for weakly non-radiative radial solutions of
//! `u_tt − Δu = ζ|u|^{p−1}u` in three space dimensions, `3 < p < 5`.
//!
//! All energies and pairings are per steradian: the global factor `4π` is dropped.

pub mod diagnostics;
pub mod error;
pub mod export;
pub mod fit;
pub mod grid;
pub mod interp;
pub mod ode;
pub mod params;
pub mod profile;
pub mod quadrature;
pub mod stationary;
pub mod wave;

pub use diagnostics::{
    characteristic_residual, decay_report, energy_identity_residual, exterior_energy,
    pointwise_bound_check, projection_onto_generator, ChannelReport, Verdict,
};
pub use error::{Error, Result};
pub use fit::{fit_power_law, PowerLawFit};
pub use grid::{Grid1D, Spacing};
pub use params::{derive_params, ModelParams, Zeta};
pub use profile::{
    conservation_report, count_extrema, find_bounded_profiles, solve_profile, ProfileSettings,
    ProfileSolution, ShootSettings,
};
pub use quadrature::integrate_grid;
pub use stationary::{
    check_ladder_bounds, evaluate_rescaled, ladder, solve_stationary, StationaryConfig,
    StationaryProfile,
};
pub use wave::{evolve, make_initial_state, self_similar_field, Snapshot, Trajectory, WaveConfig, WaveState};
