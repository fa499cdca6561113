use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "nonrad", version, about = "Profiles, exterior evolutions and channel diagnostics for u_tt - Δu = ζ|u|^{p-1}u")]
pub struct Cli {
    /// TOML file; top-level keys and the table named after the command supply flag defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory. Default: $NONRAD_OUT_ROOT (or ./runs) joined with the command name.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the self-similar profile equation for one initial slope a.
    #[command(args_override_self = true)]
    Profile(ProfileCmd),
    /// Scan a for bounded profiles (roots of G).
    #[command(args_override_self = true)]
    Shoot(ShootCmd),
    /// Build the stationary profile z = rU normalised by z(∞) = 1.
    #[command(args_override_self = true)]
    Stationary(StationaryCmd),
    /// Evolve exterior data and write the trajectory.
    #[command(args_override_self = true)]
    Simulate(SimulateCmd),
    /// Channel diagnostics of a stored trajectory.
    #[command(args_override_self = true)]
    Diagnose(DiagnoseCmd),
    /// Scalar outputs over a parameter grid.
    #[command(args_override_self = true)]
    Sweep(SweepCmd),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Profile(_) => "profile",
            Command::Shoot(_) => "shoot",
            Command::Stationary(_) => "stationary",
            Command::Simulate(_) => "simulate",
            Command::Diagnose(_) => "diagnose",
            Command::Sweep(_) => "sweep",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    /// Exponent p in (3, 5).
    #[arg(long, default_value_t = 4.0)]
    pub p: f64,
    /// Sign of the nonlinearity: +1/focusing or -1/defocusing. Default depends on the command.
    #[arg(long, allow_hyphen_values = true)]
    pub zeta: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ProfileSolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
    /// Endpoint margin: integrate up to x = 1 - delta.
    #[arg(long, default_value_t = 1e-8)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.05)]
    pub h_max: f64,
    #[arg(long, default_value_t = 40_000)]
    pub max_nodes: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ProfileCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: ProfileSolverArgs,
    /// Initial slope f'(0).
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ShootCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: ProfileSolverArgs,
    /// Scan interval lo:hi; lo = 0 starts the scan at hi/scan.
    #[arg(long, default_value = "0:50")]
    pub a_range: String,
    /// Number of scan samples.
    #[arg(long, default_value_t = 500)]
    pub scan: usize,
    /// Acceptance threshold on |G| (default 1e-8(1 + a^p)).
    #[arg(long)]
    pub g_tol: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct StationarySolverArgs {
    /// Seed radius of the backward integration.
    #[arg(long, default_value_t = 1e4)]
    pub r_inf: f64,
    /// Inner end of focusing profiles.
    #[arg(long, default_value_t = 1e-3)]
    pub r_min: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
    /// Blow-up threshold for z.
    #[arg(long, default_value_t = 1e12)]
    pub z_max: f64,
    /// Relative width of the blow-up bracket.
    #[arg(long, default_value_t = 1e-8)]
    pub r_tol: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub nodes_per_unit: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct StationaryCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: StationarySolverArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    /// (0, a r^{-β-1}): the self-similar solution r^{-β} f(t/r) at t = 0.
    SelfSimilar,
    /// (U_C, 0) from the stationary family.
    Stationary,
    /// (amplitude·(1 - ((r - center)/width)²)⁴, 0) on |r - center| < width.
    Bump,
    /// CSV with columns r, u0, u1.
    File,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DataArgs {
    #[arg(long, value_enum, default_value = "self-similar")]
    pub data: DataKind,
    /// Self-similar slope a.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Stationary constant C.
    #[arg(long = "C", alias = "c", allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long)]
    pub center: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub path: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PdeArgs {
    /// Truncation radius of the forcing.
    #[arg(long = "R0", default_value_t = 0.5)]
    pub r0: f64,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub dr: f64,
    /// Courant number in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Final time.
    #[arg(long = "T", default_value_t = 10.0)]
    pub t: f64,
    /// Grid extent, or "auto".
    #[arg(long, default_value = "auto")]
    pub r_max: String,
    /// Snapshot cadence in time units (a multiple of the time step).
    #[arg(long, default_value_t = 1.0)]
    pub every: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub pde: PdeArgs,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DiagnoseCmd {
    /// Run directory written by `simulate`.
    #[arg(long)]
    pub run: PathBuf,
    /// Exterior radius R (default: the run's R0).
    #[arg(long = "R")]
    pub r: Option<f64>,
    /// Time window lo:hi of the decay fit.
    #[arg(long)]
    pub fit_window: Option<String>,
    /// Slack on the target decay exponent.
    #[arg(long, default_value_t = 0.1)]
    pub slack: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepOver {
    /// Profile slope: G, f1, N_extrema (and the decay exponent with --T).
    A,
    /// Stationary constant: rescaled R_minus, lambda and cos_angle at --R.
    C,
    /// Exterior radius: lambda, cos_angle and E_ext of the --data initial data.
    R,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SweepCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub over: SweepOver,
    /// Comma list, or lin:lo:hi:n, or log:lo:hi:n. Empty gives a header-only table.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    pub values: String,
    /// Concurrent sub-runs (default: available cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Radius of the projection for C sweeps.
    #[arg(long = "R", default_value_t = 1.0)]
    pub r: f64,
    /// Evolve each a-value to this time and fit the exterior energy decay.
    #[arg(long = "T")]
    pub t: Option<f64>,
    #[arg(long = "R0", default_value_t = 0.5)]
    pub r0: f64,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub dr: f64,
    /// Grid extent for sampled data and simulations, or "auto".
    #[arg(long, default_value = "auto")]
    pub r_max: String,
    #[command(flatten)]
    pub data: DataArgs,
}
