//! Equation parameters for `u_tt - Δu = ζ|u|^{p-1}u` in three space dimensions.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Sign of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zeta {
    /// ζ = +1
    Focusing,
    /// ζ = −1
    Defocusing,
}

impl Zeta {
    pub fn sign(self) -> f64 {
        match self {
            Zeta::Focusing => 1.0,
            Zeta::Defocusing => -1.0,
        }
    }

    pub fn from_sign(s: i32) -> Result<Self> {
        match s {
            1 => Ok(Zeta::Focusing),
            -1 => Ok(Zeta::Defocusing),
            other => Err(Error::InvalidArgument(format!(
                "zeta must be +1 or -1, got {other}"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Zeta::Focusing => "focusing",
            Zeta::Defocusing => "defocusing",
        }
    }
}

impl fmt::Display for Zeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Zeta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "+1" | "focusing" => Ok(Zeta::Focusing),
            "-1" | "defocusing" => Ok(Zeta::Defocusing),
            other => Err(Error::InvalidArgument(format!(
                "zeta must be +1, -1, focusing or defocusing, got {other:?}"
            ))),
        }
    }
}

/// Exponent `p`, sign `ζ` and the derived scaling constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub p: f64,
    pub zeta: Zeta,
    /// 2/(p−1), the self-similar decay rate.
    pub beta: f64,
    /// β(1−β), the linear coefficient of the profile equation.
    pub gamma: f64,
    /// Scaling-critical Sobolev exponent 3/2 − 2/(p−1).
    pub s_p: f64,
    /// Amplitude of the focusing singular steady state `c_p r^{−β}`.
    pub c_p: f64,
}

/// Derives all parameters from `p ∈ (3, 5)` and `ζ`.
pub fn derive_params(p: f64, zeta: Zeta) -> Result<ModelParams> {
    if !(p > 3.0 && p < 5.0) {
        return Err(Error::ExponentOutOfRange(p));
    }
    let beta = 2.0 / (p - 1.0);
    let gamma = beta * (1.0 - beta);
    let s_p = 1.5 - beta;
    let c_p = gamma.powf(1.0 / (p - 1.0));
    Ok(ModelParams {
        p,
        zeta,
        beta,
        gamma,
        s_p,
        c_p,
    })
}

impl ModelParams {
    pub fn new(p: f64, zeta: Zeta) -> Result<Self> {
        derive_params(p, zeta)
    }

    /// `|y|^{p−1} y`
    #[inline]
    pub fn signed_power(&self, y: f64) -> f64 {
        y.abs().powf(self.p - 1.0) * y
    }

    /// Profile potential `P(y) = γ/2 y² + |y|^{p+1}/(p+1)`.
    #[inline]
    pub fn potential(&self, y: f64) -> f64 {
        0.5 * self.gamma * y * y + y.abs().powf(self.p + 1.0) / (self.p + 1.0)
    }

    /// `P'(y) = γ y + |y|^{p−1} y`
    #[inline]
    pub fn potential_prime(&self, y: f64) -> f64 {
        self.gamma * y + self.signed_power(y)
    }

    /// Decay exponent of the self-similar exterior energy, −(5−p)/(p−1).
    pub fn energy_decay_exponent(&self) -> f64 {
        -(5.0 - self.p) / (self.p - 1.0)
    }

    /// Closed-form cosine of the angle between `(c_p r^{−β}, 0)` and `(1/r, 0)`.
    pub fn singular_angle_cosine(&self) -> f64 {
        0.5 * ((5.0 - self.p) * (self.p - 1.0)).sqrt()
    }

    /// Blow-up radius lower bound `p^{−2(p−1)/(p−3)}` for the defocusing stationary profile.
    pub fn blow_up_radius_bound(&self) -> f64 {
        self.p.powf(-2.0 * (self.p - 1.0) / (self.p - 3.0))
    }
}
