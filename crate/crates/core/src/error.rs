use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("exponent p = {0} outside the admissible interval (3, 5)")]
    ExponentOutOfRange(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {values} values on a grid of {nodes} nodes")]
    LengthMismatch { values: usize, nodes: usize },

    #[error("sample {index} is not strictly positive: ({x}, {y})")]
    NonPositiveSample { index: usize, x: f64, y: f64 },

    #[error("step size collapsed to {h:e} at t = {t}")]
    StepCollapse { t: f64, h: f64 },

    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),

    #[error("focusing profile exceeded the blow-up threshold at r = {r}")]
    UnexpectedBlowUp { r: f64 },

    #[error("defocusing profile reached r_min = {r_min} without blowing up")]
    MissingBlowUp { r_min: f64 },

    #[error("evaluation point {x} lies at or inside the blow-up radius {radius}")]
    InsideBlowUp { x: f64, radius: f64 },

    #[error("radius {r} is outside the stored profile range [{lo}, {hi}]")]
    OutOfRange { r: f64, lo: f64, hi: f64 },

    #[error("self-similar field requires |t| < r, got r = {r}, t = {t}")]
    OutsideLightCone { r: f64, t: f64 },

    #[error("empty integration window [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("power-law tail with exponent {exponent} is not integrable")]
    NonIntegrableTail { exponent: f64 },

    #[error("characteristic leaves the clean region of the grid: needs r = {needed}, clean up to {available}")]
    CharacteristicExitsGrid { needed: f64, available: f64 },

    #[error("too few snapshots: need {needed}, got {got}")]
    TooFewSnapshots { needed: usize, got: usize },

    #[error("time {t} is not aligned with a recorded snapshot")]
    Misaligned { t: f64 },

    #[error("profile is {0}; operation requires the defocusing branch")]
    WrongBranch(&'static str),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl Error {
    /// Numerical failures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepCollapse { .. }
                | Error::NonFinite { .. }
                | Error::TooManySteps(_)
                | Error::UnexpectedBlowUp { .. }
                | Error::MissingBlowUp { .. }
                | Error::NonIntegrableTail { .. }
        )
    }
}
