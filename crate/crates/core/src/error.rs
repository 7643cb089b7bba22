use crate::lattice::Mode;
use thiserror::Error;

/// Errors produced by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid torus specification: {0}")]
    InvalidTorus(String),

    #[error("mode ({}, {}) lies outside the box of half-width {half_width}", .mode.x, .mode.y)]
    SupportViolation { mode: Mode, half_width: u32 },

    #[error("tuple {0:?} does not conserve momentum")]
    MomentumViolation([Mode; 4]),

    #[error("box half-width {requested} exceeds the enumeration cap {cap}")]
    CapExceeded { requested: u32, cap: u32 },

    #[error("operation requires an irrational torus; offending resonance: {witness:?}")]
    RationalTorus { witness: Option<[Mode; 4]> },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("initial data too large for the normal-form flow: C^(1/2)·‖z‖² = {value:.3e} > {limit}")]
    OutsideAnalyticityBall { value: f64, limit: f64 },

    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integration did not finish within {0} steps")]
    TooManySteps(usize),

    #[error("FFT grid of size {grid} cannot dealias the cubic term on a box of half-width {half_width} (need at least {required})")]
    Dealiasing {
        grid: usize,
        half_width: u32,
        required: usize,
    },

    #[error("cascade geometry search failed: {0}")]
    SearchFailed(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
