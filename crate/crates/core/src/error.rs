use thiserror::Error;

use crate::C64;

pub type Result<T> = std::result::Result<T, NpError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NpError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fundamental solution evaluated at its singular point")]
    SingularPoint,

    #[error("evaluation point at distance {distance:.3e} from the curve (minimum {minimum:.3e})")]
    TooCloseToBoundary { distance: f64, minimum: f64 },

    #[error("curves too close: gap {gap:.3e} below minimum {minimum:.3e}")]
    CurvesTooClose { gap: f64, minimum: f64 },

    #[error("inclusion is not interior to the outer disk: {0}")]
    InclusionNotInterior(String),

    #[error("dense solver failure: {0}")]
    SolverFailure(String),

    #[error("mean-zero Gram matrix of -S is not positive definite")]
    GramNotPositiveDefinite,

    #[error("trivial contrast k = 1 (inclusion invisible)")]
    TrivialContrast,

    #[error("lambda = {lambda} lies within {distance:.3e} of the spectrum (required {required:.3e})")]
    LambdaOnSpectrum {
        lambda: C64,
        distance: f64,
        required: f64,
    },

    #[error("degenerate density: total energy {0:.3e}")]
    DegenerateDensity(f64),

    #[error("incompatible Neumann data: mean {0} is not zero")]
    IncompatibleData(C64),

    #[error("near resonance: smallest singular value {sigma_min:.3e} (relative threshold {threshold:.3e})")]
    NearResonance { sigma_min: f64, threshold: f64 },

    #[error("invalid inclusion placement: {0}")]
    PlacementInvalid(String),

    #[error("overlapping disks: center distance {c} does not exceed radius {r}")]
    OverlappingDisks { c: f64, r: f64 },

    #[error("unsupported harmonic source: {0}")]
    UnsupportedSource(String),

    #[error("inadmissible conductivity pair: mode {n} violates the solvability condition")]
    InadmissiblePair { n: usize },
}
