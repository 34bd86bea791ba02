//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("unknown catalog model `{0}`")]
    UnknownModel(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("eigensolver did not converge within {iterations} iterations")]
    EigenNonConvergence { iterations: usize },

    #[error("eigenfunction positivity violated (min entry {min:.3e}) after {retries} shift retries")]
    EigenPositivity { min: f64, retries: usize },

    #[error("bracket expansion failed: {0}")]
    BracketExpansion(String),

    #[error("shooting precondition violated: {0}")]
    ShootingPrecondition(String),

    #[error("time step violates the monotonicity condition: dt = {dt:.3e} > {limit:.3e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("grid Peclet condition violated: |q| h / (2 a) = {peclet:.3} > 1")]
    PecletViolation { peclet: f64 },

    #[error("boundary contamination {value:.3e} exceeds 1e-3: simulation box too small")]
    BoundaryContamination { value: f64 },

    #[error("simulation box too small: {0}")]
    BoxTooSmall(String),

    #[error("degenerate (tangential) zero of the reaction term near u = {u:.6}")]
    DegenerateZero { u: f64 },

    #[error("terrace tier {index} has nonpositive speed {speed:.3e}")]
    NonpositiveTierSpeed { index: usize, speed: f64 },

    #[error("phase-plane integration inconclusive: {0}")]
    PhasePlane(String),

    #[error("empty or corrupted directional speed table: {0}")]
    SpeedTable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
