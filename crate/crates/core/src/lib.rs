//! Numerical toolkit for asymptotic spreading speeds of reaction-diffusion
//! equations in periodic media: periodic principal eigenvalues and critical
//! front speeds, Wulff shapes assembled from directional speeds, a monotone
//! finite-difference simulator for verification from compactly supported
//! data, 1D traveling-wave machinery and propagating-terrace decompositions.

pub mod eigensolver;
pub mod error;
pub mod model;
pub mod pdesim;
pub mod terrace;
pub mod waves;
pub mod wulff;

pub use error::{Error, Result};
pub use model::{
    builtin_model, validate_coefficients, Dim, GridSpec, Model, ModelParams,
    PeriodicCoefficients, ReactionKind, ReactionTerm, SpatialModulation,
};
