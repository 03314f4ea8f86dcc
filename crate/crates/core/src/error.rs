use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("moment order {0} is not supported (expected 1 or 2)")]
    UnsupportedMoment(u32),

    #[error("defect site {0} appears more than once")]
    DuplicateDefectSite(usize),

    #[error("located {found} poles but expected {expected}")]
    PoleCountMismatch { found: usize, expected: usize },

    #[error("pole at x = {x} is not simple (|Q'| = {derivative:e})")]
    NonSimplePole { x: f64, derivative: f64 },

    #[error("probabilities sum to {sum} (drift {drift:e})")]
    NormalizationDrift { sum: f64, drift: f64 },

    #[error("relative deviation never exceeded the threshold before t = {t_max}")]
    NotReached { t_max: f64 },

    #[error("resolvent matrix is singular at this Laplace variable (|det M| = {det:e})")]
    SingularResolvent { det: f64 },

    #[error("eigenvalue gap {gap:e} falls inside the degeneracy ambiguity band")]
    DegeneracyAmbiguity { gap: f64 },

    #[error("master equation not stationary at t = {t}: residual {residual:e}")]
    NotConverged { t: f64, residual: f64 },
}
