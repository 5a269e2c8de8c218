use thiserror::Error;

/// Everything that can go wrong while building or checking a pseudo-boson system.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: a truncation needs at least 2 levels per mode")]
    InvalidDimension { dim: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("mode {mode} out of range for a {modes}-mode layout")]
    InvalidMode { mode: usize, modes: usize },

    #[error("trust region {trust} is invalid for per-mode dimension {dim}")]
    InvalidTrust { trust: usize, dim: usize },

    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { defect: f64, tolerance: f64 },

    #[error("matrix is not positive definite: eigenvalue {eigenvalue:.3e} is below {threshold:.3e}")]
    NotPositive { eigenvalue: f64, threshold: f64 },

    #[error("matrix exponential overflows: exponent reaches {exponent:.3e}")]
    Overflow { exponent: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("no vacuum: smallest singular value {smallest:.3e} exceeds kernel tolerance {tolerance:.3e}")]
    NoVacuum { smallest: f64, tolerance: f64 },

    #[error("degenerate vacuum: {} singular values below kernel tolerance {tolerance:.3e}", singular_values.len())]
    DegenerateVacuum { singular_values: Vec<f64>, tolerance: f64 },

    #[error("ladder of length {n_max} overruns raising-operator trust {trust}")]
    TruncationOverrun { n_max: usize, trust: usize },

    #[error("vacuum overlap {overlap:.3e} vanishes; the families cannot be normalized")]
    NormalizationImpossible { overlap: f64 },

    #[error("{available} vectors cannot span a trust region of dimension {required}")]
    UnderSpanned { available: usize, required: usize },

    #[error("ill-conditioned operator: condition estimate {condition:.3e} exceeds {limit:.3e}")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("commutator defect {defect:.3e} exceeds {tolerance:.3e} on the trust region")]
    CommutatorDefect { defect: f64, tolerance: f64 },

    #[error("regularity classification needs at least 3 dimensions, got {0}")]
    InsufficientData(usize),

    #[error("sweep dimensions {0:?} are not a strictly increasing geometric progression")]
    NonGeometricSweep(Vec<usize>),

    #[error("amplitude |z| = {radius:.3} is outside the faithful domain: relative tail {tail:.3e} exceeds {tolerance:.3e}")]
    DomainExceeded { radius: f64, tail: f64, tolerance: f64 },

    #[error("quadrature did not converge: node doubling changed the defect by {change:.3e} (tolerance {tolerance:.3e})")]
    QuadratureNotConverged { change: f64, tolerance: f64 },

    #[error("integrand norm grows by a factor {growth:.3e} over the outer half of the faithful domain (radius {radius:.3})")]
    IntegrandDivergence { growth: f64, radius: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
