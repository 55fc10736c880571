use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("collision index {index} out of range for a lattice of {n} momenta")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("conflicting coefficients {first} and {second} for collision {quad:?}")]
    ConflictingCoefficients {
        quad: [usize; 4],
        first: f64,
        second: f64,
    },
    #[error("collision {quad:?} violates {law} conservation")]
    ConservationViolation { quad: [usize; 4], law: &'static str },
    #[error("negative collision coefficient {gamma} for {quad:?}")]
    NegativeCoefficient { quad: [usize; 4], gamma: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("model is not normal: {0}")]
    NotNormal(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("degenerate Jacobian: {0}")]
    DegenerateJacobian(String),
    #[error("step {step}: cannot keep the state interior after {halvings} halvings")]
    BoundsViolation { step: usize, halvings: usize },
    #[error("no stationary state within {0} steps")]
    StepLimitExceeded(usize),
    #[error("planar system needs p^1 != 0 for every momentum; momentum {0} has p^1 = 0")]
    SingularB(usize),
    #[error("not an equilibrium: detailed-balance residual {residual:e} exceeds {tolerance:e}")]
    NotEquilibrium { residual: f64, tolerance: f64 },
    #[error("linearized operator is not positive semi-definite: eigenvalue {eigenvalue:e}")]
    NotPsd { eigenvalue: f64 },
    #[error("kernel dimension {found} differs from the expected {expected}")]
    KernelMismatch { found: usize, expected: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidLattice(_) | Error::InvalidModel(_) | Error::IndexOutOfRange { .. } => {
                "ValidationError"
            }
            Error::ConflictingCoefficients { .. }
            | Error::ConservationViolation { .. }
            | Error::NegativeCoefficient { .. } => "ValidationError",
            Error::Domain(_) => "DomainError",
            Error::NotNormal(_) => "NotNormal",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::DegenerateJacobian(_) => "DegenerateJacobian",
            Error::BoundsViolation { .. } => "BoundsViolation",
            Error::StepLimitExceeded(_) => "StepLimitExceeded",
            Error::SingularB(_) => "SingularB",
            Error::NotEquilibrium { .. } => "NotEquilibrium",
            Error::NotPsd { .. } => "NotPSD",
            Error::KernelMismatch { .. } => "KernelMismatch",
            Error::Config(_) => "ValidationError",
            Error::Parse(_) => "ParseError",
        }
    }

    /// Names the violated model invariant for validation failures.
    pub fn invariant(&self) -> Option<&'static str> {
        match self {
            Error::InvalidLattice(_) => Some("InvalidLattice"),
            Error::InvalidModel(_) => Some("InvalidModel"),
            Error::IndexOutOfRange { .. } => Some("IndexOutOfRange"),
            Error::ConflictingCoefficients { .. } => Some("ConflictingCoefficients"),
            Error::ConservationViolation { .. } => Some("ConservationViolation"),
            Error::NegativeCoefficient { .. } => Some("NegativeCoefficient"),
            _ => None,
        }
    }
}
