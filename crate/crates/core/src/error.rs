use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("covariance matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("covariance violates the uncertainty principle (smallest symplectic eigenvalue {min_nu})")]
    NonPhysicalCovariance { min_nu: f64 },
    #[error("state is pure or numerically pure and no regularization was requested")]
    SingularWithoutRegularization,
    #[error("Gibbs matrix has a zero symplectic eigenvalue")]
    DegenerateGibbs,
    #[error("matrix has an eigenvalue on the closed negative real axis")]
    BranchCutEigenvalue,
    #[error("matrix is not symplectic (deviation {deviation:e})")]
    NotSymplectic { deviation: f64 },
    #[error("residual {residual:e} exceeds tolerance")]
    ResidualTooLarge { residual: f64 },
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("distributions have different supports")]
    SupportMismatch,
    #[error("distribution is not normalized (sum {sum})")]
    NotNormalized { sum: f64 },
    #[error("parameter outside domain: {0}")]
    DomainError(String),
    #[error("operation requires a single-mode state")]
    NotSingleMode,
    #[error("probe is pure; use the regularized path")]
    PureProbeUnsupported,
    #[error("invalid probe: {0}")]
    InvalidProbe(String),
    #[error("parameters outside the closed-form domain: {0}")]
    OutOfFormulaDomain(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("Fock cutoff too small (trace deficit {deficit:e})")]
    CutoffTooSmall { deficit: f64 },
    #[error("ill-conditioned density matrix (condition number {cond:e})")]
    IllConditioned { cond: f64 },
}

impl Error {
    /// Machine-readable short code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NotSymmetric { .. } => "NotSymmetric",
            Error::NotPositiveDefinite => "NotPositiveDefinite",
            Error::NonPhysicalCovariance { .. } => "NonPhysicalCovariance",
            Error::SingularWithoutRegularization => "SingularWithoutRegularization",
            Error::DegenerateGibbs => "DegenerateGibbs",
            Error::BranchCutEigenvalue => "BranchCutEigenvalue",
            Error::NotSymplectic { .. } => "NotSymplectic",
            Error::ResidualTooLarge { .. } => "ResidualTooLarge",
            Error::NumericalBreakdown(_) => "NumericalBreakdown",
            Error::SupportMismatch => "SupportMismatch",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::DomainError(_) => "DomainError",
            Error::NotSingleMode => "NotSingleMode",
            Error::PureProbeUnsupported => "PureProbeUnsupported",
            Error::InvalidProbe(_) => "InvalidProbe",
            Error::OutOfFormulaDomain(_) => "OutOfFormulaDomain",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::CutoffTooSmall { .. } => "CutoffTooSmall",
            Error::IllConditioned { .. } => "IllConditioned",
        }
    }

    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ResidualTooLarge { .. }
                | Error::NumericalBreakdown(_)
                | Error::BranchCutEigenvalue
                | Error::IllConditioned { .. }
        )
    }
}
