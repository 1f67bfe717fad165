use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("metric is not symmetric positive definite")]
    MetricNotPositiveDefinite,
    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("square-root branch is ill-defined: eigenvalues {lower:e} and {upper:e} straddle a sign boundary")]
    DegenerateBranch { lower: f64, upper: f64 },
    #[error("reference volume coefficient must be non-zero")]
    ZeroVolume,
    #[error("curvature triple is not definite ({0})")]
    NotDefinite(String),
    #[error("Λ must be non-zero")]
    ZeroLambda,
    #[error("sign of Λ ({lambda}) disagrees with the connection sign ({connection_sign})")]
    SignMismatch { lambda: f64, connection_sign: i8 },
    #[error("normalization precondition failed: tr√M = {trace_sqrt}, |Λ| = {abs_lambda}")]
    Normalization { trace_sqrt: f64, abs_lambda: f64 },
    #[error("metric reconstruction residual {residual:e} exceeds tolerance {tol:e}")]
    ReconstructionTolerance { residual: f64, tol: f64 },
    #[error("self-dual Weyl operator is not trace-free (trace {0:e})")]
    NotTraceless(f64),
    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("definiteness lost at t = {t} (cell {cell})")]
    DefinitenessLost { cell: usize, t: f64 },
    #[error("flow step leaves the definite locus")]
    StepLeavesDefiniteLocus,
    #[error("step size {dtau:e} rejected: {reason}")]
    StepRejected { dtau: f64, reason: String },
    #[error("base point is not critical (residual {residual:e} > {tol:e})")]
    NotCritical { residual: f64, tol: f64 },
    #[error("ansatz closure violated: off-diagonal component {0:e}")]
    AnsatzClosure(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
