use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("signature mismatch: ({0}, {1}) vs ({2}, {3})")]
    SignatureMismatch(usize, usize, usize, usize),

    #[error("basis vectors are linearly dependent")]
    DependentBasis,

    #[error("duplicate source points at indices {0} and {1}")]
    DuplicateSource(usize, usize),

    #[error("Lipschitz constant {constant} exceeds the bound {bound}")]
    LipschitzViolation { constant: f64, bound: f64 },

    #[error("strict extension requires a constant below 1 - tol, got {constant}")]
    NotStrictlyContracting { constant: f64 },

    #[error("no feasible point after {iterations} iterations (residual {residual:e})")]
    Infeasible { iterations: usize, residual: f64 },

    #[error("iteration did not converge after {iterations} iterations (step {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("malformed domain: {0}")]
    MalformedDomain(String),

    #[error("point lies on the light cone of the inversion center")]
    LightConeSingularity,

    #[error("half-space height must be strictly positive, got {0}")]
    NonPositiveHeight(f64),

    #[error("point is within {distance:e} of the singular locus")]
    SingularProximity { distance: f64 },

    #[error("degenerate cell {cell}: minimum eigenvalue {min_eigenvalue:e}")]
    DegenerateCell { cell: usize, min_eigenvalue: f64 },

    #[error("boundary data violates the Lipschitz bound by {violation:e}")]
    InfeasibleBoundary { violation: f64 },

    #[error("sections do not share a base and boundary: {0}")]
    MismatchedSections(String),

    #[error("vector is spacelike")]
    SpacelikeInput,

    #[error("{0}")]
    InvalidArgument(String),
}

impl Error {
    /// Numerical non-convergence, as opposed to a violated precondition.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(self, Error::Infeasible { .. } | Error::NoConvergence { .. })
    }
}
