use thiserror::Error;

/// Errors raised by the algebra, map, and extremality routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid algebra spec: {0}")]
    InvalidSpec(String),

    #[error("operands live on different algebras")]
    SpecMismatch,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("element has complex entries but the field is real")]
    FieldMismatch,

    #[error("operator is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not positive (minimum eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("map is not Hermitian-preserving")]
    NotHermitianPreserving,

    #[error("spectrahedron is not Hermitian-defined")]
    NotHermitianDefined,

    #[error("element is not a member of the spectrahedron (worst residual {residual:.3e}, minimum eigenvalue {min_eigenvalue:.3e})")]
    NotMember { residual: f64, min_eigenvalue: f64 },

    #[error("spectrahedron is unbounded along the perturbation direction")]
    UnboundedFace,

    #[error("perturbation direction is zero on the support")]
    ZeroPerturbation,

    #[error("decomposition needs more than {limit} components")]
    ComponentBudgetExceeded { limit: usize },

    #[error("extremality decision is inconclusive (singular value inside the tolerance band)")]
    InconclusiveExtremality,

    #[error("observable is not Hermitian")]
    NotHermitianObservable,

    #[error("invalid Gibbs state: {0}")]
    InvalidGibbsState(String),

    #[error("not a correlation matrix: {0}")]
    NotCorrelationMatrix(String),

    #[error("normalisation target is not positive")]
    NotPositiveTarget,

    #[error("point violates mapping constraint {index} (residual {residual:.3e})")]
    ConstraintViolated { index: usize, residual: f64 },

    #[error("bad dimensions: {0}")]
    BadDims(String),

    #[error("null space of the density system is numerically degenerate (residual {residual:.3e})")]
    DegenerateNullspace { residual: f64 },

    #[error("POVM support {support} exceeds the bound {bound}")]
    Oversupported { support: usize, bound: usize },

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
