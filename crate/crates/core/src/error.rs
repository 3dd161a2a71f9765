use thiserror::Error;

/// Errors raised anywhere in the solve-estimate-mark-refine pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported polynomial degree {0} (supported: 2, 3)")]
    UnsupportedDegree(usize),

    #[error("quadrature of degree {requested} is beyond the table (max {max})")]
    QuadratureDegree { requested: usize, max: usize },

    #[error("derivative order {0} requested, at most 3 is available")]
    DerivativeOrder(usize),

    #[error("refinement closure exceeded {limit} splits")]
    ClosureOverflow { limit: usize },

    #[error("invalid {kind} id {id} (mesh has {len})")]
    InvalidId { kind: &'static str, id: usize, len: usize },

    #[error("point ({0}, {1}) lies outside the domain")]
    PointOutside(f64, f64),

    #[error("matrix is not symmetric positive definite")]
    NotSpd,

    #[error("linear solve stalled: relative residual {residual:e} above tolerance {tol:e}")]
    SolveTolerance { residual: f64, tol: f64 },

    #[error("conjugate gradients did not converge in {0} iterations")]
    MaxIterations(usize),

    #[error("primal-dual active set method exceeded {0} iterations")]
    PdasIterationCap(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("Dörfler marking needs at least one indicator")]
    EmptyIndicators,

    #[error("need at least {needed} levels to fit a rate, have {have}")]
    InsufficientLevels { needed: usize, have: usize },

    #[error("reference mesh is not nested in the coarse mesh")]
    NonNested,

    #[error("degrees of freedom did not increase from level {0} to the next")]
    NonIncreasingDofs(usize),

    #[error("function evaluated outside its domain at ({0}, {1})")]
    OutsideDomain(f64, f64),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
