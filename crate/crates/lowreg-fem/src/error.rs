use thiserror::Error;

/// Errors produced by mesh construction, interpolation, and solvers.
#[derive(Debug, Error)]
pub enum FemError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown field '{0}'")]
    UnknownField(String),

    #[error("unknown domain '{0}'")]
    UnknownDomain(String),

    #[error("invalid cell id {0}")]
    InvalidCellId(usize),

    #[error("singular trace: {kind} {entity} meets the singular locus of field '{field}'")]
    SingularTrace {
        field: String,
        kind: &'static str,
        entity: String,
    },

    #[error("singular affine map (det = {0})")]
    SingularMap(f64),

    #[error("degenerate cell {0}: local Gram matrix is singular")]
    DegenerateCell(usize),

    #[error("solver did not converge: {iterations} iterations, relative residual {residual:.3e}")]
    SolveFailure { iterations: usize, residual: f64 },

    #[error("system is not positive definite (p'Ap = {0:.3e} encountered)")]
    IndefiniteSystem(f64),

    #[error("{context}: {source}")]
    StudyLevel {
        context: String,
        #[source]
        source: Box<FemError>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(#[from] serde_json::Error),
}

impl FemError {
    pub fn with_level_context(self, context: impl Into<String>) -> Self {
        FemError::StudyLevel {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
