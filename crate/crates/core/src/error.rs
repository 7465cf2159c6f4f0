//! Error type shared by the solvers.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("jet shape mismatch: {0}")]
    JetShape(String),
    #[error("function evaluated at a non-smooth point")]
    NonSmooth,
    #[error("inadmissible state {0}")]
    Inadmissible(String),
    #[error("eigenvalue {0} too close to zero")]
    NearSonic(f64),
    #[error("state has {0} positive eigenvalues, only one is supported")]
    Unsupported(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("newton iteration did not converge in {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("coupling jacobian is singular")]
    SingularCouplingJacobian,
    #[error("derivative system is singular")]
    SingularDerivativeSystem,
    #[error("godunov state left the subcritical regime")]
    StateLeftSubcritical,
    #[error("coupling has {conditions} conditions but edges carry {waves} outgoing waves")]
    CouplingDimension { conditions: usize, waves: usize },
    #[error("need at least {needed} cells, have {have}")]
    TooFewCells { needed: usize, have: usize },
    #[error("network: {0}")]
    Network(String),
    #[error("config: {0}")]
    Config(String),
    #[error("vertex {vertex}{}: {source}", stage.map(|s| format!(" stage {s}")).unwrap_or_default())]
    Junction {
        vertex: String,
        stage: Option<usize>,
        source: Box<Error>,
    },
    #[error("edge {edge} cell {cell}: state became inadmissible")]
    AdmissibilityLost { edge: String, cell: usize },
}

impl Error {
    pub(crate) fn at_stage(self, stage: usize) -> Self {
        match self {
            Error::Junction { vertex, source, .. } => Error::Junction {
                vertex,
                stage: Some(stage),
                source,
            },
            other => Error::Junction {
                vertex: String::new(),
                stage: Some(stage),
                source: Box::new(other),
            },
        }
    }

    pub(crate) fn at_vertex(self, vertex: &str) -> Self {
        match self {
            Error::Junction { stage, source, .. } => Error::Junction {
                vertex: vertex.to_string(),
                stage,
                source,
            },
            other => Error::Junction {
                vertex: vertex.to_string(),
                stage: None,
                source: Box::new(other),
            },
        }
    }
}
