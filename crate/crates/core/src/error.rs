use thiserror::Error;

/// Errors produced by grid construction, the Koopman decomposition and the
/// time integrators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SaskError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix is singular to working precision (condition estimate {condition:e})")]
    Conditioning { condition: f64 },

    #[error("dynamics returned a non-finite value at point {point_index} (component {component})")]
    Evaluation {
        point_index: usize,
        component: usize,
    },

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),

    #[error("Koopman mode solve failed (condition estimate {condition:e})")]
    ModeSolve { condition: f64 },

    #[error("state diverged at {location}")]
    Divergence { location: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("at check point t = {time}: {source}")]
    AtCheckpoint {
        time: f64,
        #[source]
        source: Box<SaskError>,
    },

    #[error("reference data error: {0}")]
    Reference(String),
}

pub type Result<T, E = SaskError> = std::result::Result<T, E>;
