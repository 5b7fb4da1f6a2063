use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("level {level} out of range (hierarchy has {levels} levels)")]
    LevelOutOfRange { level: usize, levels: usize },

    #[error("vertex {id} out of range on level {level} ({count} vertices)")]
    VertexOutOfRange { level: usize, id: usize, count: usize },

    #[error("level mismatch: expected level {expected}, found {found}")]
    LevelMismatch { expected: usize, found: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("inadmissible iterate on level {level} at vertex {vertex}: {detail}")]
    Inadmissible {
        level: usize,
        vertex: usize,
        detail: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("linear solver failure: {0}")]
    LinearSolver(String),

    #[error("coarse solver did not converge in {iterations} iterations (residual {residual:e})")]
    CoarseNotConverged { iterations: usize, residual: f64 },

    #[error("no convergence after {cycles} cycles (residual {residual:e})")]
    NotConverged { cycles: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
