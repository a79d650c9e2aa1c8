use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("configuration error at line {line}, field `{field}`: {message}")]
    ConfigField {
        line: usize,
        field: String,
        message: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{quantity} out of domain: {value}")]
    Domain { quantity: String, value: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("solver did not converge: {context} (last residual {residual:.3e})")]
    NonConvergence { context: String, residual: f64 },

    #[error("initial state is not globally stable: competitor improves energy by {gap:.6e}")]
    InitialState { gap: f64 },

    #[error("discrete energy inequality violated at step {step}: slack {slack:.6e}")]
    EnergyInequality { step: usize, slack: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error in {file} line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
