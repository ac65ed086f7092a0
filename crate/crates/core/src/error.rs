use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, FpError>;

#[derive(Debug, Error)]
pub enum FpError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("integrand returned non-finite value {value} at node x = {x}")]
    NonFiniteIntegrand { x: f64, value: f64 },

    #[error(
        "semi-infinite quadrature did not converge after {panels} panels \
         (accumulated {accumulated:e}, last increment {last_increment:e})"
    )]
    QuadratureBudget {
        panels: usize,
        accumulated: f64,
        last_increment: f64,
    },

    #[error("x = {x} is outside the tabulated range [{lo}, {hi}]")]
    OutOfTable { x: f64, lo: f64, hi: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("tridiagonal system is singular at row {row} (pivot {pivot:e})")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("non-finite value in solution at step {step}")]
    NonFiniteState { step: usize },

    #[error("negative density {min:e} at node {node} after step {step}")]
    NegativeDensity { step: usize, node: usize, min: f64 },

    #[error("time step {dt:e} exceeds the CFL bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error in {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl FpError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FpError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors raised by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            FpError::NonFiniteIntegrand { .. }
                | FpError::QuadratureBudget { .. }
                | FpError::SingularSystem { .. }
                | FpError::NonFiniteState { .. }
                | FpError::NegativeDensity { .. }
                | FpError::CflViolation { .. }
        )
    }
}
