//! Structure-preserving finite-volume solver for one-dimensional Fokker-Planck
//! equations `f_t = (  (kappa_eps f)_x + tanh(x/eps) f )_x` whose diffusion
//! coefficient is built so that a prescribed even density is the steady state.

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod integrators;
pub mod models;
pub mod output;
pub mod quadrature;
pub mod scheme;

pub use error::{FpError, Result};
pub use experiment::{run_experiment, run_experiment_with, RunConfig, RunOutput};
