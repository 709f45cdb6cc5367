//! The operator laboratory: `T_r` applied to atoms and bumps, `L^q` norm
//! estimates with a far-field tail bound, the verification experiments, the
//! §4 reproduction and the command line front end.

mod apply;
pub mod cli;
pub mod config;
pub mod experiments;
mod norms;
mod report;

pub use apply::{apply_tr, conjugated_apply, normalized_apply, Abs, ConjugatedValues, PushForward, SmoothBump, Source};
pub use config::{ExperimentConfig, FamilyConfig};
pub use norms::{critical_q, lq_norm_tr, lq_norm_tr_atom, NormEstimate, NormOptions};
pub use report::{linear_fit, loglog_slope, Check, Record, Report};

use crate::atoms::AtomError;
use crate::exactlin::ExactError;
use crate::kernelops::KernelError;
use crate::quadrature::QuadError;

#[derive(Debug, thiserror::Error)]
pub enum OplabError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("unsupported parameters: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{what} differs at {entry}: expected {expected}, got {got}")]
    Mismatch {
        what: String,
        entry: String,
        expected: String,
        got: String,
    },
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Atom(#[from] AtomError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
