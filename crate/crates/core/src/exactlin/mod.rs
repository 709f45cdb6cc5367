//! Exact rational linear algebra for singular matrix families.
//!
//! Everything here runs on arbitrary-precision rationals; there is no floating
//! point anywhere in the module. The central routine is
//! [`build_normalization`], which produces invertible `B`, `C` with
//! `B^{-1} A_j C` equal to the canonical projection onto block `j`.

mod family;
mod matrix;
pub mod rational;
mod subspace;

pub use family::{
    build_normalization, family_from_conjugation, random_family, validate_family,
    verify_projections, CheckEntry, FamilySpec, Normalization, ValidationReport,
};
pub use matrix::RationalMatrix;
pub use rational::Rational;
pub use subspace::Subspace;

#[derive(Debug, thiserror::Error)]
pub enum ExactError {
    #[error("cannot parse '{input}': {reason}")]
    Parse { input: String, reason: String },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("ambient dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("basis vectors are linearly dependent")]
    DependentBasis,
    #[error("family fails hypotheses: {0}")]
    InvalidFamily(String),
    #[error("invalid basis choice for block {block}: {reason}")]
    InvalidBasisChoice { block: usize, reason: String },
    #[error("matrix {0} is singular")]
    Singular(&'static str),
    #[error("no invertible draw for seed {seed} within the retry budget")]
    SeedExhausted { seed: u64 },
}
