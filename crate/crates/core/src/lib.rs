//! Fractional-type integral operators built from singular matrix families.
//!
//! The operator is
//!
//! ```text
//! T_r f(x) = \int_{R^n} prod_i |x - A_i y|^{-n_i + alpha_i} f(y) dy,   alpha_i = r n_i,
//! ```
//!
//! where `A_1..A_m` are singular with ranks `n_1..n_m` summing to `n`.
//!
//! * [`exactlin`] validates families and normalizes them exactly.
//! * [`kernelops`] evaluates the kernel, its derivative jets and the near/far geometry.
//! * [`atoms`] builds p-atoms with certified bounds and vanishing moments.
//! * [`quadrature`] integrates integrands with power-law singularities on affine sets.
//! * [`oplab`] applies `T_r`, estimates `L^q` norms and runs the verification experiments.

pub mod atoms;
pub mod dense;
pub mod exactlin;
pub mod exec;
pub mod kernelops;
pub mod oplab;
pub mod quadrature;
pub mod sampling;

pub use exec::Exec;
