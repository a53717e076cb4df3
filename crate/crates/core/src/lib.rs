//! Stein kernels, Stein discrepancies and the functional inequalities built
//! on them: relative entropy, Fisher information, Wasserstein distances,
//! the Ornstein–Uhlenbeck flow, Γ-calculus and polynomial Gaussian
//! functionals.

pub mod error;
pub mod functionals;
pub mod gauss_functionals;
pub mod gamma_calculus;
pub mod inequalities;
pub mod measures;
pub mod montecarlo;
pub mod ou_semigroup;
pub mod parallel;
pub mod quadrature;

pub use error::{Error, Result};
