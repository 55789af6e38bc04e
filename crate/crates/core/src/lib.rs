//! Trotter-Suzuki product formulas for the periodic disordered Heisenberg
//! chain, and CMA-ES search over the Suzuki recurrence coefficients to
//! reduce the spectral-norm simulation error at a fixed gate count.
//!
//! The dense kernels in [`linalg`], [`model`] and [`trotter`] are generic
//! over the real scalar ([`Real`], implemented for `f32` and `f64`). The
//! optimization layers ([`fitness`], [`cmaes`], [`sampler`], [`harness`])
//! run in `f64` and use the aliases below.

pub mod cmaes;
pub mod fitness;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod trotter;

pub use scalar::Real;

/// Double-precision complex scalar.
pub type C64 = num_complex::Complex<f64>;
/// Double-precision operator.
pub type Matrix = linalg::ComplexMatrix<f64>;
/// Single-precision operator.
pub type Matrix32 = linalg::ComplexMatrix<f32>;
/// Double-precision eigendecomposition.
pub type Eig = linalg::HermitianEig<f64>;

pub use fitness::{error_reduction_pct, exact_propagator, FitnessContext};
pub use model::{ChainInstance, LocalTerm, TermKind, TermOrdering};
pub use trotter::{suzuki_seed, DecompositionSpec, ExpPath, PVector};
