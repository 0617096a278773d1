//! Numerics for restriction maps from integral Hankel operators on `L²(0,∞)`
//! to Hankel matrices on `ℓ²(ℤ₊)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernel`] evaluable kernels `a(t)` and the Laplace construction of
//!   positive kernels,
//! * [`linalg`] Hankel matrices, singular values and Schatten norms,
//! * [`window`], [`besov`], [`periodize`] the dyadic window, Besov functionals,
//!   lattice sums and the symbol identity,
//! * [`restriction`] pointwise, averaging and convolution restriction maps and
//!   the `Φ₂* H(a) Φ₁` factorizations,
//! * [`laguerre`] Laguerre functions and the Laguerre–Galerkin estimator for
//!   Schatten norms of integral Hankel operators.

pub mod besov;
pub mod error;
pub mod kernel;
pub mod laguerre;
pub mod linalg;
pub mod periodize;
pub mod quad;
pub mod restriction;
pub mod window;

pub use error::{Error, Result};
pub use num_complex::Complex64;
