//! # wignerlab
//!
//! Numerical toolkit for linear maps on the real space of Hermitian operators
//! that send rank-k projectors onto rank-k projectors.
//!
//! - [`operator_space`]: Hermitian matrices, the orthonormal Hermitian basis,
//!   projectors, Hilbert-Schmidt geometry and seeded Haar sampling.
//! - [`superop`]: linear maps as real `n² x n²` matrices, with composition,
//!   HS-adjoint, inverse, Choi matrices and spectra.
//! - [`canonical_maps`]: unitary/antiunitary conjugations, the reduction map,
//!   the `n = 2k` involution and the Breuer-Hall map.
//! - [`preserver`]: sampled structural checks (rank-k preservation,
//!   orthogonality, positivity, trace-norm contraction, spectra).
//! - [`wigner`]: recovery of `X -> U X U†` / `X -> U Xᵗ U†` forms, possibly
//!   composed with the reduction map.
//! - [`ksequence`]: the `k_{i+1} = n mod k_i` recursion and its verdicts.
//! - [`search`]: gradient-descent probe for projector-preserving maps at `n = 2k`.
//! - [`cli_io`]: map files, structured reports and the command-line driver.

#![forbid(unsafe_code)]
// NaN-rejecting guards are written as `!(x <= tol)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical_maps;
pub mod cli_io;
mod error;
pub mod ksequence;
pub mod operator_space;
pub mod preserver;
pub mod search;
pub mod superop;
pub mod wigner;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub use operator_space::{HermitianBasis, HermitianMatrix, Projector};
pub use superop::{ChoiMatrix, Superoperator};

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
