//! Infinite divisibility of squared Gaussian vectors with a shifted mean.
//!
//! The crate decides whether `G²` is infinitely divisible from the inverse
//! covariance, bounds the critical mean shift `α₀` of `(G + α𝟏)²` through the
//! row sums of `Γ⁻¹`, and expands the log-Laplace transform of `(G + α𝟏)²` as a
//! truncated power series so coefficient signs can be inspected directly.
//!
//! Everything works over [`Scalar`], which is either an exact rational or a
//! float. Exact inputs give exact answers.

#![allow(clippy::needless_range_loop)]

pub mod divisibility;
pub mod error;
pub mod matrix;
pub mod mclass;
pub mod oracle;
pub mod scalar;
pub mod series;

pub use error::{Error, Result};
pub use matrix::{RowSums, SymMatrix};
pub use mclass::{MMatrixVerdict, SignatureVector};
pub use scalar::{Scalar, Tolerance};
