//! Exact-arithmetic toolkit for the Lindenstrauss basic sequence
//! `x_i = e_i - (e_{2i+1} + e_{2i+2}) / 2` in `l1`.
//!
//! * [`vector`]: rational sparse sequences with `l1`/sup norms.
//! * [`lindenstrauss`]: the basis, its dual representatives, coordinate maps.
//! * [`greedy`]: the thresholding greedy operator and sign-pattern constants.
//! * [`theorem`]: the `3∥x + y∥ >= ∥x∥` inequality and its proof trace.
//! * [`direct_sum`]: the basis of `(Σ ⊕ F_n)_1`.
//! * [`dual`]: growth of the coefficient functionals.
//!
//! No floating point is used in any computation.

pub mod direct_sum;
pub mod dual;
pub mod error;
pub mod greedy;
pub mod lindenstrauss;
pub mod rational;
pub mod theorem;
pub mod vector;

pub use error::{Error, Result};
pub use lindenstrauss::CoeffMap;
pub use rational::Rational;
pub use vector::SparseVec;
