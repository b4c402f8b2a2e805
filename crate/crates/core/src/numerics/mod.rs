//! Dense linear algebra, probability primitives, PCA and seeded randomness.
//!
//! Everything here is deterministic: summation orders are fixed and the
//! random generator is counter-based, so results depend only on inputs and
//! seeds.

mod matrix;
mod pca;
mod prob;
mod rng;

pub use matrix::{matmul, Matrix};
pub use pca::{covariance, pca_fit, pca_transform, symmetric_eigen, PcaModel};
pub use prob::{argmax, cross_entropy, log_sum_exp, softmax, softmax_in_place, PROB_FLOOR};
pub use rng::Rng;
pub(crate) use rng::cumulative;
