//! Identification of two-hidden-layer networks `f(x) = 1ᵀh(Bᵀg(Aᵀx))` from point queries.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! 1. [`oracle`]: black-box query access and finite-difference derivatives.
//! 2. [`subspace`]: PCA of sampled Hessians, which yields the matrix space spanned by
//!    `a_i ⊗ a_i` and the entangled `v_ℓ ⊗ v_ℓ`.
//! 3. [`rank1`]: spectral-norm ascent inside that space, which finds its rank-1 elements.
//! 4. [`cluster`]: collapses many sign-ambiguous candidates into one profile per neuron.
//! 5. [`attribution`]: sorts profiles into first and second layer by gradient decay.
//! 6. [`refit`]: fits the remaining diagonal scalings and biases by gradient descent.
//!
//! [`harness`] generates test networks, runs the whole chain and reports error measures.
//! The runnable programs in `examples/` walk through each stage.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod attribution;
pub mod cluster;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod network;
pub mod oracle;
pub mod rank1;
pub mod refit;
pub mod rng;
pub mod subspace;

pub use activation::Activation;
pub use error::{Error, Result};
pub use network::TwoLayerNetwork;
pub use oracle::QueryOracle;
pub use subspace::SymSubspace;
