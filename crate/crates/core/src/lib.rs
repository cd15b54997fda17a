//! Linear convolutional neural tangent kernels as depth-dependent feature
//! transforms, and the bias/variance behaviour of ridgeless regression under
//! arbitrary linear feature transforms.
//!
//! The crate is organised bottom-up:
//!
//! * [`cntk`] builds the convolution shift bases, applies the operator
//!   `A(X) = Σ_k B_kᵀ X B_k`, iterates the feature-transform recursion and
//!   provides the closed-form spectra and infinite-depth limits.
//! * [`linreg`] fits ridgeless kernel regression with a linear kernel
//!   `K(x, x') = xᵀΘx'` and estimates bias, variance and excess risk by
//!   Monte Carlo.
//! * [`data`] generates Gaussian problems and ingests MNIST-style IDX files.
//! * [`experiments`] drives configured depth sweeps, the eigenvector gallery
//!   and the MNIST 0/1 experiment, writing CSV and PGM outputs.
//!
//! Monte Carlo trials run on rayon when the `parallel` feature is enabled
//! (the default). Every reduction is performed in trial order, so results
//! are bit-identical at any thread count and with the feature disabled.

pub mod cntk;
pub mod data;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod linreg;
pub mod par;
pub mod rng;

pub use error::{Error, IdxError, Result};
pub use par::Execution;
