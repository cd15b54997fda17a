//! Convolution shift bases, the operator `A(X) = Σ_k B_kᵀ X B_k`, and the
//! linear CNTK feature transform `Θ_D ∝ A(Θ_{D-1})`.

mod geometry;
mod operator;
mod spectrum;
mod transform;

pub use geometry::{Architecture, ConvGeometry, Depth, GeometryKind, Padding};
pub use operator::{apply_a, apply_a_with, basis_matrices};
pub use spectrum::{
    operator_ratio, spectral_summary, symmetric_spectrum, toeplitz_eigenvector, toeplitz_spectrum,
    SpectralSummary,
};
pub use transform::{
    converge_transform, feature_transform, feature_transform_fast, initial_transform,
    limiting_transform, propagate, Convergence, FeatureTransform, Propagation, CONVERGENCE_CAP,
    CONVERGENCE_TOL,
};
