use nalgebra::{DMatrix, DVector};

use crate::linalg::{check_psd, sqrt_psd};
use crate::rng::{aux_rng, purpose, standard_normal_matrix, standard_normal_vector};
use crate::{Error, Result};

/// Relative residual allowed by [`min_norm_solve`].
pub const RESIDUAL_RTOL: f64 = 1e-8;

/// Draws `n` rows `x ~ N(0, Σ)` and labels `y = Xβ + η`, `η ~ N(0, σ²)`.
pub fn gaussian_problem(
    sigma: &DMatrix<f64>,
    beta: &DVector<f64>,
    noise_var: f64,
    n: usize,
    seed: u64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let p = beta.len();
    if sigma.shape() != (p, p) {
        return Err(Error::invalid(format!(
            "Σ is {}x{} but β has length {p}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    check_psd(sigma, "Σ")?;
    if n == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    if !(noise_var.is_finite() && noise_var >= 0.0) {
        return Err(Error::invalid(format!(
            "noise variance must be non-negative, got {noise_var}"
        )));
    }
    let mut rng = aux_rng(seed, purpose::GAUSSIAN_PROBLEM);
    let x = standard_normal_matrix(&mut rng, n, p) * sqrt_psd(sigma);
    let eta = standard_normal_vector(&mut rng, n);
    let y = &x * beta + eta * noise_var.sqrt();
    Ok((x, y))
}

/// Minimum-Euclidean-norm solution of `Xβ = y` for a wide or square `X`,
/// `β = Xᵀ(XXᵀ)⁺y`, computed from the SVD of `X`. Singular values with
/// `σ² <= m·σ_max²·1e-12` are dropped, matching the pseudo-inverse cutoff
/// used for kernel matrices.
pub fn min_norm_solve(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, p) = x.shape();
    if y.len() != m {
        return Err(Error::invalid(format!(
            "system has {m} rows but {} right-hand sides",
            y.len()
        )));
    }
    if m > p {
        return Err(Error::invalid(format!(
            "minimum-norm interpolation needs m <= p, got m = {m}, p = {p}"
        )));
    }
    if m == 0 {
        return Ok(DVector::zeros(p));
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * (m as f64 * 1e-12).sqrt();
    let beta = if smax > 0.0 {
        svd.solve(y, eps)
            .map_err(|e| Error::invalid(e.to_string()))?
    } else {
        DVector::zeros(p)
    };
    let residual = (x * &beta - y).norm();
    let tolerance = RESIDUAL_RTOL * y.norm();
    if residual > tolerance {
        return Err(Error::Inconsistent {
            residual,
            tolerance,
        });
    }
    Ok(beta)
}
