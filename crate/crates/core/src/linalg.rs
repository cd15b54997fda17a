//! Dense symmetric linear-algebra helpers shared by the kernel and
//! regression modules. Eigendecompositions are delegated to nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Relative tolerance for symmetry: `max |M_ij - M_ji| <= SYMMETRY_TOL * ‖M‖_F`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Relative tolerance for positive semi-definiteness:
/// `λ_min >= -PSD_TOL * ‖M‖_F`.
pub const PSD_TOL: f64 = 1e-10;
/// Relative eigenvalue cutoff of the spectral pseudo-inverse.
pub const PINV_RTOL: f64 = 1e-12;

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn check_square(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    check_square(m, what)?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{what} has non-finite entries")));
    }
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOL * m.norm() {
        return Err(Error::invalid(format!(
            "{what} is not symmetric (max asymmetry {asym:e})"
        )));
    }
    Ok(())
}

/// Checks symmetry and `λ_min >= -PSD_TOL·‖M‖_F`.
///
/// The eigenvalue test is done by attempting a Cholesky factorisation of
/// `M + PSD_TOL·‖M‖_F·I`, which succeeds exactly when the shifted matrix is
/// positive definite and costs a fraction of an eigendecomposition.
pub fn check_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    check_symmetric(m, what)?;
    let norm = m.norm();
    if norm == 0.0 {
        return Ok(());
    }
    let mut shifted = symmetrize(m);
    let shift = PSD_TOL * norm;
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += shift;
    }
    if shifted.cholesky().is_none() {
        return Err(Error::invalid(format!(
            "{what} is not positive semi-definite"
        )));
    }
    Ok(())
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// descending order; column `k` of `vectors` belongs to `values[k]`.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn sym_eigen(m: &DMatrix<f64>) -> SymEigen {
    let n = m.nrows();
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    SymEigen { values, vectors }
}

/// Spectral pseudo-inverse of a symmetric PSD matrix.
#[derive(Clone, Debug)]
pub struct PseudoInverse {
    pub matrix: DMatrix<f64>,
    /// Number of eigenvalues above the cutoff.
    pub rank: usize,
    pub cutoff: f64,
}

/// Pseudo-inverse of a symmetric PSD `n × n` matrix keeping eigenvalues above
/// `n · λ_max · 1e-12`. A zero matrix yields a zero pseudo-inverse of rank 0.
pub fn pinv_psd(k: &DMatrix<f64>) -> PseudoInverse {
    let n = k.nrows();
    if n == 0 {
        return PseudoInverse {
            matrix: DMatrix::zeros(0, 0),
            rank: 0,
            cutoff: 0.0,
        };
    }
    let eig = sym_eigen(k);
    let lmax = eig.values[0].max(0.0);
    let cutoff = n as f64 * lmax * PINV_RTOL;
    let mut matrix = DMatrix::zeros(n, n);
    let mut rank = 0;
    if lmax > 0.0 {
        for (idx, &lambda) in eig.values.iter().enumerate() {
            if lambda <= cutoff {
                break;
            }
            rank += 1;
            let v = eig.vectors.column(idx);
            matrix.ger(1.0 / lambda, &v, &v, 1.0);
        }
    }
    PseudoInverse {
        matrix,
        rank,
        cutoff,
    }
}

/// Symmetric PSD square root; tiny negative eigenvalues are clamped to 0.
pub fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = sym_eigen(m);
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (idx, &lambda) in eig.values.iter().enumerate() {
        if lambda > 0.0 {
            let v = eig.vectors.column(idx);
            out.ger(lambda.sqrt(), &v, &v, 1.0);
        }
    }
    symmetrize(&out)
}

/// Inverse of a symmetric PSD matrix after adding the ridge
/// `rel_ridge · λ_max · I`. Returns the inverse and the absolute ridge used.
pub fn ridged_inverse(m: &DMatrix<f64>, rel_ridge: f64) -> Result<(DMatrix<f64>, f64)> {
    let eig = sym_eigen(m);
    let lmax = eig.values.get(0).copied().unwrap_or(0.0);
    if lmax <= 0.0 {
        return Err(Error::invalid(
            "cannot invert a matrix with no positive spectrum",
        ));
    }
    let ridge = rel_ridge * lmax;
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (idx, &lambda) in eig.values.iter().enumerate() {
        let shifted = lambda.max(0.0) + ridge;
        let v = eig.vectors.column(idx);
        out.ger(1.0 / shifted, &v, &v, 1.0);
    }
    Ok((symmetrize(&out), ridge))
}
