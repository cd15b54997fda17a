use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{ConvGeometry, FeatureTransform};
use crate::linalg::{check_symmetric, sym_eigen};
use crate::{Error, Result};

/// Entries below this magnitude are skipped when fixing the eigenvector sign.
const SIGN_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSummary {
    /// Eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    /// Unit-norm eigenvector of the largest eigenvalue, with its first
    /// non-negligible entry positive.
    pub leading_eigenvector: DVector<f64>,
    /// `λ₁ - λ₂`; zero when there is a single eigenvalue.
    pub spectral_gap: f64,
}

impl SpectralSummary {
    fn new(eigenvalues: Vec<f64>, mut leading_eigenvector: DVector<f64>) -> Self {
        fix_sign(&mut leading_eigenvector);
        let spectral_gap = match eigenvalues.as_slice() {
            [a, b, ..] => a - b,
            _ => 0.0,
        };
        SpectralSummary {
            eigenvalues,
            leading_eigenvector,
            spectral_gap,
        }
    }

    /// Participation ratio `(Σ v_i²)² / Σ v_i⁴` of the leading eigenvector:
    /// `p` for a uniform vector, 1 for a single pixel.
    pub fn participation_ratio(&self) -> f64 {
        let v = &self.leading_eigenvector;
        let s2: f64 = v.iter().map(|x| x * x).sum();
        let s4: f64 = v.iter().map(|x| x.powi(4)).sum();
        s2 * s2 / s4
    }
}

fn fix_sign(v: &mut DVector<f64>) {
    if let Some(first) = v.iter().find(|x| x.abs() > SIGN_TOL) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Closed-form spectrum of the `dim × dim` tridiagonal Toeplitz matrix with
/// all non-zero entries equal to one: eigenvalues `1 + 2cos(hπ/(dim+1))`
/// for `h = 1..dim`, eigenvectors `∝ sin(h j π/(dim+1))`.
pub fn toeplitz_spectrum(dim: usize) -> Result<SpectralSummary> {
    if dim == 0 {
        return Err(Error::invalid(
            "tridiagonal Toeplitz dimension must be positive",
        ));
    }
    let step = PI / (dim + 1) as f64;
    let eigenvalues = (1..=dim)
        .map(|h| 1.0 + 2.0 * (h as f64 * step).cos())
        .collect();
    Ok(SpectralSummary::new(
        eigenvalues,
        toeplitz_eigenvector(dim, 1),
    ))
}

/// Unit eigenvector `h` (1-based) of the `dim`-dimensional all-ones
/// tridiagonal Toeplitz matrix.
pub fn toeplitz_eigenvector(dim: usize, h: usize) -> DVector<f64> {
    let step = PI / (dim + 1) as f64;
    let scale = (2.0 / (dim + 1) as f64).sqrt();
    DVector::from_fn(dim, |j, _| scale * (h as f64 * (j + 1) as f64 * step).sin())
}

/// Numerical eigendecomposition of a symmetric matrix.
pub fn symmetric_spectrum(m: &DMatrix<f64>) -> Result<SpectralSummary> {
    check_symmetric(m, "matrix")?;
    if m.nrows() == 0 {
        return Err(Error::invalid("empty matrix has no spectrum"));
    }
    let eig = sym_eigen(m);
    let leading = eig.vectors.column(0).into_owned();
    Ok(SpectralSummary::new(
        eig.values.iter().copied().collect(),
        leading,
    ))
}

pub fn spectral_summary(ft: &FeatureTransform) -> Result<SpectralSummary> {
    symmetric_spectrum(ft.theta())
}

/// `λ₂/λ₁` of the zero-padding operator `A` on a geometry: the asymptotic
/// per-step contraction of the normalised recursion towards its limit.
///
/// The top eigenvalue comes from the main diagonal block, `t(s)` in 1-D and
/// `t(s)²` in 2-D with `t(d) = 1 + 2cos(π/(d+1))`. The runner-up is the
/// leading mode of the first off-diagonal block, `t(s-1)` resp.
/// `t(s)·t(s-1)`, so the ratio is `t(s-1)/t(s)` in both cases.
pub fn operator_ratio(geometry: &ConvGeometry) -> f64 {
    let t = |d: usize| 1.0 + 2.0 * (PI / (d + 1) as f64).cos();
    let s = geometry.side();
    if s < 2 {
        return 0.0;
    }
    t(s - 1) / t(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(dim: usize) -> DMatrix<f64> {
        DMatrix::from_fn(dim, dim, |i, j| if i.abs_diff(j) <= 1 { 1.0 } else { 0.0 })
    }

    #[test]
    fn closed_form_small_cases() {
        let one = toeplitz_spectrum(1).unwrap();
        assert_eq!(one.eigenvalues.len(), 1);
        assert!((one.eigenvalues[0] - 1.0).abs() < 1e-15);
        assert!(toeplitz_spectrum(0).is_err());

        let four = toeplitz_spectrum(4).unwrap();
        let expected = [2.618034, 1.618034, 0.381966, -0.618034];
        for (got, want) in four.eigenvalues.iter().zip(expected) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
        let raw = DVector::from_fn(4, |j, _| ((j + 1) as f64 * PI / 5.0).sin());
        let unit = &raw / raw.norm();
        assert!((&four.leading_eigenvector - unit).norm() < 1e-14);
    }

    #[test]
    fn closed_form_eigenvectors_solve_the_matrix() {
        for dim in 1..=12 {
            let t = tridiag(dim);
            let spec = toeplitz_spectrum(dim).unwrap();
            for h in 1..=dim {
                let v = toeplitz_eigenvector(dim, h);
                let lambda = spec.eigenvalues[h - 1];
                assert!((&t * &v - &v * lambda).norm() < 1e-13);
                assert!((v.norm() - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn numeric_summaries_of_trivial_matrices() {
        let half_eye = DMatrix::identity(4, 4) * 0.5;
        let s = symmetric_spectrum(&half_eye).unwrap();
        assert!(s.eigenvalues.iter().all(|&l| (l - 0.5).abs() < 1e-15));
        assert!(s.spectral_gap.abs() < 1e-15);

        let j = DMatrix::from_element(4, 4, 0.25);
        let s = symmetric_spectrum(&j).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!(s.eigenvalues[1..].iter().all(|l| l.abs() < 1e-14));
        let uniform = DVector::from_element(4, 0.5);
        assert!((s.leading_eigenvector - uniform).norm() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(symmetric_spectrum(&m).is_err());
    }

    #[test]
    fn sign_convention_is_deterministic() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let s = symmetric_spectrum(&m).unwrap();
        assert_eq!(s.leading_eigenvector[1], 1.0);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let s = symmetric_spectrum(&m).unwrap();
        assert!(s.leading_eigenvector[0] > 0.0 && s.leading_eigenvector[1] < 0.0);
    }
}
