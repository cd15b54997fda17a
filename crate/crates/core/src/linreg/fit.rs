use nalgebra::{DMatrix, DVector};

use crate::linalg::{check_psd, pinv_psd, PseudoInverse};
use crate::{Error, Result};

/// Minimum-norm interpolating predictor in the Θ-geometry,
/// `f̂(x) = xᵀΘXᵀ(XΘXᵀ)⁺Y`.
#[derive(Clone, Debug)]
pub struct PredictorFit {
    pub x_train: DMatrix<f64>,
    pub y_train: DVector<f64>,
    /// `α = K⁺Y` with `K = XΘXᵀ`.
    pub dual_weights: DVector<f64>,
    /// Number of eigenvalues of `K` kept by the pseudo-inverse.
    pub effective_rank: usize,
    /// Primal weights `w = ΘXᵀα`, so that `f̂(x) = xᵀw`.
    pub weights: DVector<f64>,
}

impl PredictorFit {
    pub fn predict(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::invalid(format!(
                "query has dimension {} but the predictor expects {}",
                x.len(),
                self.weights.len()
            )));
        }
        Ok(x.dot(&self.weights))
    }

    /// Predictions for every row of `x`.
    pub fn predict_rows(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.ncols() != self.weights.len() {
            return Err(Error::invalid(format!(
                "queries have dimension {} but the predictor expects {}",
                x.ncols(),
                self.weights.len()
            )));
        }
        Ok(x * &self.weights)
    }
}

/// Kernel matrix `K = XΘXᵀ` and the cross term `ΘXᵀ`.
pub(crate) struct KernelParts {
    pub theta_xt: DMatrix<f64>,
    pub pinv: PseudoInverse,
}

pub(crate) fn kernel_parts(theta: &DMatrix<f64>, x: &DMatrix<f64>) -> KernelParts {
    let theta_xt = theta * x.transpose();
    let k = x * &theta_xt;
    KernelParts {
        pinv: pinv_psd(&k),
        theta_xt,
    }
}

fn check_shapes(theta: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<()> {
    let p = theta.nrows();
    if !theta.is_square() || x.ncols() != p {
        return Err(Error::invalid(format!(
            "Θ is {}x{} but the data have {} columns",
            theta.nrows(),
            theta.ncols(),
            x.ncols()
        )));
    }
    Ok(())
}

fn check_vector(v: &DVector<f64>, len: usize, what: &str) -> Result<()> {
    if v.len() != len {
        return Err(Error::invalid(format!(
            "{what} has length {} but {len} was expected",
            v.len()
        )));
    }
    Ok(())
}

pub(crate) fn fit_unchecked(
    theta: &DMatrix<f64>,
    x_train: &DMatrix<f64>,
    y_train: &DVector<f64>,
) -> PredictorFit {
    let parts = kernel_parts(theta, x_train);
    let dual_weights = &parts.pinv.matrix * y_train;
    let weights = &parts.theta_xt * &dual_weights;
    PredictorFit {
        x_train: x_train.clone(),
        y_train: y_train.clone(),
        dual_weights,
        effective_rank: parts.pinv.rank,
        weights,
    }
}

/// Fits the ridgeless kernel regressor. Requires `n < p` and a PSD `Θ`.
pub fn fit_ridgeless(
    theta: &DMatrix<f64>,
    x_train: &DMatrix<f64>,
    y_train: &DVector<f64>,
) -> Result<PredictorFit> {
    check_shapes(theta, x_train)?;
    check_vector(y_train, x_train.nrows(), "label vector")?;
    let (n, p) = x_train.shape();
    if n >= p {
        return Err(Error::invalid(format!(
            "ridgeless regression needs n < p, got n = {n}, p = {p}"
        )));
    }
    check_psd(theta, "Θ")?;
    Ok(fit_unchecked(theta, x_train, y_train))
}

/// `P⊥β = β − ΘXᵀK⁺Xβ`.
fn residual_direction(parts: &KernelParts, x: &DMatrix<f64>, beta: &DVector<f64>) -> DVector<f64> {
    let u = x * beta;
    beta - &parts.theta_xt * (&parts.pinv.matrix * u)
}

pub(crate) fn bias_from_parts(
    parts: &KernelParts,
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    sigma: &DMatrix<f64>,
) -> f64 {
    let r = residual_direction(parts, x, beta);
    r.dot(&(sigma * &r)).max(0.0)
}

/// Bias of the ridgeless predictor for a fixed design, `‖P⊥β‖²_Σ`.
pub fn bias_conditional(
    theta: &DMatrix<f64>,
    beta: &DVector<f64>,
    sigma: &DMatrix<f64>,
    x_train: &DMatrix<f64>,
) -> Result<f64> {
    check_shapes(theta, x_train)?;
    let p = theta.nrows();
    check_vector(beta, p, "β")?;
    if sigma.shape() != (p, p) {
        return Err(Error::invalid(format!(
            "Σ is {}x{} but Θ is {p}x{p}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    check_psd(theta, "Θ")?;
    Ok(bias_from_parts(
        &kernel_parts(theta, x_train),
        x_train,
        beta,
        sigma,
    ))
}

/// Noise-driven variance for a fixed design,
/// `σ² Tr[K⁺ XΘΣΘXᵀ K⁺]`.
pub fn variance_conditional(
    theta: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    x_train: &DMatrix<f64>,
    noise_var: f64,
) -> Result<f64> {
    check_shapes(theta, x_train)?;
    if !(noise_var.is_finite() && noise_var >= 0.0) {
        return Err(Error::invalid(format!(
            "noise variance must be non-negative, got {noise_var}"
        )));
    }
    check_psd(theta, "Θ")?;
    let parts = kernel_parts(theta, x_train);
    // XΘΣΘXᵀ = (ΘXᵀ)ᵀ Σ (ΘXᵀ)
    let inner = parts.theta_xt.transpose() * sigma * &parts.theta_xt;
    let kp = &parts.pinv.matrix;
    Ok(noise_var * (kp * inner * kp).trace().max(0.0))
}

/// `z = uᵀK⁺u` with `u = Xβ`: the rank-one gain that shrinks the bias by
/// `1/(1+z)²` when `ββᵀ` is added to `Θ`.
pub fn rank_one_gain(
    theta: &DMatrix<f64>,
    beta: &DVector<f64>,
    x_train: &DMatrix<f64>,
) -> Result<f64> {
    check_shapes(theta, x_train)?;
    check_vector(beta, theta.nrows(), "β")?;
    let u = x_train * beta;
    let k = x_train * theta * x_train.transpose();
    let kp = pinv_psd(&k).matrix;
    Ok(u.dot(&(kp * &u)))
}

/// Misalignment `g = 1 − (uᵀΘu)²/‖Θ‖²_F` with `u = β/‖β‖`: 0 when `Θ ∝ ββᵀ`,
/// 1 when β lies in the null space of Θ.
pub fn alignment_g(theta: &DMatrix<f64>, beta: &DVector<f64>) -> Result<f64> {
    if !theta.is_square() || theta.nrows() != beta.len() {
        return Err(Error::invalid(format!(
            "Θ is {}x{} but β has length {}",
            theta.nrows(),
            theta.ncols(),
            beta.len()
        )));
    }
    let bnorm = beta.norm();
    if bnorm == 0.0 || !bnorm.is_finite() {
        return Err(Error::invalid("alignment needs a non-zero, finite β"));
    }
    let tnorm = theta.norm();
    if tnorm == 0.0 || !tnorm.is_finite() {
        return Err(Error::invalid("alignment needs a non-zero, finite Θ"));
    }
    let u = beta / bnorm;
    let quad = u.dot(&(theta * &u)) / tnorm;
    Ok((1.0 - quad * quad).clamp(0.0, 1.0))
}

/// Lower bound `σ²n/(p−n−1)` on the expected variance over all Θ.
pub fn variance_lower_bound(noise_var: f64, n: usize, p: usize) -> Result<f64> {
    if p <= n + 1 {
        return Err(Error::invalid(format!(
            "variance bound needs p > n + 1, got n = {n}, p = {p}"
        )));
    }
    if !(noise_var.is_finite() && noise_var >= 0.0) {
        return Err(Error::invalid(format!(
            "noise variance must be non-negative, got {noise_var}"
        )));
    }
    Ok(noise_var * n as f64 / (p - n - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_normal_matrix, standard_normal_vector, trial_rng};
    use proptest::prelude::*;

    fn random_psd(p: usize, rank: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = trial_rng(seed, 0);
        let a = standard_normal_matrix(&mut rng, p, rank);
        &a * a.transpose()
    }

    fn unit(p: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(p);
        v[i] = 1.0;
        v
    }

    #[test]
    fn identity_kernel_on_coordinate_rows() {
        let p = 6;
        let x = DMatrix::from_fn(3, p, |i, j| if j == 2 * i { 1.0 } else { 0.0 });
        let y = DVector::from_vec(vec![1.5, -2.0, 0.25]);
        let fit = fit_ridgeless(&DMatrix::identity(p, p), &x, &y).unwrap();
        assert_eq!(fit.effective_rank, 3);
        assert_eq!(fit.predict_rows(&x).unwrap(), y);
        // Projection regression: weights live on the observed coordinates only.
        let expected = DVector::from_vec(vec![1.5, 0.0, -2.0, 0.0, 0.25, 0.0]);
        assert!((&fit.weights - expected).norm() < 1e-15);
    }

    #[test]
    fn aligned_kernel_recovers_beta() {
        let p = 7;
        let mut rng = trial_rng(3, 0);
        let beta = standard_normal_vector(&mut rng, p);
        let x = standard_normal_matrix(&mut rng, 3, p);
        let theta = &beta * beta.transpose();
        let fit = fit_ridgeless(&theta, &x, &(&x * &beta)).unwrap();
        assert_eq!(fit.effective_rank, 1);
        for i in 0..p {
            let e = unit(p, i);
            assert!((fit.predict(&e).unwrap() - beta[i]).abs() < 1e-10);
        }
        let sigma = DMatrix::identity(p, p);
        let b = bias_conditional(&theta, &beta, &sigma, &x).unwrap();
        assert!(b <= 1e-10 * beta.norm_squared());
    }

    #[test]
    fn matches_independent_dense_solve() {
        let (p, n) = (8, 4);
        let theta = random_psd(p, p, 11);
        let mut rng = trial_rng(12, 0);
        let x = standard_normal_matrix(&mut rng, n, p);
        let y = standard_normal_vector(&mut rng, n);
        let fit = fit_ridgeless(&theta, &x, &y).unwrap();

        // K is full rank here, so K⁺ = V diag(1/λ) Vᵀ from nalgebra's own solver.
        let k = &x * &theta * x.transpose();
        let eig = k.clone().symmetric_eigen();
        let inv_vals = eig.eigenvalues.map(|l| 1.0 / l);
        let kinv =
            &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
        let queries = standard_normal_matrix(&mut rng, 5, p);
        let want = &queries * &theta * x.transpose() * kinv * &y;
        let got = fit.predict_rows(&queries).unwrap();
        assert!((got - want).amax() < 1e-10);
    }

    #[test]
    fn zero_kernel_gives_zero_predictor() {
        let theta = DMatrix::zeros(5, 5);
        let x = DMatrix::from_element(2, 5, 1.0);
        let fit = fit_ridgeless(&theta, &x, &DVector::from_vec(vec![1.0, 2.0])).unwrap();
        assert_eq!(fit.effective_rank, 0);
        assert!(fit.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = DMatrix::from_element(2, 3, 1.0);
        let y = DVector::from_element(2, 1.0);
        let indefinite = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0]));
        assert!(fit_ridgeless(&indefinite, &x, &y).is_err());
        assert!(fit_ridgeless(&DMatrix::identity(4, 4), &x, &y).is_err());
        assert!(fit_ridgeless(&DMatrix::identity(2, 2), &DMatrix::zeros(2, 2), &y).is_err());
        let beta = DVector::from_element(4, 1.0);
        let eye = DMatrix::identity(3, 3);
        assert!(bias_conditional(&eye, &beta, &eye, &x).is_err());
    }

    #[test]
    fn projection_bias_for_identity() {
        let p = 5;
        let x = DMatrix::from_fn(2, p, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
        let beta = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let eye = DMatrix::identity(p, p);
        let b = bias_conditional(&eye, &beta, &eye, &x).unwrap();
        let proj = &beta - x.transpose() * (&x * &beta);
        assert!((b - proj.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn alignment_closed_forms() {
        let beta = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let aligned = &beta * beta.transpose();
        assert!(alignment_g(&aligned, &beta).unwrap() < 1e-14);
        let unit_b = DVector::from_vec(vec![0.6, 0.8, 0.0, 0.0]);
        assert!((alignment_g(&DMatrix::identity(4, 4), &unit_b).unwrap() - 0.75).abs() < 1e-15);
        let null = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 1.0, 2.0]));
        assert_eq!(alignment_g(&null, &unit_b).unwrap(), 1.0);
        assert!(alignment_g(&DMatrix::zeros(4, 4), &unit_b).is_err());
        assert!(alignment_g(&null, &DVector::zeros(4)).is_err());
    }

    #[test]
    fn variance_bound_formula() {
        assert!((variance_lower_bound(0.01, 10, 20).unwrap() - 0.01 * 10.0 / 9.0).abs() < 1e-17);
        assert_eq!(variance_lower_bound(0.0, 3, 9).unwrap(), 0.0);
        assert_eq!(variance_lower_bound(1.0, 1, 3).unwrap(), 1.0);
        assert!(variance_lower_bound(1.0, 2, 3).is_err());
        assert!(variance_lower_bound(-1.0, 1, 3).is_err());
    }

    #[test]
    fn variance_conditional_scales_with_noise() {
        let (p, n) = (6, 3);
        let theta = random_psd(p, p, 5);
        let mut rng = trial_rng(6, 0);
        let x = standard_normal_matrix(&mut rng, n, p);
        let sigma = DMatrix::identity(p, p);
        let v1 = variance_conditional(&theta, &sigma, &x, 1.0).unwrap();
        let v2 = variance_conditional(&theta, &sigma, &x, 0.25).unwrap();
        assert!(v1 > 0.0);
        assert!((v2 - 0.25 * v1).abs() < 1e-14 * v1);
        assert_eq!(variance_conditional(&theta, &sigma, &x, 0.0).unwrap(), 0.0);
        assert!(variance_conditional(&theta, &sigma, &x, -1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn interpolates_training_labels(seed in any::<u64>(), n in 1usize..6, extra in 1usize..6) {
            let p = n + extra;
            let theta = random_psd(p, p, seed);
            let mut rng = trial_rng(seed, 1);
            let x = standard_normal_matrix(&mut rng, n, p);
            let y = standard_normal_vector(&mut rng, n);
            let fit = fit_ridgeless(&theta, &x, &y).unwrap();
            prop_assume!(fit.effective_rank == n);
            let resid = fit.predict_rows(&x).unwrap() - &y;
            prop_assert!(resid.amax() <= 1e-8 * y.amax().max(1.0));
        }

        #[test]
        fn predictions_are_scale_invariant(seed in any::<u64>(), c in 1e-3f64..1e3) {
            let (p, n) = (7, 3);
            let theta = random_psd(p, 4, seed);
            let mut rng = trial_rng(seed, 2);
            let x = standard_normal_matrix(&mut rng, n, p);
            let y = standard_normal_vector(&mut rng, n);
            let q = standard_normal_matrix(&mut rng, 4, p);
            let a = fit_ridgeless(&theta, &x, &y).unwrap().predict_rows(&q).unwrap();
            let b = fit_ridgeless(&(&theta * c), &x, &y).unwrap().predict_rows(&q).unwrap();
            prop_assert!((a - b).amax() <= 1e-10 * (1.0 + y.amax()));
        }

        #[test]
        fn bias_is_nonnegative_and_g_in_unit_interval(seed in any::<u64>(), rank in 1usize..7) {
            let (p, n) = (6, 3);
            let theta = random_psd(p, rank, seed);
            let sigma = random_psd(p, p, seed ^ 0xabc);
            let mut rng = trial_rng(seed, 3);
            let x = standard_normal_matrix(&mut rng, n, p);
            let beta = standard_normal_vector(&mut rng, p);
            prop_assert!(bias_conditional(&theta, &beta, &sigma, &x).unwrap() >= 0.0);
            let g = alignment_g(&theta, &beta).unwrap();
            prop_assert!((0.0..=1.0).contains(&g));
        }

        #[test]
        fn rank_one_shrinkage_identity(seed in any::<u64>(), scale in 0.1f64..10.0) {
            let (p, n) = (9, 4);
            let theta = random_psd(p, p, seed) * scale;
            let mut rng = trial_rng(seed, 4);
            let x = standard_normal_matrix(&mut rng, n, p);
            let beta = standard_normal_vector(&mut rng, p);
            let sigma = random_psd(p, p, seed ^ 0x5eed);
            let before = bias_conditional(&theta, &beta, &sigma, &x).unwrap();
            let z = rank_one_gain(&theta, &beta, &x).unwrap();
            let updated = &theta + &beta * beta.transpose();
            let after = bias_conditional(&updated, &beta, &sigma, &x).unwrap();
            let predicted = before / ((1.0 + z) * (1.0 + z));
            prop_assert!(z >= 0.0);
            prop_assert!((after - predicted).abs() <= 1e-8 * before.max(1e-300),
                "after {after} predicted {predicted}");
        }
    }
}
