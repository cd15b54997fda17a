use nalgebra::{DMatrix, DVector};

use super::fit::{bias_from_parts, fit_unchecked, kernel_parts};
use super::{RegressionProblem, RiskEstimate};
use crate::linalg::{check_psd, pinv_psd, sqrt_psd};
use crate::par::{map_indexed, Execution};
use crate::rng::{standard_normal_matrix, standard_normal_vector, trial_rng};
use crate::{Error, Result};

/// Fresh test points per trial in [`excess_risk_mc`].
pub const DEFAULT_TEST_POINTS: usize = 100;

/// Trial count, seed and scheduling for the Monte Carlo estimators.
///
/// Trial `t` draws from its own stream of `seed`, in the order: design `Z`,
/// label noise, test points. Estimators that share a seed therefore see the
/// same designs, and results do not depend on the execution mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McSettings {
    pub trials: usize,
    pub seed: u64,
    pub test_points: usize,
    pub execution: Execution,
}

impl McSettings {
    pub fn new(trials: usize, seed: u64) -> Self {
        McSettings {
            trials,
            seed,
            test_points: DEFAULT_TEST_POINTS,
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_test_points(mut self, test_points: usize) -> Self {
        self.test_points = test_points;
        self
    }
}

/// Validated inputs shared by the three estimators.
struct Prepared {
    sigma_half: DMatrix<f64>,
    n: usize,
    p: usize,
}

fn prepare(theta: &DMatrix<f64>, problem: &RegressionProblem, mc: &McSettings) -> Result<Prepared> {
    problem.validate()?;
    let p = problem.p();
    if theta.shape() != (p, p) {
        return Err(Error::invalid(format!(
            "Θ is {}x{} but the problem has p = {p}",
            theta.nrows(),
            theta.ncols()
        )));
    }
    check_psd(theta, "Θ")?;
    if mc.trials == 0 {
        return Err(Error::invalid("Monte Carlo needs at least one trial"));
    }
    Ok(Prepared {
        sigma_half: sqrt_psd(&problem.sigma),
        n: problem.n,
        p,
    })
}

/// `E_X ‖P⊥β‖²_Σ` over designs with rows iid `N(0, Σ)`.
pub fn bias_mc(
    theta: &DMatrix<f64>,
    problem: &RegressionProblem,
    mc: &McSettings,
) -> Result<RiskEstimate> {
    let prep = prepare(theta, problem, mc)?;
    let samples = map_indexed(mc.execution, mc.trials, |t| {
        let mut rng = trial_rng(mc.seed, t as u64);
        let z = standard_normal_matrix(&mut rng, prep.n, prep.p);
        let x = z * &prep.sigma_half;
        bias_from_parts(&kernel_parts(theta, &x), &x, &problem.beta, &problem.sigma)
    });
    Ok(RiskEstimate::from_samples(&samples, mc.seed))
}

/// `σ² E_Z ‖(ZΣ̃Zᵀ)⁺ZΣ̃‖²_F` with `Σ̃ = Σ^{1/2}ΘΣ^{1/2}` and `Z` standard normal.
pub fn variance_mc(
    theta: &DMatrix<f64>,
    problem: &RegressionProblem,
    mc: &McSettings,
) -> Result<RiskEstimate> {
    let prep = prepare(theta, problem, mc)?;
    let sigma_tilde = &prep.sigma_half * theta * &prep.sigma_half;
    let noise_var = problem.noise_var;
    let samples = map_indexed(mc.execution, mc.trials, |t| {
        let mut rng = trial_rng(mc.seed, t as u64);
        let z = standard_normal_matrix(&mut rng, prep.n, prep.p);
        let m = &z * &sigma_tilde;
        let k = &m * z.transpose();
        let kpm = pinv_psd(&k).matrix * m;
        noise_var * kpm.norm_squared()
    });
    Ok(RiskEstimate::from_samples(&samples, mc.seed))
}

/// Direct estimate of `E[(xᵀβ − f̂(x))²]`: each trial fits on a fresh noisy
/// training set and averages the squared error over `mc.test_points` fresh
/// test points.
pub fn excess_risk_mc(
    theta: &DMatrix<f64>,
    problem: &RegressionProblem,
    mc: &McSettings,
) -> Result<RiskEstimate> {
    let prep = prepare(theta, problem, mc)?;
    if mc.test_points == 0 {
        return Err(Error::invalid("excess risk needs at least one test point"));
    }
    let noise_sd = problem.noise_var.sqrt();
    let beta = &problem.beta;
    let samples = map_indexed(mc.execution, mc.trials, |t| {
        let mut rng = trial_rng(mc.seed, t as u64);
        let z = standard_normal_matrix(&mut rng, prep.n, prep.p);
        let eta: DVector<f64> = standard_normal_vector(&mut rng, prep.n);
        let x = z * &prep.sigma_half;
        let y = &x * beta + eta * noise_sd;
        let fit = fit_unchecked(theta, &x, &y);
        let test = standard_normal_matrix(&mut rng, mc.test_points, prep.p) * &prep.sigma_half;
        let err = &test * (beta - &fit.weights);
        err.norm_squared() / mc.test_points as f64
    });
    Ok(RiskEstimate::from_samples(&samples, mc.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ridged_inverse;

    fn unit_beta(p: usize) -> DVector<f64> {
        DVector::from_element(p, 1.0 / (p as f64).sqrt())
    }

    fn iso_problem(noise_var: f64) -> RegressionProblem {
        RegressionProblem::new(DMatrix::identity(20, 20), unit_beta(20), noise_var, 10).unwrap()
    }

    fn within(est: &RiskEstimate, target: f64, k: f64) -> bool {
        (est.mean - target).abs() <= k * est.std_error
    }

    #[test]
    fn isotropic_bias_is_the_null_space_fraction() {
        let est = bias_mc(
            &DMatrix::identity(20, 20),
            &iso_problem(0.0),
            &McSettings::new(500, 1),
        )
        .unwrap();
        assert!(within(&est, 0.5, 3.0), "{est:?}");
    }

    #[test]
    fn aligned_kernel_has_no_bias() {
        let problem = iso_problem(0.0);
        let theta = &problem.beta * problem.beta.transpose();
        let est = bias_mc(&theta, &problem, &McSettings::new(50, 2)).unwrap();
        assert!(est.mean < 1e-20, "{est:?}");
    }

    #[test]
    fn variance_attains_bound_at_inverse_covariance() {
        let p = 20;
        let d = DVector::from_fn(p, |i, _| 0.5 + i as f64 / 10.0);
        let sigma = DMatrix::from_diagonal(&d);
        let problem = RegressionProblem::new(sigma.clone(), unit_beta(p), 0.01, 10).unwrap();
        let (theta, _) = ridged_inverse(&sigma, 0.0).unwrap();
        let est = variance_mc(&theta, &problem, &McSettings::new(2000, 3)).unwrap();
        assert!(within(&est, 0.01 * 10.0 / 9.0, 3.0), "{est:?}");
    }

    #[test]
    fn misaligned_variance_exceeds_bound() {
        let mut diag = DVector::from_element(20, 1.0);
        diag[19] = 100.0;
        let theta = DMatrix::from_diagonal(&diag);
        let est = variance_mc(&theta, &iso_problem(0.01), &McSettings::new(2000, 4)).unwrap();
        assert!(
            est.mean > 0.01 * 10.0 / 9.0 + 3.0 * est.std_error,
            "{est:?}"
        );
    }

    #[test]
    fn zero_noise_has_zero_variance() {
        let est = variance_mc(
            &DMatrix::identity(20, 20),
            &iso_problem(0.0),
            &McSettings::new(20, 5),
        )
        .unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn risk_is_bias_plus_variance() {
        let problem = iso_problem(0.01);
        let theta = DMatrix::identity(20, 20);
        let mc = McSettings::new(2000, 6);
        let risk = excess_risk_mc(&theta, &problem, &mc).unwrap();
        assert!(within(&risk, 0.5 + 0.01 * 10.0 / 9.0, 3.0), "{risk:?}");
    }

    #[test]
    fn noiseless_aligned_risk_vanishes() {
        let problem = iso_problem(0.0);
        let theta = &problem.beta * problem.beta.transpose();
        let risk = excess_risk_mc(&theta, &problem, &McSettings::new(20, 7)).unwrap();
        assert!(risk.mean < 1e-20);
    }

    #[test]
    fn execution_mode_does_not_change_results() {
        let problem = iso_problem(0.01);
        let theta = DMatrix::from_fn(20, 20, |i, j| 1.0 / (1.0 + i.abs_diff(j) as f64));
        let seq = McSettings::new(64, 8).with_execution(Execution::Sequential);
        let par = seq.with_execution(Execution::Parallel);
        for f in [bias_mc, variance_mc, excess_risk_mc] {
            assert_eq!(
                f(&theta, &problem, &seq).unwrap(),
                f(&theta, &problem, &par).unwrap()
            );
        }
    }

    #[test]
    fn matched_seeds_are_scale_invariant() {
        let problem = iso_problem(0.01);
        let theta = DMatrix::from_fn(20, 20, |i, j| 0.9f64.powi(i.abs_diff(j) as i32));
        let mc = McSettings::new(40, 9);
        let scaled = &theta * 1e3;
        let a = bias_mc(&theta, &problem, &mc).unwrap().mean;
        let b = bias_mc(&scaled, &problem, &mc).unwrap().mean;
        assert!((a - b).abs() <= 1e-10 * a);
        let a = variance_mc(&theta, &problem, &mc).unwrap().mean;
        let b = variance_mc(&scaled, &problem, &mc).unwrap().mean;
        assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn rejects_bad_settings() {
        let problem = iso_problem(0.01);
        let eye = DMatrix::identity(20, 20);
        assert!(bias_mc(&eye, &problem, &McSettings::new(0, 1)).is_err());
        assert!(bias_mc(&DMatrix::identity(5, 5), &problem, &McSettings::new(1, 1)).is_err());
        let mut bad = problem.clone();
        bad.noise_var = -1.0;
        assert!(variance_mc(&eye, &bad, &McSettings::new(1, 1)).is_err());
        assert!(
            excess_risk_mc(&eye, &problem, &McSettings::new(1, 1).with_test_points(0)).is_err()
        );
    }
}
