use nalgebra::{DMatrix, DVector};

use crate::linalg::check_psd;
use crate::{Error, Result};

/// Over-parameterised Gaussian linear model: rows `x ~ N(0, Σ)`,
/// labels `y = xᵀβ + ε` with `ε ~ N(0, σ²)`, and `n < p` training samples.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionProblem {
    pub sigma: DMatrix<f64>,
    pub beta: DVector<f64>,
    pub noise_var: f64,
    pub n: usize,
}

impl RegressionProblem {
    pub fn new(sigma: DMatrix<f64>, beta: DVector<f64>, noise_var: f64, n: usize) -> Result<Self> {
        let problem = RegressionProblem {
            sigma,
            beta,
            noise_var,
            n,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if self.sigma.nrows() != p || self.sigma.ncols() != p {
            return Err(Error::invalid(format!(
                "covariance is {}x{} but β has length {p}",
                self.sigma.nrows(),
                self.sigma.ncols()
            )));
        }
        check_psd(&self.sigma, "covariance Σ")?;
        if !(self.noise_var.is_finite() && self.noise_var >= 0.0) {
            return Err(Error::invalid(format!(
                "noise variance must be finite and non-negative, got {}",
                self.noise_var
            )));
        }
        if self.n == 0 || self.n >= p {
            return Err(Error::invalid(format!(
                "need 1 <= n < p, got n = {} and p = {p}",
                self.n
            )));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("β has non-finite entries"));
        }
        Ok(())
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiskEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√trials`; zero for a single trial.
    pub std_error: f64,
    pub trials: usize,
    pub seed: u64,
}

impl RiskEstimate {
    /// Summarises per-trial values, summing strictly in trial order.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let trials = samples.len();
        assert!(trials > 0, "a risk estimate needs at least one trial");
        let n = trials as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let std_error = if trials > 1 {
            let ss: f64 = samples.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1.0)).sqrt() / n.sqrt()
        } else {
            0.0
        };
        RiskEstimate {
            mean,
            std_error,
            trials,
            seed,
        }
    }
}
