//! Ridgeless kernel regression with a linear kernel `K(x, x') = xᵀΘx'`,
//! and Monte Carlo estimates of its bias, variance and excess risk when the
//! covariates are Gaussian.

pub(crate) use fit::fit_unchecked;

mod fit;
mod mc;
mod problem;

pub use fit::{
    alignment_g, bias_conditional, fit_ridgeless, rank_one_gain, variance_conditional,
    variance_lower_bound, PredictorFit,
};
pub use mc::{bias_mc, excess_risk_mc, variance_mc, McSettings, DEFAULT_TEST_POINTS};
pub use problem::{RegressionProblem, RiskEstimate};
