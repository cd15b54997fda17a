use nalgebra::{DMatrix, DVector};

use super::config::{BetaSource, Family, SigmaSource, SweepConfig};
use super::output::{fmt_f64, metadata, CsvTable, OutputSet};
use super::{depth_label, kernel_at};
use crate::cntk::Depth;
use crate::data::{read_matrix_csv, read_vector_csv};
use crate::linalg::ridged_inverse;
use crate::linreg::{
    alignment_g, bias_mc, excess_risk_mc, variance_mc, McSettings, RegressionProblem,
};
use crate::rng::{aux_rng, purpose, standard_normal_vector};
use crate::{Error, Execution, Result};

/// Ridge added before inverting `Θ_D` for `sigma = inverse_theta:D`,
/// relative to `λ_max(Θ_D)`.
pub const SIGMA_RIDGE_RTOL: f64 = 1e-10;

pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_META_FILE: &str = "sweep_meta.txt";

/// One row of the sweep table.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthSweepRecord {
    pub depth: Depth,
    pub bias_mean: f64,
    pub bias_se: f64,
    pub var_mean: f64,
    pub var_se: f64,
    pub risk_mean: f64,
    pub risk_se: f64,
    pub g: f64,
}

/// The regression problem a config describes, with how `Σ` was obtained.
#[derive(Clone, Debug)]
pub struct ResolvedProblem {
    pub problem: RegressionProblem,
    /// Absolute ridge `ε` added to `Θ_D` before inversion, if any.
    pub sigma_ridge: Option<f64>,
    /// Factor applied to the inverse so that `tr Σ = p`.
    pub sigma_scale: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepRun {
    pub records: Vec<DepthSweepRecord>,
    pub resolved: ResolvedProblem,
}

fn shape_error(key: &str, message: String) -> Error {
    Error::config(None, key, message)
}

/// Builds `Σ`, `β` and the remaining problem parameters from the config.
pub fn resolve_problem(cfg: &SweepConfig) -> Result<ResolvedProblem> {
    let p = cfg.geometry.p();
    if cfg.n >= p {
        return Err(shape_error(
            "n",
            format!("need n < p, got n = {} and p = {p}", cfg.n),
        ));
    }
    let (sigma, sigma_ridge, sigma_scale) = match &cfg.sigma {
        SigmaSource::Identity => (DMatrix::identity(p, p), None, None),
        SigmaSource::InverseTheta(d) => {
            let theta = kernel_at(cfg, Depth::Finite(*d))?;
            let (inv, ridge) = ridged_inverse(&theta, SIGMA_RIDGE_RTOL)?;
            let scale = p as f64 / inv.trace();
            (inv * scale, Some(ridge), Some(scale))
        }
        SigmaSource::File(path) => {
            let m = read_matrix_csv(path)?;
            if m.shape() != (p, p) {
                return Err(shape_error(
                    "sigma",
                    format!(
                        "{} is {}x{}, expected {p}x{p}",
                        path.display(),
                        m.nrows(),
                        m.ncols()
                    ),
                ));
            }
            (m, None, None)
        }
    };
    let beta = match &cfg.beta {
        BetaSource::Synthetic => {
            let v = standard_normal_vector(&mut aux_rng(cfg.seed, purpose::SYNTHETIC_BETA), p);
            let norm = v.norm();
            v / norm
        }
        BetaSource::File(path) => {
            let v = read_vector_csv(path)?;
            if v.len() != p {
                return Err(shape_error(
                    "beta",
                    format!("{} has {} entries, expected {p}", path.display(), v.len()),
                ));
            }
            v
        }
    };
    Ok(ResolvedProblem {
        problem: RegressionProblem::new(sigma, beta, cfg.noise_var, cfg.n)?,
        sigma_ridge,
        sigma_scale,
    })
}

fn family_theta(cfg: &SweepConfig, depth: Depth, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
    match (cfg.family, depth) {
        (Family::Cntk, _) => kernel_at(cfg, depth),
        (Family::Aligned { center }, Depth::Finite(d)) => {
            let p = beta.len();
            let shift = d.abs_diff(center) as f64;
            Ok(beta * beta.transpose() + DMatrix::identity(p, p) * shift)
        }
        (Family::Aligned { .. }, Depth::Infinite) => {
            Err(Error::invalid("the aligned family has no infinite depth"))
        }
    }
}

/// Runs the three estimators and the alignment at every configured depth.
/// All depths share the master seed, so they see the same designs.
pub fn compute_sweep(cfg: &SweepConfig, execution: Execution) -> Result<SweepRun> {
    let resolved = resolve_problem(cfg)?;
    let problem = &resolved.problem;
    let mc = |trials| McSettings {
        trials,
        seed: cfg.seed,
        test_points: cfg.test_points,
        execution,
    };
    let mut records = Vec::with_capacity(cfg.depths.len());
    for &depth in &cfg.depths {
        let theta = family_theta(cfg, depth, &problem.beta)?;
        let bias = bias_mc(&theta, problem, &mc(cfg.bias_trials))?;
        let var = variance_mc(&theta, problem, &mc(cfg.variance_trials))?;
        let risk = excess_risk_mc(&theta, problem, &mc(cfg.risk_trials))?;
        records.push(DepthSweepRecord {
            depth,
            bias_mean: bias.mean,
            bias_se: bias.std_error,
            var_mean: var.mean,
            var_se: var.std_error,
            risk_mean: risk.mean,
            risk_se: risk.std_error,
            g: alignment_g(&theta, &problem.beta)?,
        });
    }
    Ok(SweepRun { records, resolved })
}

/// `sweep.csv` and `sweep_meta.txt`.
pub fn sweep_outputs(cfg: &SweepConfig, run: &SweepRun) -> OutputSet {
    let mut table = CsvTable::new(&[
        "depth",
        "bias_mean",
        "bias_se",
        "var_mean",
        "var_se",
        "risk_mean",
        "risk_se",
        "g",
    ]);
    for r in &run.records {
        table.push_row(&[
            depth_label(r.depth),
            fmt_f64(r.bias_mean),
            fmt_f64(r.bias_se),
            fmt_f64(r.var_mean),
            fmt_f64(r.var_se),
            fmt_f64(r.risk_mean),
            fmt_f64(r.risk_se),
            fmt_f64(r.g),
        ]);
    }
    let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), fmt_f64);
    let family = match cfg.family {
        Family::Cntk => "cntk".to_string(),
        Family::Aligned { center } => format!("aligned(center={center})"),
    };
    let meta = metadata(&[
        ("geometry", cfg.geometry.to_string()),
        ("padding", cfg.padding.to_string()),
        ("architecture", cfg.architecture.to_string()),
        ("family", family),
        ("n", cfg.n.to_string()),
        ("noise_var", fmt_f64(cfg.noise_var)),
        ("seed", cfg.seed.to_string()),
        ("bias_trials", cfg.bias_trials.to_string()),
        ("variance_trials", cfg.variance_trials.to_string()),
        ("risk_trials", cfg.risk_trials.to_string()),
        ("test_points", cfg.test_points.to_string()),
        ("sigma_ridge_relative", fmt_f64(SIGMA_RIDGE_RTOL)),
        ("sigma_ridge_epsilon", opt(run.resolved.sigma_ridge)),
        ("sigma_trace_scale", opt(run.resolved.sigma_scale)),
    ]);
    let mut out = OutputSet::new();
    out.add(SWEEP_FILE, table.into_bytes());
    out.add(SWEEP_META_FILE, meta);
    out
}

/// Computes the sweep and writes its files to `cfg.output_dir`.
pub fn run_depth_sweep(cfg: &SweepConfig, execution: Execution) -> Result<SweepRun> {
    let run = compute_sweep(cfg, execution)?;
    sweep_outputs(cfg, &run).commit(&cfg.output_dir)?;
    Ok(run)
}
