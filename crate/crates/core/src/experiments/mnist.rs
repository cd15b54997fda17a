use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;

use super::config::SweepConfig;
use super::output::{fmt_f64, metadata, CsvTable, OutputSet};
use super::{depth_label, kernel_at};
use crate::cntk::{Depth, GeometryKind};
use crate::data::{binary_digit_subset, load_idx_images, min_norm_solve, Dataset, IMAGE_SIDE};
use crate::linalg::check_psd;
use crate::linreg::{alignment_g, RiskEstimate};
use crate::par::map_indexed;
use crate::rng::trial_rng;
use crate::{Error, Execution, Result};

pub const MNIST_LOSS_FILE: &str = "mnist_loss.csv";
pub const MNIST_BASELINE_FILE: &str = "mnist_baseline.csv";
pub const MNIST_META_FILE: &str = "mnist_meta.txt";

#[derive(Clone, Debug, PartialEq)]
pub struct MnistRecord {
    pub depth: Depth,
    pub loss_mean: f64,
    pub loss_se: f64,
    pub g: f64,
}

#[derive(Clone, Debug)]
pub struct MnistRun {
    pub records: Vec<MnistRecord>,
    /// Same trials with `Θ = I`, the minimum-ℓ₂-norm interpolant.
    pub baseline: RiskEstimate,
    /// The ground-truth points and their exact-fit `β`.
    pub points: Dataset,
    pub beta: DVector<f64>,
}

/// Mean squared error over all points of a ridgeless fit on each trial's
/// subsample. Trial `t` draws its subsample from stream `t` of the seed,
/// so every depth sees the same subsamples.
fn trial_losses(
    theta: &DMatrix<f64>,
    points: &Dataset,
    cfg: &SweepConfig,
    execution: Execution,
) -> Vec<f64> {
    let m = points.len();
    map_indexed(execution, cfg.mnist_trials, |t| {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let rows = sample(&mut rng, m, cfg.n).into_vec();
        let x = points.x.select_rows(&rows);
        let y = points.y.select_rows(&rows);
        let fit = crate::linreg::fit_unchecked(theta, &x, &y);
        let err = &points.x * &fit.weights - &points.y;
        err.norm_squared() / m as f64
    })
}

fn check_mnist_config(cfg: &SweepConfig) -> Result<()> {
    if cfg.images.is_none() {
        return Err(Error::config(
            None,
            "images",
            "the mnist experiment needs `images` and `labels`",
        ));
    }
    if cfg.geometry.kind() != GeometryKind::TwoD || cfg.geometry.side() != IMAGE_SIDE {
        return Err(Error::config(
            None,
            "size",
            format!("the mnist experiment needs `geometry = 2d` and `size = {IMAGE_SIDE}`"),
        ));
    }
    if cfg.n >= 2 * cfg.count_per_class {
        return Err(Error::config(
            None,
            "n",
            format!(
                "training subsample n = {} must be smaller than the {} ground-truth points",
                cfg.n,
                2 * cfg.count_per_class
            ),
        ));
    }
    Ok(())
}

/// Builds the ground-truth set, solves for `β`, and evaluates the loss of
/// ridgeless regression with `Θ_D` at every configured depth.
pub fn compute_mnist(cfg: &SweepConfig, execution: Execution) -> Result<MnistRun> {
    check_mnist_config(cfg)?;
    let (images, labels) = (cfg.images.as_ref().unwrap(), cfg.labels.as_ref().unwrap());
    let all = load_idx_images(images, labels)?;
    let shuffle = cfg.shuffle.then_some(cfg.seed);
    let points = binary_digit_subset(
        &all,
        cfg.digit_pos,
        cfg.digit_neg,
        cfg.count_per_class,
        shuffle,
    )?;
    let beta = min_norm_solve(&points.x, &points.y)?;

    let mut records = Vec::with_capacity(cfg.depths.len());
    for &depth in &cfg.depths {
        let theta = kernel_at(cfg, depth)?;
        check_psd(&theta, "Θ_D")?;
        let losses = trial_losses(&theta, &points, cfg, execution);
        let est = RiskEstimate::from_samples(&losses, cfg.seed);
        records.push(MnistRecord {
            depth,
            loss_mean: est.mean,
            loss_se: est.std_error,
            g: alignment_g(&theta, &beta)?,
        });
    }
    let p = cfg.geometry.p();
    let baseline_losses = trial_losses(&DMatrix::identity(p, p), &points, cfg, execution);
    Ok(MnistRun {
        records,
        baseline: RiskEstimate::from_samples(&baseline_losses, cfg.seed),
        points,
        beta,
    })
}

pub fn mnist_outputs(cfg: &SweepConfig, run: &MnistRun) -> OutputSet {
    let mut loss = CsvTable::new(&["depth", "loss_mean", "loss_se", "g"]);
    for r in &run.records {
        loss.push_row(&[
            depth_label(r.depth),
            fmt_f64(r.loss_mean),
            fmt_f64(r.loss_se),
            fmt_f64(r.g),
        ]);
    }
    let mut baseline = CsvTable::new(&["loss_mean", "loss_se"]);
    baseline.push_row(&[fmt_f64(run.baseline.mean), fmt_f64(run.baseline.std_error)]);
    let meta = metadata(&[
        ("source", run.points.source.clone()),
        ("points", run.points.len().to_string()),
        ("n", cfg.n.to_string()),
        ("trials", cfg.mnist_trials.to_string()),
        ("seed", cfg.seed.to_string()),
        ("padding", cfg.padding.to_string()),
        ("architecture", cfg.architecture.to_string()),
        ("beta_norm", fmt_f64(run.beta.norm())),
    ]);
    let mut out = OutputSet::new();
    out.add(MNIST_LOSS_FILE, loss.into_bytes());
    out.add(MNIST_BASELINE_FILE, baseline.into_bytes());
    out.add(MNIST_META_FILE, meta);
    out
}

pub fn run_mnist_experiment(cfg: &SweepConfig, execution: Execution) -> Result<MnistRun> {
    let run = compute_mnist(cfg, execution)?;
    mnist_outputs(cfg, &run).commit(&cfg.output_dir)?;
    Ok(run)
}
