//! Configuration-driven experiments: depth sweeps of bias, variance and
//! risk, the leading-eigenvector gallery, and the MNIST 0/1 experiment.
//! Every runner computes all results in memory first and then commits its
//! output files atomically.

mod config;
mod gallery;
mod mnist;
mod output;
mod sweep;

pub use config::{
    log_spaced_depths, parse_config, parse_config_str, BetaSource, Family, SigmaSource, SweepConfig,
};
pub use gallery::{compute_gallery, gallery_outputs, run_eigvec_gallery, GalleryEntry};
pub use mnist::{compute_mnist, mnist_outputs, run_mnist_experiment, MnistRecord, MnistRun};
pub use output::{encode_pgm, fmt_f64, to_grey, CsvTable, OutputSet};
pub use sweep::{
    compute_sweep, resolve_problem, run_depth_sweep, sweep_outputs, DepthSweepRecord,
    ResolvedProblem, SweepRun, SIGMA_RIDGE_RTOL,
};

use nalgebra::DMatrix;

use crate::cntk::{initial_transform, limiting_transform, propagate, Depth};
use crate::Result;

/// The configured CNTK feature transform at `depth`, unit Frobenius norm.
pub fn kernel_at(cfg: &SweepConfig, depth: Depth) -> Result<DMatrix<f64>> {
    match depth {
        Depth::Finite(d) => propagate(
            &initial_transform(&cfg.geometry, cfg.architecture),
            d,
            &cfg.geometry,
            cfg.padding,
            cfg.propagation,
        ),
        Depth::Infinite => {
            Ok(limiting_transform(&cfg.geometry, cfg.padding, cfg.architecture).into_theta())
        }
    }
}

/// Text used for a depth in CSV cells and file names.
pub(crate) fn depth_label(depth: Depth) -> String {
    depth.to_string()
}
