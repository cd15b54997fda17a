use nalgebra::DVector;

use super::config::SweepConfig;
use super::output::{encode_pgm, fmt_f64, to_grey, CsvTable, OutputSet};
use super::{depth_label, kernel_at};
use crate::cntk::{symmetric_spectrum, Depth, GeometryKind};
use crate::par::map_indexed;
use crate::{Error, Execution, Result};

pub const GALLERY_SUMMARY_FILE: &str = "eigvec_summary.csv";

/// Leading eigenvector of `Θ_D` at one depth, with its rendered image.
#[derive(Clone, Debug, PartialEq)]
pub struct GalleryEntry {
    pub depth: Depth,
    pub eigenvector: DVector<f64>,
    pub leading_eigenvalue: f64,
    pub spectral_gap: f64,
    pub participation_ratio: f64,
    /// Row-major `s × s` grey levels.
    pub pixels: Vec<u8>,
}

impl GalleryEntry {
    pub fn file_name(&self) -> String {
        format!("eigvec_D{}.pgm", depth_label(self.depth))
    }
}

/// Eigendecomposes `Θ_D` at every configured depth. Needs a 2-D geometry.
pub fn compute_gallery(cfg: &SweepConfig, execution: Execution) -> Result<Vec<GalleryEntry>> {
    if cfg.geometry.kind() != GeometryKind::TwoD {
        return Err(Error::invalid(
            "the eigenvector gallery needs a 2-D geometry (`geometry = 2d`)",
        ));
    }
    let results = map_indexed(execution, cfg.depths.len(), |i| {
        let depth = cfg.depths[i];
        let summary = symmetric_spectrum(&kernel_at(cfg, depth)?)?;
        let pixels = to_grey(summary.leading_eigenvector.as_slice());
        Ok(GalleryEntry {
            depth,
            leading_eigenvalue: summary.eigenvalues[0],
            spectral_gap: summary.spectral_gap,
            participation_ratio: summary.participation_ratio(),
            eigenvector: summary.leading_eigenvector,
            pixels,
        })
    });
    results.into_iter().collect()
}

/// One PGM per depth plus `eigvec_summary.csv`.
pub fn gallery_outputs(cfg: &SweepConfig, entries: &[GalleryEntry]) -> OutputSet {
    let side = cfg.geometry.side();
    let mut out = OutputSet::new();
    let mut table = CsvTable::new(&[
        "depth",
        "participation_ratio",
        "leading_eigenvalue",
        "spectral_gap",
    ]);
    for e in entries {
        out.add(e.file_name(), encode_pgm(side, &e.pixels));
        table.push_row(&[
            depth_label(e.depth),
            fmt_f64(e.participation_ratio),
            fmt_f64(e.leading_eigenvalue),
            fmt_f64(e.spectral_gap),
        ]);
    }
    out.add(GALLERY_SUMMARY_FILE, table.into_bytes());
    out
}

pub fn run_eigvec_gallery(cfg: &SweepConfig, execution: Execution) -> Result<Vec<GalleryEntry>> {
    let entries = compute_gallery(cfg, execution)?;
    gallery_outputs(cfg, &entries).commit(&cfg.output_dir)?;
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::parse_config_str;
    use std::path::Path;

    #[test]
    fn pooling_depth_zero_is_flat_grey() {
        let cfg = parse_config_str(
            "geometry = 2d\nsize = 5\ndepths = 0,4,inf\n",
            Path::new("."),
        )
        .unwrap();
        let entries = compute_gallery(&cfg, Execution::Sequential).unwrap();
        assert!(entries[0].pixels.iter().all(|&v| v == 128));
        assert!((entries[0].participation_ratio - 25.0).abs() < 1e-9);
        // Odd side: the limit concentrates on the centre pixel.
        let last = &entries[2];
        assert_eq!(last.pixels[12], 255);
        assert!((last.participation_ratio - 1.0).abs() < 1e-9);
        assert!(entries[1].participation_ratio < entries[0].participation_ratio);
        assert!(entries[1].participation_ratio > last.participation_ratio);
        assert_eq!(last.file_name(), "eigvec_Dinf.pgm");
    }

    #[test]
    fn rejects_one_dimensional_geometry() {
        let cfg = parse_config_str("size = 5\ndepths = 0\n", Path::new(".")).unwrap();
        let err = compute_gallery(&cfg, Execution::Sequential).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }
}
