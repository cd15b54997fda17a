use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// Formats a float with 17 significant digits, enough to reload it exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Comma-separated table with a header row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    text: String,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        CsvTable { text }
    }

    pub fn push_row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

/// Binary greyscale PGM (P5) of a square image given row-major.
pub fn encode_pgm(side: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), side * side, "PGM payload must be side² bytes");
    let mut out = format!("P5\n{side} {side}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Min–max scales values to `0..=255`. A constant vector (spread at most
/// `1e-9` of its magnitude) maps to mid-grey 128.
pub fn to_grey(values: &[f64]) -> Vec<u8> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let spread = max - min;
    if spread.is_nan() || spread <= 1e-9 * scale {
        return vec![128; values.len()];
    }
    values
        .iter()
        .map(|v| (255.0 * (v - min) / (max - min)).round().clamp(0.0, 255.0) as u8)
        .collect()
}

/// Key=value metadata lines.
pub fn metadata(entries: &[(&str, String)]) -> Vec<u8> {
    let mut out = String::new();
    for (k, v) in entries {
        let _ = writeln!(out, "{k} = {v}");
    }
    out.into_bytes()
}

/// Output files gathered in memory and committed together.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, contents: Vec<u8>) {
        self.files.push((name.into(), contents));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file to a temporary sibling, then renames them all into
    /// place. Nothing is renamed unless every temporary write succeeded.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let mut tmp = tempfile::Builder::new()
                .prefix(&format!(".{name}."))
                .suffix(".tmp")
                .tempfile_in(dir)
                .map_err(|e| Error::io(dir, e))?;
            tmp.write_all(contents)
                .and_then(|_| tmp.as_file().sync_all())
                .map_err(|e| Error::io(tmp.path(), e))?;
            staged.push((tmp, dir.join(name)));
        }
        let mut written = Vec::with_capacity(staged.len());
        for (tmp, dest) in staged {
            tmp.persist(&dest).map_err(|e| Error::io(&dest, e.error))?;
            written.push(dest);
        }
        Ok(written)
    }
}
