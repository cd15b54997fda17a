use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::rng::{aux_rng, purpose};
use crate::{Error, Result};

/// Labelled examples, one flattened example per row of `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Where the rows came from, e.g. `synthetic` or `idx:<path>`.
    pub source: String,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, source: impl Into<String>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Data(format!(
                "dataset has {} rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Data(
                "dataset contains NaN or infinite values".into(),
            ));
        }
        Ok(Dataset {
            x,
            y,
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// CSV with header `label,p0,...` and 17 significant digits, which
    /// reloads bit-exactly.
    pub fn to_csv(&self) -> String {
        let p = self.dim();
        let mut out = String::from("label");
        for j in 0..p {
            let _ = write!(out, ",p{j}");
        }
        out.push('\n');
        for i in 0..self.len() {
            let _ = write!(out, "{:.16e}", self.y[i]);
            for j in 0..p {
                let _ = write!(out, ",{:.16e}", self.x[(i, j)]);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, source: impl Into<String>) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Data("dataset CSV is empty".into()))?;
        let columns: Vec<&str> = header.split(',').map(str::trim).collect();
        let p = columns.len() - 1;
        let header_ok = columns[0] == "label"
            && columns[1..]
                .iter()
                .enumerate()
                .all(|(j, c)| *c == format!("p{j}"));
        if !header_ok {
            return Err(Error::Data(
                "dataset CSV header must be `label,p0,p1,...`".into(),
            ));
        }
        let mut labels = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != p + 1 {
                return Err(Error::Data(format!(
                    "dataset CSV line {}: expected {} fields, found {}",
                    idx + 1,
                    p + 1,
                    fields.len()
                )));
            }
            for (col, field) in fields.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::Data(format!(
                        "dataset CSV line {}: cannot parse `{}` as a number",
                        idx + 1,
                        field.trim()
                    ))
                })?;
                if col == 0 {
                    labels.push(v);
                } else {
                    values.push(v);
                }
            }
        }
        let m = labels.len();
        Dataset::new(
            DMatrix::from_row_slice(m, p, &values),
            DVector::from_vec(labels),
            source,
        )
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Dataset::from_csv(&text, format!("csv:{}", path.display()))
    }

    fn select(&self, rows: &[usize], labels: Vec<f64>, source: String) -> Result<Self> {
        let x = DMatrix::from_fn(rows.len(), self.dim(), |i, j| self.x[(rows[i], j)]);
        Dataset::new(x, DVector::from_vec(labels), source)
    }
}

/// Two-class subset: the first `count_per_class` examples of `digit_pos`
/// (labelled +1) followed by those of `digit_neg` (labelled −1), in file
/// order. With `shuffle = Some(seed)` each class is shuffled before the
/// first `count_per_class` are taken.
pub fn binary_digit_subset(
    ds: &Dataset,
    digit_pos: u8,
    digit_neg: u8,
    count_per_class: usize,
    shuffle: Option<u64>,
) -> Result<Dataset> {
    if digit_pos == digit_neg {
        return Err(Error::invalid("the two digits must differ"));
    }
    let mut rng = shuffle.map(|seed| aux_rng(seed, purpose::DATASET_SHUFFLE));
    let mut rows = Vec::with_capacity(2 * count_per_class);
    for digit in [digit_pos, digit_neg] {
        let mut members: Vec<usize> = (0..ds.len())
            .filter(|&i| ds.y[i] == f64::from(digit))
            .collect();
        if members.len() < count_per_class {
            return Err(Error::invalid(format!(
                "digit {digit}: requested {count_per_class} examples but only {} available",
                members.len()
            )));
        }
        if let Some(rng) = rng.as_mut() {
            members.shuffle(rng);
        }
        rows.extend_from_slice(&members[..count_per_class]);
    }
    let labels = (0..2 * count_per_class)
        .map(|i| if i < count_per_class { 1.0 } else { -1.0 })
        .collect();
    let source = format!("{} digits {digit_pos}/{digit_neg}", ds.source);
    ds.select(&rows, labels, source)
}
