use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

fn parse_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    Error::Data(format!(
                        "{}:{}: cannot parse `{}` as a number",
                        path.display(),
                        idx + 1,
                        f.trim()
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a headerless comma-separated numeric matrix; `#` starts a comment.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let rows = parse_rows(path)?;
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::Data(format!(
            "{}: row {} has {} entries, expected {cols}",
            path.display(),
            bad + 1,
            rows[bad].len()
        )));
    }
    let flat: Vec<f64> = rows.concat();
    Ok(DMatrix::from_row_slice(rows.len(), cols, &flat))
}

/// Reads a vector stored either as one row or as one column.
pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix_csv(path)?;
    if m.nrows() != 1 && m.ncols() != 1 {
        return Err(Error::Data(format!(
            "{}: expected a single row or column, found {}x{}",
            path.display(),
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(DVector::from_iterator(
        m.len(),
        m.transpose().iter().copied(),
    ))
}
