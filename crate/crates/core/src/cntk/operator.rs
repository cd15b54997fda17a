use nalgebra::DMatrix;

use super::{ConvGeometry, GeometryKind, Padding};
use crate::par::{self, Execution};
use crate::{Error, Result};

const SHIFTS: [isize; 3] = [-1, 0, 1];

/// Moves coordinate `x` by `k` along an axis of length `n`; `None` when the
/// result falls into the zero padding.
#[inline]
fn shift(x: usize, k: isize, n: usize, padding: Padding) -> Option<usize> {
    let y = x as isize + k;
    match padding {
        Padding::Zero => (y >= 0 && y < n as isize).then_some(y as usize),
        Padding::Circular => Some(y.rem_euclid(n as isize) as usize),
    }
}

/// The shift basis `{B_k}` as dense 0/1 matrices, with `(B_k)_{ij} = 1`
/// iff `j` is `i` moved by `k`.
///
/// 1-D order is `k = +1, 0, -1` (superdiagonal, identity, subdiagonal);
/// 2-D order is row-major over `(k, k') ∈ {-1, 0, 1}²`. Shifts falling off
/// the edge are dropped under zero padding and wrap under circular padding.
///
/// This materialises `r` matrices of size `p × p` and exists as a reference
/// for [`apply_a`]; it is not used on the hot path.
pub fn basis_matrices(geometry: &ConvGeometry, padding: Padding) -> Result<Vec<DMatrix<f64>>> {
    let p = geometry.p();
    let s = geometry.side();
    let mut out = Vec::with_capacity(geometry.basis_len());
    match geometry.kind() {
        GeometryKind::OneD => {
            for k in [1isize, 0, -1] {
                let mut b = DMatrix::zeros(p, p);
                for i in 0..p {
                    if let Some(j) = shift(i, k, p, padding) {
                        b[(i, j)] = 1.0;
                    }
                }
                out.push(b);
            }
        }
        GeometryKind::TwoD => {
            for k in SHIFTS {
                for kp in SHIFTS {
                    let mut b = DMatrix::zeros(p, p);
                    for a in 0..s {
                        for c in 0..s {
                            if let (Some(a2), Some(c2)) =
                                (shift(a, k, s, padding), shift(c, kp, s, padding))
                            {
                                b[(a * s + c, a2 * s + c2)] = 1.0;
                            }
                        }
                    }
                    out.push(b);
                }
            }
        }
    }
    Ok(out)
}

/// `A(X) = Σ_k B_kᵀ X B_k` evaluated as an index-shift stencil,
/// `A(X)_{ij} = Σ_k X_{i+k, j+k}`, with out-of-range terms dropped (zero
/// padding) or wrapped (circular padding).
///
/// Shifts are accumulated in a fixed row-major order, so the result is
/// bit-identical regardless of how columns are scheduled.
pub fn apply_a(
    theta: &DMatrix<f64>,
    geometry: &ConvGeometry,
    padding: Padding,
) -> Result<DMatrix<f64>> {
    apply_a_with(theta, geometry, padding, Execution::default())
}

pub fn apply_a_with(
    theta: &DMatrix<f64>,
    geometry: &ConvGeometry,
    padding: Padding,
    exec: Execution,
) -> Result<DMatrix<f64>> {
    let p = geometry.p();
    if theta.nrows() != p || theta.ncols() != p {
        return Err(Error::invalid(format!(
            "matrix is {}x{} but geometry {} needs {p}x{p}",
            theta.nrows(),
            theta.ncols(),
            geometry
        )));
    }
    let src = theta.as_slice();
    let mut out = vec![0.0; p * p];
    // Small matrices are not worth a thread hop.
    let exec = if p < 64 { Execution::Sequential } else { exec };
    match geometry.kind() {
        GeometryKind::OneD => par::for_each_chunk(exec, &mut out, p, |j, col| {
            for (i, dst) in col.iter_mut().enumerate() {
                let mut acc = 0.0;
                for k in SHIFTS {
                    if let (Some(i2), Some(j2)) = (shift(i, k, p, padding), shift(j, k, p, padding))
                    {
                        acc += src[i2 + p * j2];
                    }
                }
                *dst = acc;
            }
        }),
        GeometryKind::TwoD => {
            let s = geometry.side();
            par::for_each_chunk(exec, &mut out, p, |col_idx, col| {
                let (ca, cb) = (col_idx / s, col_idx % s);
                for (row_idx, dst) in col.iter_mut().enumerate() {
                    let (ra, rb) = (row_idx / s, row_idx % s);
                    let mut acc = 0.0;
                    for k in SHIFTS {
                        let (Some(ra2), Some(ca2)) =
                            (shift(ra, k, s, padding), shift(ca, k, s, padding))
                        else {
                            continue;
                        };
                        for kp in SHIFTS {
                            if let (Some(rb2), Some(cb2)) =
                                (shift(rb, kp, s, padding), shift(cb, kp, s, padding))
                            {
                                acc += src[(ra2 * s + rb2) + p * (ca2 * s + cb2)];
                            }
                        }
                    }
                    *dst = acc;
                }
            });
        }
    }
    Ok(DMatrix::from_vec(p, p, out))
}
