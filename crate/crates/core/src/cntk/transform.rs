use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::{
    apply_a, toeplitz_eigenvector, Architecture, ConvGeometry, Depth, GeometryKind, Padding,
};
use crate::linalg::{check_psd, check_symmetric};
use crate::{Error, Result};

/// Successive normalised iterates closer than this (Frobenius) count as
/// converged.
pub const CONVERGENCE_TOL: f64 = 1e-12;
/// Iteration cap of the convergence detector.
pub const CONVERGENCE_CAP: usize = 100_000;

/// A symmetric PSD `p × p` feature transform `Θ` together with where it came
/// from. The linear CNTK of this transform is `K(x, x') = xᵀΘx'`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTransform {
    theta: DMatrix<f64>,
    geometry: ConvGeometry,
    padding: Padding,
    architecture: Architecture,
    depth: Depth,
    normalized: bool,
}

impl FeatureTransform {
    /// Wraps an arbitrary matrix, checking symmetry, positive
    /// semi-definiteness and (when `normalized`) unit Frobenius norm.
    pub fn new(
        theta: DMatrix<f64>,
        geometry: ConvGeometry,
        padding: Padding,
        architecture: Architecture,
        depth: Depth,
        normalized: bool,
    ) -> Result<Self> {
        let p = geometry.p();
        if theta.nrows() != p || theta.ncols() != p {
            return Err(Error::invalid(format!(
                "transform is {}x{} but geometry {geometry} needs {p}x{p}",
                theta.nrows(),
                theta.ncols()
            )));
        }
        check_psd(&theta, "feature transform")?;
        if normalized && (theta.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "transform marked normalized has Frobenius norm {}",
                theta.norm()
            )));
        }
        Ok(FeatureTransform {
            theta,
            geometry,
            padding,
            architecture,
            depth,
            normalized,
        })
    }

    /// Built by the recursion; PSD by construction, so only the cheap
    /// invariants are checked (in debug builds).
    fn normalized_from(
        theta: DMatrix<f64>,
        geometry: ConvGeometry,
        padding: Padding,
        architecture: Architecture,
        depth: Depth,
    ) -> Self {
        debug_assert!((theta.norm() - 1.0).abs() <= 1e-12);
        debug_assert!(check_symmetric(&theta, "transform").is_ok());
        FeatureTransform {
            theta,
            geometry,
            padding,
            architecture,
            depth,
            normalized: true,
        }
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn into_theta(self) -> DMatrix<f64> {
        self.theta
    }

    pub fn geometry(&self) -> ConvGeometry {
        self.geometry
    }

    pub fn padding(&self) -> Padding {
        self.padding
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn depth(&self) -> Depth {
        self.depth
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Dense CSV dump: `p` lines of `p` comma-separated values, 17
    /// significant digits.
    pub fn to_csv(&self) -> String {
        let p = self.theta.nrows();
        let mut out = String::with_capacity(p * p * 24);
        for i in 0..p {
            for j in 0..p {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{:.16e}", self.theta[(i, j)]);
            }
            out.push('\n');
        }
        out
    }
}

/// How `Θ_D` is reached from `Θ_0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Propagation {
    /// Apply the stencil `D` times, renormalising after each step.
    Iterate,
    /// Zero padding only: raise each diagonal's tridiagonal Toeplitz block
    /// to the power `D` in its closed-form eigenbasis. Cost is independent
    /// of `D`. Circular padding falls back to iteration.
    #[default]
    Spectral,
}

/// The architecture's `Θ_0` scaled to unit Frobenius norm: `I/√p` for
/// flattening, `J/p` for pooling.
pub fn initial_transform(geometry: &ConvGeometry, architecture: Architecture) -> DMatrix<f64> {
    let p = geometry.p();
    match architecture {
        Architecture::Flattening => DMatrix::identity(p, p) / (p as f64).sqrt(),
        Architecture::Pooling => DMatrix::from_element(p, p, 1.0 / p as f64),
    }
}

/// `Θ_D` by direct iteration of `Θ_d = A(Θ_{d-1}) / ‖A(Θ_{d-1})‖_F` from the
/// architecture's `Θ_0`.
pub fn feature_transform(
    depth: usize,
    geometry: &ConvGeometry,
    padding: Padding,
    architecture: Architecture,
) -> Result<FeatureTransform> {
    let theta = propagate(
        &initial_transform(geometry, architecture),
        depth,
        geometry,
        padding,
        Propagation::Iterate,
    )?;
    Ok(FeatureTransform::normalized_from(
        theta,
        *geometry,
        padding,
        architecture,
        Depth::Finite(depth),
    ))
}

/// Same transform as [`feature_transform`], reached through
/// [`Propagation::Spectral`].
pub fn feature_transform_fast(
    depth: usize,
    geometry: &ConvGeometry,
    padding: Padding,
    architecture: Architecture,
) -> Result<FeatureTransform> {
    let theta = propagate(
        &initial_transform(geometry, architecture),
        depth,
        geometry,
        padding,
        Propagation::Spectral,
    )?;
    Ok(FeatureTransform::normalized_from(
        theta,
        *geometry,
        padding,
        architecture,
        Depth::Finite(depth),
    ))
}

/// `A^D(X) / ‖A^D(X)‖_F` for an arbitrary non-zero `X`.
pub fn propagate(
    x: &DMatrix<f64>,
    depth: usize,
    geometry: &ConvGeometry,
    padding: Padding,
    propagation: Propagation,
) -> Result<DMatrix<f64>> {
    let p = geometry.p();
    if x.nrows() != p || x.ncols() != p {
        return Err(Error::invalid(format!(
            "matrix is {}x{} but geometry {geometry} needs {p}x{p}",
            x.nrows(),
            x.ncols()
        )));
    }
    let mut theta = normalize(x.clone())?;
    match (propagation, padding) {
        (Propagation::Spectral, Padding::Zero) if depth > 0 => {
            jump_zero_padding(&mut theta, depth, geometry);
            theta = normalize(theta)?;
        }
        _ => {
            for _ in 0..depth {
                theta = normalize(apply_a(&theta, geometry, padding)?)?;
            }
        }
    }
    Ok(theta)
}

fn normalize(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let norm = m.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::invalid(
            "cannot normalise a zero or non-finite transform",
        ));
    }
    Ok(m / norm)
}

/// `(T_d / λ_ref)^depth` for the `d × d` all-ones tridiagonal Toeplitz
/// matrix, assembled from its closed-form eigenpairs.
fn toeplitz_power(d: usize, depth: usize, lambda_ref: f64) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(d, d);
    for h in 1..=d {
        let lambda = 1.0 + 2.0 * (h as f64 * PI / (d + 1) as f64).cos();
        let weight = (lambda / lambda_ref).powi(depth.min(i32::MAX as usize) as i32);
        if weight == 0.0 {
            continue;
        }
        let v = toeplitz_eigenvector(d, h);
        out.ger(weight, &v, &v, 1.0);
    }
    out
}

/// Overwrites `theta` with `A^depth(theta)` scaled by `λ_ref^{-depth}` per
/// axis (zero padding).
///
/// `A` factorises into commuting per-axis co-shifts, and each co-shift acts
/// on every diagonal `j - i = m` of an axis pair as the tridiagonal Toeplitz
/// matrix of size `s - |m|`. Raising those blocks to the power `depth`
/// evaluates `A^depth` exactly.
fn jump_zero_padding(theta: &mut DMatrix<f64>, depth: usize, geometry: &ConvGeometry) {
    let s = geometry.side();
    let p = geometry.p();
    let lambda_ref = 1.0 + 2.0 * (PI / (s + 1) as f64).cos();
    let powers: Vec<DMatrix<f64>> = (0..=s)
        .map(|d| {
            if d == 0 {
                DMatrix::zeros(0, 0)
            } else {
                toeplitz_power(d, depth, lambda_ref)
            }
        })
        .collect();
    let data = theta.as_mut_slice();
    match geometry.kind() {
        GeometryKind::OneD => co_shift_power(data, s, 1, p, &[0], &powers),
        GeometryKind::TwoD => {
            // Entry (row pixel (a, b), column pixel (a', b')) lives at
            // a·s + b + p·(a'·s + b'). First the (a, a') axis pair for every
            // fixed (b, b'), then (b, b') for every fixed (a, a').
            let fixed_b: Vec<usize> = (0..s)
                .flat_map(|b| (0..s).map(move |bp| b + p * bp))
                .collect();
            co_shift_power(data, s, s, p * s, &fixed_b, &powers);
            let fixed_a: Vec<usize> = (0..s)
                .flat_map(|a| (0..s).map(move |ap| a * s + p * ap * s))
                .collect();
            co_shift_power(data, s, 1, p, &fixed_a, &powers);
        }
    }
}

/// Applies `powers[s - |m|]` to every diagonal `m` of the `s × s` slices
/// located at `base + i·row_stride + j·col_stride`.
fn co_shift_power(
    data: &mut [f64],
    s: usize,
    row_stride: usize,
    col_stride: usize,
    bases: &[usize],
    powers: &[DMatrix<f64>],
) {
    let mut buf = DVector::zeros(s);
    let mut res = DVector::zeros(s);
    for &base in bases {
        for m in -(s as isize - 1)..(s as isize) {
            let d = s - m.unsigned_abs();
            let i0 = (-m).max(0) as usize;
            let j0 = m.max(0) as usize;
            let at = |t: usize| base + (i0 + t) * row_stride + (j0 + t) * col_stride;
            let mut v = buf.rows_mut(0, d);
            for t in 0..d {
                v[t] = data[at(t)];
            }
            let mut w = res.rows_mut(0, d);
            w.gemv(1.0, &powers[d], &buf.rows(0, d), 0.0);
            for t in 0..d {
                data[at(t)] = w[t];
            }
        }
    }
}

/// The normalised infinite-depth transform `Θ*`.
///
/// Under zero padding the recursion converges, for either architecture, to a
/// diagonal matrix with entries `sin(iπ/(p+1))` in 1-D and
/// `sin(aπ/(s+1))·sin(bπ/(s+1))` at pixel `(a, b)` in 2-D. Under circular
/// padding both initial conditions are fixed points, so `Θ*` is `Θ_0`.
pub fn limiting_transform(
    geometry: &ConvGeometry,
    padding: Padding,
    architecture: Architecture,
) -> FeatureTransform {
    let theta = match padding {
        Padding::Circular => initial_transform(geometry, architecture),
        Padding::Zero => {
            let s = geometry.side();
            let profile: Vec<f64> = (1..=s)
                .map(|i| (i as f64 * PI / (s + 1) as f64).sin())
                .collect();
            let diag = match geometry.kind() {
                GeometryKind::OneD => DVector::from_vec(profile),
                GeometryKind::TwoD => {
                    DVector::from_fn(geometry.p(), |r, _| profile[r / s] * profile[r % s])
                }
            };
            let diag = &diag / diag.norm();
            DMatrix::from_diagonal(&diag)
        }
    };
    FeatureTransform::normalized_from(theta, *geometry, padding, architecture, Depth::Infinite)
}

/// Outcome of running the recursion until it stops moving.
#[derive(Clone, Debug)]
pub struct Convergence {
    pub transform: FeatureTransform,
    pub iterations: usize,
    /// Frobenius distance between the last two iterates.
    pub last_step: f64,
    pub converged: bool,
}

/// Iterates the normalised recursion until successive iterates differ by
/// less than `tol` in Frobenius norm, or `cap` steps have been taken.
pub fn converge_transform(
    geometry: &ConvGeometry,
    padding: Padding,
    architecture: Architecture,
    tol: f64,
    cap: usize,
) -> Result<Convergence> {
    let mut theta = initial_transform(geometry, architecture);
    let mut last_step = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cap {
        let next = normalize(apply_a(&theta, geometry, padding)?)?;
        last_step = (&next - &theta).norm();
        theta = next;
        iterations += 1;
        if last_step < tol {
            break;
        }
    }
    Ok(Convergence {
        transform: FeatureTransform::normalized_from(
            theta,
            *geometry,
            padding,
            architecture,
            Depth::Finite(iterations),
        ),
        iterations,
        last_step,
        converged: last_step < tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cntk::operator_ratio;

    fn one_d(p: usize) -> ConvGeometry {
        ConvGeometry::one_d(p).unwrap()
    }

    #[test]
    fn depth_zero_is_normalized_initial_condition() {
        let g = one_d(5);
        let pool = feature_transform(0, &g, Padding::Zero, Architecture::Pooling).unwrap();
        assert!((pool.theta() - DMatrix::from_element(5, 5, 0.2)).amax() < 1e-15);
        let flat = feature_transform(0, &g, Padding::Zero, Architecture::Flattening).unwrap();
        assert!((flat.theta() - DMatrix::identity(5, 5) / 5f64.sqrt()).amax() < 1e-15);
        assert!(pool.is_normalized() && flat.is_normalized());
        assert_eq!(pool.depth(), Depth::Finite(0));
    }

    #[test]
    fn circular_flattening_is_depth_invariant() {
        let g = one_d(4);
        for d in [0, 1, 2, 7, 30] {
            let t = feature_transform(d, &g, Padding::Circular, Architecture::Flattening).unwrap();
            assert!(
                (t.theta() - DMatrix::identity(4, 4) * 0.5).amax() < 1e-15,
                "depth {d}"
            );
        }
    }

    #[test]
    fn limiting_transform_closed_forms() {
        let t = limiting_transform(&one_d(3), Padding::Zero, Architecture::Pooling);
        let r = 0.5f64.sqrt();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![r, 1.0, r])) / 2f64.sqrt();
        assert!((t.theta() - expected).amax() < 1e-15);
        assert_eq!(t.depth(), Depth::Infinite);

        let t = limiting_transform(
            &ConvGeometry::two_d(2).unwrap(),
            Padding::Zero,
            Architecture::Flattening,
        );
        assert!((t.theta() - DMatrix::identity(4, 4) * 0.5).amax() < 1e-15);

        let t = limiting_transform(&one_d(4), Padding::Circular, Architecture::Pooling);
        assert!((t.theta() - DMatrix::from_element(4, 4, 0.25)).amax() < 1e-15);
    }

    #[test]
    fn spectral_jump_matches_iteration() {
        let cases = [
            one_d(1),
            one_d(2),
            one_d(7),
            ConvGeometry::two_d(1).unwrap(),
            ConvGeometry::two_d(5).unwrap(),
        ];
        for g in cases {
            for arch in [Architecture::Pooling, Architecture::Flattening] {
                for d in [0, 1, 2, 5, 40] {
                    let a = feature_transform(d, &g, Padding::Zero, arch).unwrap();
                    let b = feature_transform_fast(d, &g, Padding::Zero, arch).unwrap();
                    assert!(
                        (a.theta() - b.theta()).norm() < 1e-12,
                        "{g} {arch} depth {d}"
                    );
                }
            }
        }
    }

    #[test]
    fn spectral_jump_of_arbitrary_matrix() {
        let g = ConvGeometry::two_d(3).unwrap();
        let w = DMatrix::from_fn(9, 9, |i, j| ((i * 5 + j * 3) % 7) as f64 - 3.0);
        let x = &w * w.transpose();
        let a = propagate(&x, 9, &g, Padding::Zero, Propagation::Iterate).unwrap();
        let b = propagate(&x, 9, &g, Padding::Zero, Propagation::Spectral).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn convergence_detector_reaches_the_limit() {
        let g = one_d(6);
        for arch in [Architecture::Pooling, Architecture::Flattening] {
            let c = converge_transform(&g, Padding::Zero, arch, CONVERGENCE_TOL, CONVERGENCE_CAP)
                .unwrap();
            assert!(c.converged);
            let limit = limiting_transform(&g, Padding::Zero, arch);
            assert!((c.transform.theta() - limit.theta()).norm() < 1e-9);
        }
        let c = converge_transform(&g, Padding::Zero, Architecture::Pooling, 0.0, 5).unwrap();
        assert_eq!(c.iterations, 5);
        assert!(!c.converged);
    }

    #[test]
    fn geometric_convergence_bound() {
        // ‖Θ_D - Θ*‖ <= (‖w‖/c₁)·(λ₂/λ₁)^D where Θ_0 = c₁Θ* + w, w ⊥ Θ*.
        for g in [one_d(5), one_d(10), ConvGeometry::two_d(4).unwrap()] {
            let ratio = operator_ratio(&g);
            for arch in [Architecture::Pooling, Architecture::Flattening] {
                let star = limiting_transform(&g, Padding::Zero, arch).into_theta();
                let theta0 = initial_transform(&g, arch);
                let c1 = theta0.dot(&star);
                let constant = (&theta0 - &star * c1).norm() / c1;
                let mut theta = theta0;
                for d in 0..=300 {
                    let dist = (&theta - &star).norm();
                    assert!(
                        dist <= constant * ratio.powi(d) + 1e-13,
                        "{g} {arch} D={d}: {dist}"
                    );
                    theta = normalize(apply_a(&theta, &g, Padding::Zero).unwrap()).unwrap();
                }
            }
        }
    }

    #[test]
    fn new_validates_invariants() {
        let g = one_d(2);
        let ok = DMatrix::identity(2, 2) / 2f64.sqrt();
        assert!(FeatureTransform::new(
            ok.clone(),
            g,
            Padding::Zero,
            Architecture::Flattening,
            Depth::Finite(0),
            true
        )
        .is_ok());
        assert!(FeatureTransform::new(
            ok * 2.0,
            g,
            Padding::Zero,
            Architecture::Flattening,
            Depth::Finite(0),
            true
        )
        .is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(FeatureTransform::new(
            indefinite,
            g,
            Padding::Zero,
            Architecture::Pooling,
            Depth::Finite(0),
            false
        )
        .is_err());
        assert!(FeatureTransform::new(
            DMatrix::identity(3, 3),
            g,
            Padding::Zero,
            Architecture::Pooling,
            Depth::Finite(0),
            false
        )
        .is_err());
    }

    #[test]
    fn csv_dump_round_trips_values() {
        let t = feature_transform(3, &one_d(4), Padding::Zero, Architecture::Pooling).unwrap();
        let csv = t.to_csv();
        let parsed: Vec<f64> = csv
            .lines()
            .flat_map(|l| {
                l.split(',')
                    .map(|v| v.parse::<f64>().unwrap())
                    .collect::<Vec<_>>()
            })
            .collect();
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(DMatrix::from_row_slice(4, 4, &parsed), *t.theta());
    }
}
