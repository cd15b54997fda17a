//! Seeded random streams.
//!
//! Every Monte Carlo trial draws from its own ChaCha8 stream keyed by
//! `(seed, trial)`. ChaCha is counter based, so the draws of trial `t` do not
//! depend on which other trials ran, in what order, or on which thread.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stream ids at or above this value are reserved for auxiliary draws
/// (synthetic `β`, dataset shuffles) so they never collide with trials.
const AUX_STREAM_BASE: u64 = 1 << 63;

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    debug_assert!(trial < AUX_STREAM_BASE);
    stream(seed, trial)
}

pub fn aux_rng(seed: u64, purpose: u64) -> ChaCha8Rng {
    stream(seed, AUX_STREAM_BASE + purpose)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Auxiliary stream purposes.
pub mod purpose {
    pub const SYNTHETIC_BETA: u64 = 1;
    pub const DATASET_SHUFFLE: u64 = 2;
    pub const GAUSSIAN_PROBLEM: u64 = 3;
}

/// `rows × cols` matrix of iid standard normals, filled row by row.
pub fn standard_normal_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    DMatrix::from_row_slice(rows, cols, &data)
}

pub fn standard_normal_vector<R: Rng>(rng: &mut R, len: usize) -> DVector<f64> {
    DVector::from_iterator(len, (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)))
}
