//! Problem generation and dataset ingestion: Gaussian regression draws,
//! MNIST-style IDX files, a lossless CSV dataset format, and the
//! minimum-norm ground truth used by the MNIST experiment.

mod dataset;
mod idx;
mod matrix_io;
mod synthetic;

pub use dataset::{binary_digit_subset, Dataset};
pub use idx::{
    decode_idx_images, decode_idx_labels, encode_idx_images, encode_idx_labels, load_idx_images,
    parse_idx, IdxHeader, IMAGE_MAGIC, IMAGE_SIDE, LABEL_MAGIC,
};
pub use matrix_io::{read_matrix_csv, read_vector_csv};
pub use synthetic::{gaussian_problem, min_norm_solve, RESIDUAL_RTOL};
