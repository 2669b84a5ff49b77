//! Shared fixtures for the pipeline benchmarks.

use ndarray::Array2;
use sparserc::{
    generate_dataset, generate_random_dag, DataGenConfig, Dataset, GraphGenConfig, WeightedDag,
};

pub fn fixture_dag(d: usize, seed: u64) -> WeightedDag {
    generate_random_dag(&GraphGenConfig {
        d,
        seed,
        ..GraphGenConfig::default()
    })
    .expect("valid fixture config")
}

pub fn fixture_dataset(d: usize, n: usize, seed: u64) -> (WeightedDag, Dataset) {
    let g = fixture_dag(d, seed);
    let ds = generate_dataset(
        &g,
        &DataGenConfig {
            n,
            seed,
            ..DataGenConfig::default()
        },
    )
    .expect("valid fixture config");
    (g, ds)
}

/// A dense-ish square matrix that is generally cyclic, for the acyclicity
/// penalty benchmarks.
pub fn fixture_square(d: usize) -> Array2<f64> {
    Array2::from_shape_fn((d, d), |(i, j)| {
        if i == j {
            0.0
        } else {
            ((i * 31 + j * 17) % 13) as f64 / 26.0 - 0.25
        }
    })
}
