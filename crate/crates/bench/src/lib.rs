//! Shared fixtures of the benchmarks.

use stabfield_core::kernels::{indicator_kernel, linear_fsm_kernel};
use stabfield_core::subordination::build_random_time_kernel;
use stabfield_core::subordinator::sample_fbm;
use stabfield_core::{LinearFsmParams, RandomStream, RandomTimeKernel, TimeGrid};

/// Random-time kernel over `paths` fractional Brownian paths (`H' = 0.5`)
/// on `points` equally spaced times in `[0, 1]`.
pub fn random_time_indicator(points: usize, paths: usize) -> RandomTimeKernel {
    let grid = TimeGrid::uniform(0.0, 1.0, points).expect("grid");
    let batch = sample_fbm(0.5, &grid, paths, &RandomStream::new(7)).expect("batch");
    build_random_time_kernel(&indicator_kernel(1.5).expect("kernel"), &batch).expect("random-time kernel")
}

pub fn random_time_lfsm(points: usize, paths: usize) -> RandomTimeKernel {
    let grid = TimeGrid::uniform(0.0, 1.0, points).expect("grid");
    let batch = sample_fbm(0.5, &grid, paths, &RandomStream::new(7)).expect("batch");
    let k = linear_fsm_kernel(LinearFsmParams::causal(1.5, 0.7).expect("params")).expect("kernel");
    build_random_time_kernel(&k, &batch).expect("random-time kernel")
}
