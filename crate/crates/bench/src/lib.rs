//! Fixtures shared by the kernel benchmarks.

use tiltwell::otoc::{default_t_max, time_grid, DEFAULT_SAMPLES};
use tiltwell::{position_elements, solve, Convention, EigenSystem, MatrixElementSet, ModelTag, PotentialSpec, SolveOptions};

/// Grid sizes swept by the eigensolver benchmark.
pub const GRID_SIZES: [usize; 3] = [1024, 2048, 4096];

pub fn model_i(sigma: f64) -> PotentialSpec {
    PotentialSpec::preset(ModelTag::ModelI, sigma).expect("preset parameters are valid")
}

pub fn options(n_points: usize) -> SolveOptions {
    SolveOptions { n_points, ..SolveOptions::default() }
}

/// Model I at σ = 30 on the default grid.
pub fn eigensystem() -> EigenSystem {
    solve(&model_i(30.0), &SolveOptions::default()).expect("default solve converges")
}

pub fn elements(eig: &EigenSystem) -> MatrixElementSet {
    position_elements(eig, 100, Convention::Half).expect("truncation fits the solved states")
}

pub fn times() -> Vec<f64> {
    time_grid(default_t_max(ModelTag::ModelI), DEFAULT_SAMPLES)
}
