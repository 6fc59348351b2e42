//! Spectra, out-of-time-order correlators, Loschmidt echoes and classical
//! bifurcation structure of tilted one-dimensional polynomial wells.
//!
//! Units are natural throughout: `ħ = m = 1`, so the Hamiltonian is
//! `−½ d²/dx² + V(x) + Λx`.

pub mod classical;
pub mod echo;
pub mod operators;
pub mod otoc;
pub mod error;
pub mod poly;
pub mod potential;
pub mod report;
pub mod schrodinger;
pub mod spectral;
pub mod tridiag;

/// Library version, recorded in sweep manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use classical::{
    critical_lambda, fixed_points, phase_portrait, saddle_node_a1, slope_minima, FixedPoint,
    FixedPointSet, Region, SlopeMinimum, Stability, Trajectory,
};
pub use error::{Error, Result, Warning};
pub use poly::Polynomial;
pub use potential::{ModelTag, PotentialConfig, PotentialSpec};
pub use report::Table;
pub use schrodinger::{
    build_hamiltonian, eigensolve, solve, EigenSystem, StencilCorrection, Grid, SolveOptions,
};
pub use operators::{position_elements, Convention, MatrixElementSet};
pub use otoc::{
    fit_growth_rate, growth_scan, matrix_oracle, microcanonical_otoc, thermal_otoc, GrowthFit,
    GrowthScan, GrowthWindowParams, OtocKind, OtocSeries,
};
pub use echo::{
    exact_echo, matched_echo, peres_echo, post_decay_fluctuation, EchoMethod, EchoSeries,
    EchoSettings, Fluctuation, InitialState,
};
pub use spectral::{
    density_of_states, dip_correlation, doublet_splittings, level_differences, spectrum_stats,
    state_moments, Barrier, Dip, DipMatch, Doublet, LevelDifferences, SpectrumStats, StateMoments,
};
