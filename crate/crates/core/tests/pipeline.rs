//! End-to-end checks across solver, matrix elements, correlators and spectra.

use std::sync::OnceLock;

use tiltwell::otoc::{default_t_max, time_grid, DEFAULT_SAMPLES};
use tiltwell::schrodinger::{compare_grids, convergence_report};
use tiltwell::spectral::Barrier;
use tiltwell::*;

fn model_i_flat() -> &'static EigenSystem {
    static EIG: OnceLock<EigenSystem> = OnceLock::new();
    EIG.get_or_init(|| {
        let spec = PotentialSpec::preset(ModelTag::ModelI, 0.0).unwrap();
        solve(&spec, &SolveOptions::default()).unwrap()
    })
}

#[test]
fn harmonic_levels_settle_under_refinement() {
    let spec = PotentialSpec::preset(ModelTag::Harmonic, 0.0).unwrap();
    let report = convergence_report(&spec, &Grid::new(-10.0, 10.0, 2048).unwrap(), 20).unwrap();
    assert!(report.max_relative_change < 1e-6, "{}", report.max_relative_change);
}

#[test]
fn triple_well_levels_ignore_the_walls() {
    let spec = PotentialSpec::preset(ModelTag::ModelII, 0.0).unwrap();
    // same spacing on both boxes, so only the wall position differs
    let narrow = Grid::new(-4.0, 4.0, 4097).unwrap();
    let wide = Grid::new(-6.0, 6.0, 6145).unwrap();
    assert_eq!(narrow.spacing(), wide.spacing());
    let report = compare_grids(&spec, &narrow, &wide, 40).unwrap();
    assert!(report.max_relative_change < 1e-8, "{}", report.max_relative_change);
}

#[test]
fn correlator_ignores_a_constant_offset() {
    let eig = model_i_flat();
    let shifted = solve(&eig.spec.with_offset(7.25), &SolveOptions::default()).unwrap();
    let a = position_elements(eig, 60, Convention::Half).unwrap();
    let b = position_elements(&shifted, 60, Convention::Half).unwrap();
    let times = time_grid(10.0, 101);
    for m in [0, 8, 20] {
        let ca = microcanonical_otoc(&a, m, &times).unwrap();
        let cb = microcanonical_otoc(&b, m, &times).unwrap();
        for (x, y) in ca.values.iter().zip(&cb.values) {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0), "m={m}: {x} vs {y}");
        }
    }
}

#[test]
fn truncation_settles_at_the_default_basis() {
    let eig = model_i_flat();
    let small = position_elements(eig, 100, Convention::Half).unwrap();
    let large = position_elements(eig, 120, Convention::Half).unwrap();
    let times = time_grid(default_t_max(ModelTag::ModelI), DEFAULT_SAMPLES);
    for m in [4, 8, 12] {
        let a = microcanonical_otoc(&small, m, &times).unwrap();
        let b = microcanonical_otoc(&large, m, &times).unwrap();
        let fit = fit_growth_rate(&a, None).unwrap();
        let worst = a
            .times
            .iter()
            .zip(a.values.iter().zip(&b.values))
            .filter(|(t, _)| **t >= fit.window.0 && **t <= fit.window.1)
            .map(|(_, (x, y))| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst / a.values[0] < 0.01, "m={m}: {worst}");
    }
}

#[test]
fn hilltop_state_grows_below_the_inverted_oscillator_rate() {
    let set = position_elements(model_i_flat(), 100, Convention::Half).unwrap();
    let series = microcanonical_otoc(&set, 8, &time_grid(10.0, DEFAULT_SAMPLES)).unwrap();
    let fit = fit_growth_rate(&series, None).unwrap();
    // the classical saddle rate bounds an eigenstate's growth from above
    let benchmark = (2.0f64 * 0.64).sqrt();
    assert!(fit.lambda_hat > 0.5 * benchmark && fit.lambda_hat < benchmark, "{}", fit.lambda_hat);
    let oracle = matrix_oracle(&set, 8, 3.0);
    let direct = microcanonical_otoc(&set, 8, &[3.0]).unwrap().values[0];
    assert!((oracle - direct).abs() / direct < 1e-8);
}

#[test]
fn thermal_truncation_resolves_up_to_twenty() {
    let set = position_elements(model_i_flat(), 100, Convention::Half).unwrap();
    let times = time_grid(1.0, 3);
    let warm = thermal_otoc(&set, 1.0 / 20.0, &times).unwrap();
    assert!(warm.warnings.is_empty(), "{:?}", warm.warnings);
    let hot = thermal_otoc(&set, 1.0 / 50.0, &times).unwrap();
    assert!(matches!(hot.warnings.as_slice(), [Warning::TruncationTooSmall { .. }]));
}

#[test]
fn half_convention_is_a_quarter_of_canonical() {
    let half = position_elements(model_i_flat(), 40, Convention::Half).unwrap();
    let full = half.with_convention(Convention::Canonical);
    let times = time_grid(5.0, 21);
    let a = microcanonical_otoc(&half, 6, &times).unwrap();
    let b = microcanonical_otoc(&full, 6, &times).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert_eq!(*x, y / 4.0);
    }
}

#[test]
fn tilted_spectrum_statistics() {
    let spec = PotentialSpec::preset(ModelTag::ModelI, 30.0).unwrap();
    let eig = solve(&spec, &SolveOptions::default()).unwrap();
    let stats = spectrum_stats(&eig, None).unwrap();
    let dip = stats.levels.deepest().unwrap();
    let turning = slope_minima(&spec)[0].turning_energy;
    assert!(spectral::level_distance(&eig.energies, dip.energy, turning) < 3.0);
    // dip states stretch further than the states below their cluster; widths
    // keep growing above it, so the upper neighbour is wider still
    let cluster = stats.levels.clusters.iter().find(|c| c.contains(&dip.index)).unwrap();
    let inside = stats.per_state[dip.index].support_width;
    let lower = stats.per_state[cluster.start() - 1].support_width;
    let upper = stats.per_state[cluster.end() + 2].support_width;
    assert!(inside > lower, "{inside} vs {lower}");
    assert!(upper > inside, "{upper} vs {inside}");
    assert!(stats.levels_table(&eig).render().contains("# dip: n="));
    assert_eq!(stats.dos.len(), spectral::DOS_SAMPLES);
}

#[test]
fn triple_well_beyond_critical_has_two_bands() {
    let spec = PotentialSpec::preset(ModelTag::ModelII, 95.0).unwrap();
    let eig = solve(&spec, &SolveOptions::default()).unwrap();
    let levels = level_differences(&eig).unwrap();
    assert_eq!(levels.dips.len(), 2);
    assert_eq!(levels.clusters.len(), 2);
    assert!(levels.clusters[0].end() < levels.clusters[1].start());
    assert!(levels.dips[1].value < levels.dips[0].value, "the upper dip is deeper");
    for m in dip_correlation(&eig, &levels) {
        assert!(m.distance < 3.0, "{m:?}");
    }
}

#[test]
fn doublets_of_the_tilted_double_well() {
    let spec = PotentialSpec::preset(ModelTag::ModelI, 10.0).unwrap();
    let eig = solve(&spec, &SolveOptions { k: 30, ..Default::default() }).unwrap();
    let doublets = doublet_splittings(&eig, Barrier::of(&spec).unwrap());
    assert!(!doublets.is_empty());
    for d in doublets {
        assert!((d.splitting - 10.0).abs() <= 1.5, "{d:?}");
    }
}

#[test]
fn harmonic_echo_outfluctuates_tilted_wells() {
    let settings = EchoSettings::default();
    let tail = |model, sigma| {
        let spec = PotentialSpec::preset(model, sigma).unwrap();
        let series = matched_echo(&spec, &settings).unwrap();
        let settle = echo::settle_time(&series).unwrap();
        post_decay_fluctuation(&series, settle).unwrap().amplitude_std
    };
    let reference = tail(ModelTag::Harmonic, 0.0);
    assert!(reference > tail(ModelTag::ModelI, 30.0));
    assert!(reference > tail(ModelTag::ModelII, 95.0));
}
