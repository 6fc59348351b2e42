//! One function per subcommand. Each writes tables and a plot script into a
//! subdirectory of the output directory per potential and returns the written
//! paths relative to that directory.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use tiltwell::classical::{characteristic_period, critical_lambda, locus_table, region_grid, region_table};
use tiltwell::echo::settle_time;
use tiltwell::otoc::{default_t_max, time_grid};
use tiltwell::report::fmt_f64;
use tiltwell::{
    fit_growth_rate, fixed_points, matched_echo, microcanonical_otoc, phase_portrait, position_elements,
    post_decay_fluctuation, slope_minima, solve, spectrum_stats, thermal_otoc, EchoSettings, EigenSystem,
    GrowthScan, ModelTag, PotentialSpec, Table,
};

use crate::config::Settings;
use crate::{plot, Failure};

/// Eigenfunctions drawn by the spectrum script.
pub const PLOTTED_STATES: usize = 10;
/// Rows kept per eigenfunction table and per trajectory.
pub const MAX_ROWS: usize = 2000;
/// Phase-portrait starting points per potential.
pub const TRAJECTORIES: usize = 9;
/// Points per axis of the fixed-point region grid.
pub const REGION_POINTS: usize = 61;
/// Models compared against the harmonic oscillator by `echo`, each tilted past its critical value.
pub const ECHO_PRESETS: [(ModelTag, f64); 3] = [(ModelTag::ModelI, 30.0), (ModelTag::ModelIa, 50.0), (ModelTag::ModelII, 95.0)];

/// Collects output files under one root.
#[derive(Debug)]
pub struct Emitter {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(root: &Path) -> Self {
        Emitter { root: root.to_path_buf(), written: Vec::new() }
    }

    pub fn table(&mut self, rel: impl AsRef<Path>, table: &Table) -> Result<(), Failure> {
        self.text(rel, &table.render())
    }

    pub fn text(&mut self, rel: impl AsRef<Path>, text: &str) -> Result<(), Failure> {
        let rel = rel.as_ref();
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
        }
        std::fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
        self.written.push(rel.to_path_buf());
        Ok(())
    }

    pub fn into_written(self) -> Vec<PathBuf> {
        self.written
    }
}

/// Directory name of one potential, e.g. `model-i-sigma-30`.
pub fn cell_name(spec: &PotentialSpec) -> String {
    match spec.model() {
        ModelTag::Custom => format!("custom-lambda-{}", spec.lambda()),
        m => format!("{}-sigma-{}", m.slug(), spec.sigma()),
    }
}

fn report_warnings(context: &str, warnings: &[tiltwell::Warning]) {
    for w in warnings {
        eprintln!("warning: {context}: {w}");
    }
}

fn solved(settings: &Settings, spec: &PotentialSpec) -> Result<EigenSystem, Failure> {
    let eig = solve(spec, &settings.solve)?;
    report_warnings(&cell_name(spec), &eig.warnings);
    Ok(eig)
}

/// Potential, levels, eigenfunctions, level statistics and fixed points.
pub fn cmd_spectrum(settings: &Settings) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Emitter::new(&settings.out);
    for spec in settings.specs(&[(ModelTag::ModelI, 0.0)])? {
        let dir = PathBuf::from(cell_name(&spec));
        let eig = solved(settings, &spec)?;
        let stats = spectrum_stats(&eig, None)?;
        let stride = eig.grid.n_points().div_ceil(MAX_ROWS);
        out.table(dir.join("spectrum.csv"), &eig.spectrum_table())?;
        out.table(dir.join("states.csv"), &eig.states_table(PLOTTED_STATES, stride))?;
        out.table(dir.join("levels.csv"), &stats.levels_table(&eig))?;
        out.table(dir.join("dos.csv"), &stats.dos_table(&eig))?;
        out.table(dir.join("moments.csv"), &stats.moments_table(&eig))?;
        out.table(dir.join("fixed_points.csv"), &fixed_points(&spec).to_table())?;
        out.text(dir.join("spectrum.gp"), &plot::spectrum(PLOTTED_STATES.min(eig.len())))?;
    }
    Ok(out.into_written())
}

/// Microcanonical correlators over the configured states, their growth fits,
/// and thermal correlators per β.
pub fn cmd_otoc(settings: &Settings) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Emitter::new(&settings.out);
    for spec in settings.specs(&[(ModelTag::ModelI, 0.0)])? {
        let dir = PathBuf::from(cell_name(&spec));
        let eig = solved(settings, &spec)?;
        let set = position_elements(&eig, settings.k_trunc, settings.convention)?;
        let t_max = settings.t_max.unwrap_or_else(|| default_t_max(spec.model()));
        let times = time_grid(t_max, settings.otoc_samples());

        let states: Vec<usize> = settings.states.clone().collect();
        let series = states
            .par_iter()
            .map(|&m| microcanonical_otoc(&set, m, &times))
            .collect::<tiltwell::Result<Vec<_>>>()?;
        for s in &series {
            report_warnings(&cell_name(&spec), &s.warnings);
        }
        let scan = GrowthScan {
            fits: series.iter().map(|s| fit_growth_rate(s, None).ok()).collect(),
            states: states.clone(),
        };
        let mut micro = wide_table(&times, states.iter().map(|m| format!("m{m}")), series.iter().map(|s| &s.values[..]));
        annotate(&mut micro, &spec, settings);
        let mut growth = scan.to_table();
        annotate(&mut growth, &spec, settings);
        out.table(dir.join("otoc_micro.csv"), &micro)?;
        out.table(dir.join("growth.csv"), &growth)?;

        let thermal = settings
            .betas
            .iter()
            .map(|&b| thermal_otoc(&set, b, &times))
            .collect::<tiltwell::Result<Vec<_>>>()?;
        if !thermal.is_empty() {
            let mut table =
                wide_table(&times, settings.betas.iter().map(|b| format!("beta={b}")), thermal.iter().map(|s| &s.values[..]));
            annotate(&mut table, &spec, settings);
            let mut fits = Table::new(["beta", "T", "detected", "lambda_hat", "r_squared", "t_lo", "t_hi", "lambda_stderr"]);
            annotate(&mut fits, &spec, settings);
            for (b, s) in settings.betas.iter().zip(&thermal) {
                report_warnings(&format!("{} beta={b}", cell_name(&spec)), &s.warnings);
                for w in &s.warnings {
                    table.push_meta("warning", format!("beta={b}: {w}"));
                }
                let mut row = vec![fmt_f64(*b), fmt_f64(1.0 / b)];
                match fit_growth_rate(s, None) {
                    Ok(f) => {
                        row.push("1".into());
                        row.extend([f.lambda_hat, f.r_squared, f.window.0, f.window.1, f.lambda_stderr].map(fmt_f64));
                    }
                    Err(_) => {
                        row.push("0".into());
                        row.extend(std::iter::repeat_n("nan".to_string(), 5));
                    }
                }
                fits.push_row(row);
            }
            out.table(dir.join("otoc_thermal.csv"), &table)?;
            out.table(dir.join("thermal_fits.csv"), &fits)?;
        }
        out.text(dir.join("otoc.gp"), &plot::otoc(!thermal.is_empty()))?;
    }
    Ok(out.into_written())
}

fn annotate(t: &mut Table, spec: &PotentialSpec, settings: &Settings) {
    t.push_meta("model", spec.model());
    t.push_meta("sigma", fmt_f64(spec.sigma()));
    t.push_meta("K_t", settings.k_trunc);
    t.push_meta("convention", settings.convention);
}

/// `t` followed by one column per series.
fn wide_table<'a>(
    times: &[f64],
    names: impl Iterator<Item = String>,
    columns: impl Iterator<Item = &'a [f64]>,
) -> Table {
    let columns: Vec<&[f64]> = columns.collect();
    let mut t = Table::new(std::iter::once("t".to_string()).chain(names));
    for (i, &time) in times.iter().enumerate() {
        let mut row = vec![time];
        row.extend(columns.iter().map(|c| c[i]));
        t.push_floats(&row);
    }
    t
}

/// Echo of the harmonic oscillator and each selected model at matched
/// perturbation strength, plus their post-decay fluctuation.
pub fn cmd_echo(settings: &Settings) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Emitter::new(&settings.out);
    let echo = EchoSettings {
        strength: settings.strength,
        t_max: settings.t_max.unwrap_or(EchoSettings::default().t_max),
        samples: settings.samples_or(EchoSettings::default().samples),
        method: settings.method,
        solve: settings.solve,
        ..EchoSettings::default()
    };
    let mut specs = vec![settings.spec(ModelTag::Harmonic, 0.0)?];
    specs.extend(settings.specs(&ECHO_PRESETS)?.into_iter().filter(|s| !(s.model() == ModelTag::Harmonic && s.sigma() == 0.0)));
    let dir = PathBuf::from("echo");
    let mut summary = Table::new(["model", "sigma", "delta_lambda", "t_settle", "mean", "amplitude_std"])
        .meta("method", echo.method)
        .meta("strength", fmt_f64(echo.strength));
    let mut files = Vec::new();
    for spec in &specs {
        let series = matched_echo(spec, &echo)?;
        let name = format!("{}.csv", cell_name(spec));
        out.table(dir.join(&name), &series.to_table())?;
        files.push(name);
        let settle = settle_time(&series)?;
        let tail = post_decay_fluctuation(&series, settle)?;
        summary.push_row(vec![
            spec.model().to_string(),
            fmt_f64(spec.sigma()),
            fmt_f64(series.lambda),
            fmt_f64(settle),
            fmt_f64(tail.mean),
            fmt_f64(tail.amplitude_std),
        ]);
    }
    out.table(dir.join("fluctuation.csv"), &summary)?;
    out.text(dir.join("echo.gp"), &plot::echo(&files))?;
    Ok(out.into_written())
}

/// Fixed points, slope minima and a phase portrait per potential, and the
/// fixed-point region grid per model.
pub fn cmd_classical(settings: &Settings) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Emitter::new(&settings.out);
    let specs = settings.specs(&[(ModelTag::ModelI, 0.0)])?;
    for spec in &specs {
        let dir = PathBuf::from(cell_name(spec));
        let fps = fixed_points(spec);
        out.table(dir.join("fixed_points.csv"), &fps.to_table())?;
        let mut minima = Table::new(["x", "slope", "turning_energy"]);
        for m in slope_minima(spec) {
            minima.push_floats(&[m.x, m.slope, m.turning_energy]);
        }
        out.table(dir.join("slope_minima.csv"), &minima)?;

        let (lo, hi) = fps
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.x), b.max(p.x)));
        let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
        let margin = 0.5 * (hi - lo).max(1.0);
        let starts: Vec<(f64, f64)> = (0..TRAJECTORIES)
            .map(|i| (lo - margin + (hi - lo + 2.0 * margin) * i as f64 / (TRAJECTORIES - 1) as f64, 0.0))
            .collect();
        let period = characteristic_period(spec, &starts);
        let dt = period / 100.0;
        let t_max = settings.t_max.unwrap_or(20.0);
        let trajectories = phase_portrait(spec, &starts, t_max, dt)?;
        for (i, tr) in trajectories.iter().enumerate() {
            let full = tr.to_table(spec);
            let stride = full.len().div_ceil(MAX_ROWS).max(1);
            let mut thin = Table::new(full.columns().to_vec()).meta("x0", fmt_f64(starts[i].0)).meta("dt", fmt_f64(dt));
            thin.push_meta("energy_drift", fmt_f64(tr.energy_drift));
            for row in full.rows().iter().step_by(stride) {
                thin.push_row(row.clone());
            }
            out.table(dir.join(format!("phase_{i}.csv")), &thin)?;
        }
        out.text(dir.join("phase.gp"), &plot::phase_portrait(trajectories.len()))?;
    }

    let mut models: Vec<ModelTag> = specs.iter().map(|s| s.model()).collect();
    models.dedup();
    for model in models {
        let Some((a0, a1)) = model.parameters() else { continue };
        let lambda_c = critical_lambda(&PotentialSpec::preset(model, 0.0)?)?;
        let lambda_max = 2.0 * lambda_c.max(1.0);
        let lambdas = linspace(0.0, lambda_max, REGION_POINTS);
        let a1s = linspace(0.0, 2.0 * a1, REGION_POINTS);
        let cells = region_grid(model, a0, &a1s, &lambdas)?;
        let dir = PathBuf::from(format!("{}-regions", model.slug()));
        let mut regions = region_table(&cells);
        regions.push_meta("model", model);
        regions.push_meta("a0", fmt_f64(a0));
        regions.push_meta("critical_lambda", fmt_f64(lambda_c));
        out.table(dir.join("regions.csv"), &regions)?;
        // the closed-form saddle-node locus belongs to the quartic double well
        let quartic = model == ModelTag::ModelI;
        if quartic {
            out.table(dir.join("locus.csv"), &locus_table(a0, &lambdas))?;
        }
        out.text(dir.join("regions.gp"), &plot::regions(quartic))?;
    }
    Ok(out.into_written())
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}
