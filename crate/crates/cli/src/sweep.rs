//! Parameter sweeps over (model, σ, β) cells.
//!
//! Cells are independent and run on a pool of `jobs` workers; the manifest is
//! written once, after every cell has finished, in cell order. It holds no
//! timestamps or absolute paths, so identical inputs give an identical manifest.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use tiltwell::otoc::{default_t_max, time_grid};
use tiltwell::report::fmt_f64;
use tiltwell::{fit_growth_rate, position_elements, solve, spectrum_stats, thermal_otoc, ModelTag, PotentialSpec};

use crate::commands::{cell_name, Emitter};
use crate::config::Settings;
use crate::Failure;

pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub inputs: Inputs,
    pub cells: Vec<CellRecord>,
}

/// Resolved parameters, minus the output location and worker count, which
/// must not change results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inputs {
    pub models: Vec<String>,
    pub sigmas: Vec<f64>,
    pub betas: Vec<f64>,
    pub grid_points: usize,
    pub domain: Option<[f64; 2]>,
    pub k_states: usize,
    pub k_trunc: usize,
    pub convention: String,
    pub tmax: Option<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    pub dir: String,
    pub model: String,
    pub sigma: f64,
    pub beta: f64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<FileRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

impl Manifest {
    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| c.status != "ok").count()
    }

    pub fn checksums(&self) -> Vec<(String, String)> {
        self.cells
            .iter()
            .flat_map(|c| c.files.iter().map(move |f| (format!("{}/{}", c.dir, f.path), f.sha256.clone())))
            .collect()
    }
}

pub fn sha256_file(path: &Path) -> Result<String, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Every combination of the selected models, σ values and β values. With no
/// model given the sweep covers Model I; an empty σ or β list gives no cells.
pub fn cells(settings: &Settings) -> Vec<(ModelTag, f64, f64)> {
    let models = settings.models.clone().unwrap_or_else(|| vec![ModelTag::ModelI]);
    let sigmas = settings.sigmas.clone().unwrap_or_else(|| vec![0.0]);
    let mut out = Vec::new();
    for &m in &models {
        for &s in &sigmas {
            for &b in &settings.betas {
                out.push((m, s, b));
            }
        }
    }
    out
}

pub fn cmd_sweep(settings: &Settings) -> Result<Manifest, Failure> {
    std::fs::create_dir_all(&settings.out).map_err(|e| Failure::io(&settings.out, e))?;
    let cells = cells(settings);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs)
        .build()
        .map_err(|e| Failure::Config(format!("cannot start {} workers: {e}", settings.jobs)))?;
    let records: Vec<CellRecord> =
        pool.install(|| cells.par_iter().map(|&(m, s, b)| run_cell(settings, m, s, b)).collect());
    let manifest = Manifest {
        tool: "tiltwell".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        core_version: tiltwell::VERSION.into(),
        inputs: Inputs {
            models: settings.models.clone().unwrap_or_else(|| vec![ModelTag::ModelI]).iter().map(|m| m.to_string()).collect(),
            sigmas: settings.sigmas.clone().unwrap_or_else(|| vec![0.0]),
            betas: settings.betas.clone(),
            grid_points: settings.solve.n_points,
            domain: settings.solve.domain.map(|(a, b)| [a, b]),
            k_states: settings.solve.k,
            k_trunc: settings.k_trunc,
            convention: settings.convention.to_string(),
            tmax: settings.t_max,
            samples: settings.otoc_samples(),
        },
        cells: records,
    };
    let text = toml::to_string(&manifest).map_err(|e| Failure::Config(format!("cannot encode manifest: {e}")))?;
    let path = settings.out.join(MANIFEST);
    std::fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
    Ok(manifest)
}

fn run_cell(settings: &Settings, model: ModelTag, sigma: f64, beta: f64) -> CellRecord {
    let dir = match settings.spec(model, sigma) {
        Ok(spec) => format!("{}-beta-{beta}", cell_name(&spec)),
        Err(_) => format!("{}-sigma-{sigma}-beta-{beta}", model.slug()),
    };
    let root = settings.out.join(&dir);
    let result = settings.spec(model, sigma).and_then(|spec| cell_files(settings, &spec, beta, &root));
    let (status, error, files) = match result.and_then(|written| checksums(&root, &written)) {
        Ok(files) => ("ok".to_string(), None, files),
        Err(e) => ("failed".to_string(), Some(e.to_string()), Vec::new()),
    };
    CellRecord { dir, model: model.to_string(), sigma, beta, status, error, files }
}

fn cell_files(settings: &Settings, spec: &PotentialSpec, beta: f64, root: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Emitter::new(root);
    let eig = solve(spec, &settings.solve)?;
    out.table("spectrum.csv", &eig.spectrum_table())?;
    out.table("levels.csv", &spectrum_stats(&eig, None)?.levels_table(&eig))?;
    let set = position_elements(&eig, settings.k_trunc, settings.convention)?;
    let t_max = settings.t_max.unwrap_or_else(|| default_t_max(spec.model()));
    let series = thermal_otoc(&set, beta, &time_grid(t_max, settings.otoc_samples()))?;
    let mut table = series.to_table();
    match fit_growth_rate(&series, None) {
        Ok(f) => {
            table.push_meta("lambda_hat", fmt_f64(f.lambda_hat));
            table.push_meta("window", format!("{} {}", fmt_f64(f.window.0), fmt_f64(f.window.1)));
        }
        Err(e) => table.push_meta("growth", e),
    }
    out.table("otoc_thermal.csv", &table)?;
    Ok(out.into_written())
}

fn checksums(root: &Path, written: &[PathBuf]) -> Result<Vec<FileRecord>, Failure> {
    written
        .iter()
        .map(|rel| {
            Ok(FileRecord { path: rel.to_string_lossy().replace('\\', "/"), sha256: sha256_file(&root.join(rel))? })
        })
        .collect()
}
