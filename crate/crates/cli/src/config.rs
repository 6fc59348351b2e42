//! Run configuration.
//!
//! A run is described by an optional TOML file and command-line flags. Every
//! field is optional in both; a flag replaces the file value field by field,
//! and whatever is still unset takes the documented default in [`Settings`].

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tiltwell::otoc::DEFAULT_SAMPLES;
use tiltwell::schrodinger::{DEFAULT_POINTS, DEFAULT_STATES};
use tiltwell::{Convention, EchoMethod, ModelTag, PotentialConfig, PotentialSpec, SolveOptions};

use crate::Failure;

/// Default truncation of the matrix-element basis.
pub const DEFAULT_TRUNCATION: usize = 100;
/// Temperatures resolved by the default truncation.
pub const DEFAULT_TEMPERATURES: [f64; 4] = [2.0, 5.0, 10.0, 20.0];
/// Default microcanonical states `m` for `otoc`.
pub const DEFAULT_STATE_RANGE: Range<usize> = 0..60;

/// A scalar or a list in the file: `sigma = 30` and `sigma = [0, 30]` both work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    pub fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Raw file or flag values; `None` means "not given here".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub model: Option<OneOrMany<String>>,
    pub sigma: Option<OneOrMany<f64>>,
    /// Ascending by power, for `model = "custom"`.
    pub coefficients: Option<Vec<f64>>,
    /// Tilt of a custom model.
    pub lambda: Option<f64>,
    pub grid_points: Option<usize>,
    pub domain: Option<[f64; 2]>,
    pub k_states: Option<usize>,
    pub k_trunc: Option<usize>,
    pub convention: Option<String>,
    pub beta: Option<OneOrMany<f64>>,
    pub tmax: Option<f64>,
    pub samples: Option<usize>,
    /// Half-open range `[first, last)` of microcanonical states.
    pub states: Option<[usize; 2]>,
    pub method: Option<String>,
    /// Echo perturbation in units of `1/σ_x` of the initial state.
    pub strength: Option<f64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Failure::Config(msg) => Failure::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::Config(e.to_string()))
    }

    /// Values in `flags` win over values in `self`.
    pub fn overlay(self, flags: RunConfig) -> RunConfig {
        RunConfig {
            model: flags.model.or(self.model),
            sigma: flags.sigma.or(self.sigma),
            coefficients: flags.coefficients.or(self.coefficients),
            lambda: flags.lambda.or(self.lambda),
            grid_points: flags.grid_points.or(self.grid_points),
            domain: flags.domain.or(self.domain),
            k_states: flags.k_states.or(self.k_states),
            k_trunc: flags.k_trunc.or(self.k_trunc),
            convention: flags.convention.or(self.convention),
            beta: flags.beta.or(self.beta),
            tmax: flags.tmax.or(self.tmax),
            samples: flags.samples.or(self.samples),
            states: flags.states.or(self.states),
            method: flags.method.or(self.method),
            strength: flags.strength.or(self.strength),
            out: flags.out.or(self.out),
            jobs: flags.jobs.or(self.jobs),
        }
    }

    pub fn resolve(self) -> Result<Settings, Failure> {
        let models = match self.model {
            None => None,
            Some(list) => Some(list.into_vec().iter().map(|m| parse(m)).collect::<Result<Vec<_>, _>>()?),
        };
        let solve = SolveOptions {
            n_points: self.grid_points.unwrap_or(DEFAULT_POINTS),
            k: self.k_states.unwrap_or(DEFAULT_STATES),
            domain: self.domain.map(|[a, b]| (a, b)),
            ..SolveOptions::default()
        };
        let k_trunc = self.k_trunc.unwrap_or(DEFAULT_TRUNCATION.min(solve.k));
        let states = match self.states {
            Some([a, b]) => a..b,
            None => DEFAULT_STATE_RANGE.start..DEFAULT_STATE_RANGE.end.min(k_trunc),
        };
        let settings = Settings {
            models,
            sigmas: self.sigma.map(OneOrMany::into_vec),
            custom: match (self.coefficients, self.lambda) {
                (None, None) => None,
                (c, l) => Some((c.unwrap_or_default(), l.unwrap_or(0.0))),
            },
            solve,
            k_trunc,
            convention: self.convention.as_deref().map(parse).transpose()?.unwrap_or_default(),
            betas: self
                .beta
                .map(OneOrMany::into_vec)
                .unwrap_or_else(|| DEFAULT_TEMPERATURES.iter().map(|t| 1.0 / t).collect()),
            t_max: self.tmax,
            samples: self.samples,
            states,
            method: self.method.as_deref().map(parse).transpose()?.unwrap_or_default(),
            strength: self.strength.unwrap_or(1.0),
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
            jobs: self.jobs.unwrap_or(1),
        };
        settings.validate()?;
        Ok(settings)
    }
}

fn parse<T: FromStr<Err = tiltwell::Error>>(s: &str) -> Result<T, Failure> {
    s.parse().map_err(Failure::from)
}

/// Fully resolved parameters. Model and σ lists stay optional because each
/// command has its own default selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub models: Option<Vec<ModelTag>>,
    pub sigmas: Option<Vec<f64>>,
    /// Coefficients and tilt of a custom model.
    pub custom: Option<(Vec<f64>, f64)>,
    pub solve: SolveOptions,
    pub k_trunc: usize,
    pub convention: Convention,
    pub betas: Vec<f64>,
    /// `None` uses the command's default span.
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
    pub states: Range<usize>,
    pub method: EchoMethod,
    pub strength: f64,
    pub out: PathBuf,
    pub jobs: usize,
}

impl Settings {
    fn validate(&self) -> Result<(), Failure> {
        let fail = |msg: String| Err(Failure::Config(msg));
        if self.solve.k == 0 {
            return fail("k-states must be at least 1".into());
        }
        if self.k_trunc == 0 || self.k_trunc > self.solve.k {
            return fail(format!("k-trunc must lie in 1..={} (k-states)", self.solve.k));
        }
        if self.states.start >= self.states.end || self.states.end > self.k_trunc {
            return fail(format!(
                "states [{}, {}) must be a non-empty range below k-trunc = {}",
                self.states.start, self.states.end, self.k_trunc
            ));
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return fail(format!("tmax must be positive, got {t}"));
            }
        }
        if matches!(self.samples, Some(s) if s < 2) {
            return fail("samples must be at least 2".into());
        }
        if let Some(b) = self.betas.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return fail(format!("beta must be positive and finite, got {b}"));
        }
        if let Some(s) = self.sigmas.iter().flatten().find(|s| !s.is_finite()) {
            return fail(format!("sigma must be finite, got {s}"));
        }
        if !(self.strength > 0.0 && self.strength.is_finite()) {
            return fail(format!("strength must be positive, got {}", self.strength));
        }
        if self.jobs == 0 {
            return fail("jobs must be at least 1".into());
        }
        if self.custom.is_some() && self.models.as_ref().is_some_and(|m| m != &[ModelTag::Custom]) {
            return fail("coefficients and lambda apply only to model = \"custom\"".into());
        }
        Ok(())
    }

    /// Potentials for every selected model and σ, or `defaults` when no model was given.
    pub fn specs(&self, defaults: &[(ModelTag, f64)]) -> Result<Vec<PotentialSpec>, Failure> {
        let pairs: Vec<(ModelTag, f64)> = match &self.models {
            None => match &self.sigmas {
                // σ without a model applies to the default models
                Some(sigmas) => dedup_models(defaults).flat_map(|m| sigmas.iter().map(move |&s| (m, s))).collect(),
                None => defaults.to_vec(),
            },
            Some(models) => {
                let sigmas = self.sigmas.clone().unwrap_or_else(|| vec![0.0]);
                models.iter().flat_map(|&m| sigmas.iter().map(move |&s| (m, s))).collect()
            }
        };
        pairs.into_iter().map(|(m, s)| self.spec(m, s)).collect()
    }

    pub fn spec(&self, model: ModelTag, sigma: f64) -> Result<PotentialSpec, Failure> {
        let config = match (model, &self.custom) {
            (ModelTag::Custom, Some((c, l))) => {
                PotentialConfig { model, sigma: 0.0, coefficients: Some(c.clone()), lambda: Some(*l) }
            }
            _ => PotentialConfig { model, sigma, coefficients: None, lambda: None },
        };
        config.build().map_err(Failure::from)
    }

    pub fn samples_or(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    pub fn otoc_samples(&self) -> usize {
        self.samples_or(DEFAULT_SAMPLES)
    }
}

fn dedup_models(defaults: &[(ModelTag, f64)]) -> impl Iterator<Item = ModelTag> + '_ {
    defaults.iter().enumerate().filter(move |(i, (m, _))| defaults[..*i].iter().all(|(n, _)| n != m)).map(|(_, (m, _))| *m)
}
