//! The perturbed-well family `V(x) + Λx + shift` and its presets.
//!
//! Every preset is a confining even polynomial with a stabilising and a
//! destabilising coefficient `(a0, a1)`. The asymmetry parameter `σ` maps to
//! the tilt through `Λ = σ·√|a0 / (2 a1)|`, which makes the first-order energy
//! offset between the two outer wells of the quartic equal to `σ`. The
//! additive shift puts the global minimum of the tilted potential at zero.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::poly::Polynomial;

/// Highest supported power.
pub const MAX_POWER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelTag {
    /// Double well `a0 x⁴ − a1 x²`.
    ModelI,
    /// Double well with a plateau `a0 x⁶ − a1 x⁴`.
    ModelIa,
    /// Triple well `a1 x² − a0 x⁴ + x⁶`.
    ModelII,
    /// `x²/2`, used as the analytic reference.
    Harmonic,
    Custom,
}

impl ModelTag {
    pub const PRESETS: [ModelTag; 4] =
        [ModelTag::ModelI, ModelTag::ModelIa, ModelTag::ModelII, ModelTag::Harmonic];

    /// The `(a0, a1)` pair of a preset, read positionally from its definition.
    pub fn parameters(self) -> Option<(f64, f64)> {
        match self {
            ModelTag::ModelI => Some((0.02, 0.64)),
            ModelTag::ModelIa => Some((1.0 / 142.0, 0.15)),
            ModelTag::ModelII => Some((10.95445, 30.0)),
            ModelTag::Harmonic | ModelTag::Custom => None,
        }
    }

    /// Untilted polynomial coefficients, indexed by power.
    pub fn coefficients_with(self, a0: f64, a1: f64) -> Option<[f64; MAX_POWER + 1]> {
        let mut c = [0.0; MAX_POWER + 1];
        match self {
            ModelTag::ModelI => {
                c[4] = a0;
                c[2] = -a1;
            }
            ModelTag::ModelIa => {
                c[6] = a0;
                c[4] = -a1;
            }
            ModelTag::ModelII => {
                c[2] = a1;
                c[4] = -a0;
                c[6] = 1.0;
            }
            ModelTag::Harmonic => c[2] = 0.5,
            ModelTag::Custom => return None,
        }
        Some(c)
    }

    pub fn base_coefficients(self) -> Option<[f64; MAX_POWER + 1]> {
        let (a0, a1) = self.parameters().unwrap_or((0.0, 0.0));
        self.coefficients_with(a0, a1)
    }

    /// `√|a0 / (2 a1)|`; the harmonic reference uses `Λ = σ`.
    pub fn sigma_to_lambda(self) -> Option<f64> {
        match self {
            ModelTag::Harmonic => Some(1.0),
            ModelTag::Custom => None,
            m => m.parameters().map(|(a0, a1)| (a0 / (2.0 * a1)).abs().sqrt()),
        }
    }

    /// Fixed solver domain, or `None` when it must be sized from the spectrum.
    pub fn default_domain(self) -> Option<(f64, f64)> {
        match self {
            ModelTag::ModelII => None,
            _ => Some((-10.0, 10.0)),
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            ModelTag::ModelI => "model-i",
            ModelTag::ModelIa => "model-ia",
            ModelTag::ModelII => "model-ii",
            ModelTag::Harmonic => "harmonic",
            ModelTag::Custom => "custom",
        }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for ModelTag {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' ' | '(' | ')'))
            .flat_map(char::to_lowercase)
            .collect();
        let key = key.strip_prefix("model").unwrap_or(&key);
        match key {
            "i" | "1" => Ok(ModelTag::ModelI),
            "ia" | "1a" => Ok(ModelTag::ModelIa),
            "ii" | "2" => Ok(ModelTag::ModelII),
            "harmonic" | "ho" => Ok(ModelTag::Harmonic),
            "custom" => Ok(ModelTag::Custom),
            _ => Err(invalid(format!("unknown model '{s}'"))),
        }
    }
}

/// A tilted, shifted polynomial well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    coefficients: [f64; MAX_POWER + 1],
    lambda: f64,
    sigma: f64,
    shift: f64,
    model: ModelTag,
}

impl PotentialSpec {
    /// Builds a preset at asymmetry `sigma`, with the zero-minimum shift applied.
    pub fn preset(model: ModelTag, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(invalid(format!("sigma must be finite and non-negative, got {sigma}")));
        }
        let (coefficients, ratio) = match (model.base_coefficients(), model.sigma_to_lambda()) {
            (Some(c), Some(r)) => (c, r),
            _ => return Err(invalid("custom potentials need explicit coefficients")),
        };
        let mut spec =
            PotentialSpec { coefficients, lambda: sigma * ratio, sigma, shift: 0.0, model };
        spec.shift = -spec.unshifted_minimum().1;
        Ok(spec)
    }

    /// Builds a custom well from coefficients indexed by power and an explicit tilt.
    pub fn custom(coefficients: &[f64], lambda: f64) -> Result<Self> {
        if coefficients.len() > MAX_POWER + 1 {
            return Err(invalid(format!("polynomial degree is limited to {MAX_POWER}")));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(invalid(format!("lambda must be finite and non-negative, got {lambda}")));
        }
        let mut c = [0.0; MAX_POWER + 1];
        c[..coefficients.len()].copy_from_slice(coefficients);
        Self::from_parts(c, lambda, 0.0, ModelTag::Custom)
    }

    /// Preset shape with overridden `(a0, a1)`; used for bifurcation scans.
    pub fn with_parameters(model: ModelTag, a0: f64, a1: f64, lambda: f64) -> Result<Self> {
        let c = model
            .coefficients_with(a0, a1)
            .ok_or_else(|| invalid("custom potentials have no (a0, a1) parameters"))?;
        let sigma = model.sigma_to_lambda().map_or(0.0, |_| {
            let r = (a0 / (2.0 * a1)).abs().sqrt();
            if model == ModelTag::Harmonic || r == 0.0 {
                lambda
            } else {
                lambda / r
            }
        });
        Self::from_parts(c, lambda, sigma, model)
    }

    fn from_parts(
        coefficients: [f64; MAX_POWER + 1],
        lambda: f64,
        sigma: f64,
        model: ModelTag,
    ) -> Result<Self> {
        let top = coefficients.iter().rposition(|&c| c != 0.0);
        match top {
            Some(p) if p >= 2 && p % 2 == 0 && coefficients[p] > 0.0 => {}
            _ => {
                return Err(invalid(
                    "highest power must be even with a positive coefficient",
                ))
            }
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coefficients must be finite"));
        }
        let mut spec = PotentialSpec { coefficients, lambda, sigma, shift: 0.0, model };
        spec.shift = -spec.unshifted_minimum().1;
        Ok(spec)
    }

    /// Same well with an extra additive constant.
    pub fn with_offset(&self, c: f64) -> Self {
        PotentialSpec { shift: self.shift + c, ..self.clone() }
    }

    /// Same well with a different tilt, re-shifted to a zero minimum.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let ratio = self.model.sigma_to_lambda();
        let sigma = match ratio {
            Some(r) if r > 0.0 => lambda / r,
            _ => 0.0,
        };
        Self::from_parts(self.coefficients, lambda, sigma, self.model)
    }

    pub fn model(&self) -> ModelTag {
        self.model
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn shift(&self) -> f64 {
        self.shift
    }
    pub fn coefficient(&self, power: usize) -> f64 {
        self.coefficients.get(power).copied().unwrap_or(0.0)
    }
    pub fn coefficients(&self) -> &[f64; MAX_POWER + 1] {
        &self.coefficients
    }

    /// `d^order/dx^order [V(x) + Λx + shift]`, by Horner.
    pub fn evaluate(&self, x: f64, order: usize) -> f64 {
        let c = self.full_coefficients();
        let mut acc = 0.0;
        for p in (order..=MAX_POWER).rev() {
            let falling: f64 = ((p - order + 1)..=p).map(|k| k as f64).product();
            acc = acc * x + c[p] * falling;
        }
        acc
    }

    pub fn value(&self, x: f64) -> f64 {
        self.evaluate(x, 0)
    }

    fn full_coefficients(&self) -> [f64; MAX_POWER + 1] {
        let mut c = self.coefficients;
        c[0] += self.shift;
        c[1] += self.lambda;
        c
    }

    /// `V(x) + Λx + shift` as a polynomial.
    pub fn polynomial(&self) -> Polynomial {
        Polynomial::new(self.full_coefficients().to_vec())
    }

    /// The untilted, unshifted `V(x)`.
    pub fn base_polynomial(&self) -> Polynomial {
        Polynomial::new(self.coefficients.to_vec())
    }

    /// Global minimiser of the tilted potential.
    pub fn global_minimizer(&self) -> f64 {
        self.unshifted_minimum().0
    }

    /// Global minimum of `V(x) + Λx` (no shift) and its location.
    fn unshifted_minimum(&self) -> (f64, f64) {
        let mut tilted = self.coefficients;
        tilted[1] += self.lambda;
        let poly = Polynomial::new(tilted.to_vec());
        poly.derivative()
            .real_roots()
            .into_iter()
            .map(|r| (r.x, poly.eval(r.x)))
            .fold((0.0, f64::INFINITY), |best, cand| if cand.1 < best.1 { cand } else { best })
    }
}

/// Structured config block: `{model, sigma, coefficients?, lambda?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub model: ModelTag,
    #[serde(default)]
    pub sigma: f64,
    /// Ascending by power; custom models only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl PotentialConfig {
    pub fn build(&self) -> Result<PotentialSpec> {
        match self.model {
            ModelTag::Custom => {
                let coefficients = self
                    .coefficients
                    .as_deref()
                    .ok_or_else(|| invalid("custom model requires 'coefficients'"))?;
                PotentialSpec::custom(coefficients, self.lambda.unwrap_or(0.0))
            }
            model => {
                if self.coefficients.is_some() || self.lambda.is_some() {
                    return Err(invalid(format!(
                        "preset '{model}' takes only 'sigma'; use model = \"custom\" to set coefficients"
                    )));
                }
                PotentialSpec::preset(model, self.sigma)
            }
        }
    }
}

impl From<&PotentialSpec> for PotentialConfig {
    fn from(spec: &PotentialSpec) -> Self {
        match spec.model {
            ModelTag::Custom => PotentialConfig {
                model: ModelTag::Custom,
                sigma: 0.0,
                coefficients: Some(spec.coefficients.to_vec()),
                lambda: Some(spec.lambda),
            },
            model => PotentialConfig { model, sigma: spec.sigma, coefficients: None, lambda: None },
        }
    }
}
