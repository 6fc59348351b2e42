//! Position and momentum matrix elements in the truncated energy eigenbasis.
//!
//! Only `x_mn` is integrated. Momentum follows from `[H, x] ∝ p`, which in the
//! eigenbasis reads `p_mn = iκ E_mn x_mn` with `E_mn = E_m − E_n`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::potential::PotentialSpec;
use crate::report::{fmt_f64, Table};
use crate::schrodinger::EigenSystem;

/// Prefactor relating momentum to the energy-weighted position elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `κ = 1/2`, which reproduces the quarter prefactor of the printed
    /// four-term correlator.
    #[default]
    Half,
    /// `κ = 1`, the value implied by a `p²/2` kinetic term.
    Canonical,
}

impl Convention {
    pub fn kappa(self) -> f64 {
        match self {
            Convention::Half => 0.5,
            Convention::Canonical => 1.0,
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            Convention::Half => "half",
            Convention::Canonical => "canonical",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "half" => Ok(Convention::Half),
            "canonical" => Ok(Convention::Canonical),
            _ => Err(invalid(format!("unknown convention '{s}' (expected half or canonical)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixElementSet {
    /// Row-major `K_t × K_t`, exactly symmetric.
    x: Vec<f64>,
    energies: Vec<f64>,
    convention: Convention,
    spec: PotentialSpec,
}

/// `x_mn = Σ_i Ψ_m(x_i) x_i Ψ_n(x_i) h` for `m, n < k_t`.
pub fn position_elements(
    eig: &EigenSystem,
    k_t: usize,
    convention: Convention,
) -> Result<MatrixElementSet> {
    if k_t > eig.len() {
        return Err(Error::TruncationTooLarge { requested: k_t, available: eig.len() });
    }
    if k_t == 0 {
        return Err(invalid("truncation must keep at least one state"));
    }
    let h = eig.spacing();
    let xs = eig.grid.points();
    let weighted: Vec<Vec<f64>> =
        eig.states[..k_t].iter().map(|s| s.iter().zip(&xs).map(|(p, x)| p * x).collect()).collect();
    let upper: Vec<Vec<f64>> = (0..k_t)
        .into_par_iter()
        .map(|m| {
            (m..k_t)
                .map(|n| weighted[m].iter().zip(&eig.states[n]).map(|(a, b)| a * b).sum::<f64>() * h)
                .collect()
        })
        .collect();
    let mut x = vec![0.0; k_t * k_t];
    for (m, row) in upper.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let n = m + j;
            x[m * k_t + n] = v;
            x[n * k_t + m] = v;
        }
    }
    Ok(MatrixElementSet {
        x,
        energies: eig.energies[..k_t].to_vec(),
        convention,
        spec: eig.spec.clone(),
    })
}

impl MatrixElementSet {
    /// Builds a set from explicit tables, for analytic models and tests.
    pub fn from_parts(
        x: Vec<f64>,
        energies: Vec<f64>,
        convention: Convention,
        spec: PotentialSpec,
    ) -> Result<Self> {
        let k = energies.len();
        if x.len() != k * k {
            return Err(invalid("position table must be K_t x K_t"));
        }
        for m in 0..k {
            for n in 0..m {
                if x[m * k + n] != x[n * k + m] {
                    return Err(invalid("position table must be symmetric"));
                }
            }
        }
        Ok(MatrixElementSet { x, energies, convention, spec })
    }

    pub fn truncation(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn kappa(&self) -> f64 {
        self.convention.kappa()
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    /// Row-major position table.
    pub fn x_table(&self) -> &[f64] {
        &self.x
    }

    pub fn x(&self, m: usize, n: usize) -> f64 {
        self.x[m * self.truncation() + n]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        let k = self.truncation();
        &self.x[m * k..(m + 1) * k]
    }

    /// `E_m − E_n`.
    pub fn energy_diff(&self, m: usize, n: usize) -> f64 {
        self.energies[m] - self.energies[n]
    }

    /// `p_mn = iκ E_mn x_mn`.
    pub fn momentum(&self, m: usize, n: usize) -> Complex64 {
        Complex64::new(0.0, self.kappa() * self.energy_diff(m, n) * self.x(m, n))
    }

    /// Same tables under another convention.
    pub fn with_convention(&self, convention: Convention) -> Self {
        MatrixElementSet { convention, ..self.clone() }
    }

    /// Leading `k` states only.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        let have = self.truncation();
        if k > have {
            return Err(Error::TruncationTooLarge { requested: k, available: have });
        }
        let x = (0..k).flat_map(|m| self.row(m)[..k].to_vec()).collect();
        Ok(MatrixElementSet { x, energies: self.energies[..k].to_vec(), ..self.clone() })
    }

    /// `Σ_k (E_k − E_m) |x_km|²`, which tends to 1/2 with a complete basis.
    pub fn sum_rule(&self, m: usize) -> f64 {
        (0..self.truncation()).map(|k| self.energy_diff(k, m) * self.x(k, m).powi(2)).sum()
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["m", "n", "x_mn", "E_mn"])
            .meta("model", self.spec.model())
            .meta("sigma", fmt_f64(self.spec.sigma()))
            .meta("K_t", self.truncation())
            .meta("convention", self.convention);
        let k = self.truncation();
        for m in 0..k {
            for n in m..k {
                t.push_row(vec![
                    m.to_string(),
                    n.to_string(),
                    fmt_f64(self.x(m, n)),
                    fmt_f64(self.energy_diff(m, n)),
                ]);
            }
        }
        t
    }
}
