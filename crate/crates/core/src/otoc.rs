//! Out-of-time-order correlators `−⟨[x(t), p]²⟩` in single eigenstates and
//! Boltzmann ensembles, plus detection of their early exponential growth.
//!
//! With `b_mk(t) = κ Σ_l x_ml x_lk (E_lk e^{iE_ml t} − E_ml e^{iE_lk t})` the
//! commutator is `i b`, `b` is Hermitian and `c_m(t) = Σ_k |b_mk(t)|²`. Both
//! terms of `b` factor through one contraction over `l`, so a row costs
//! `O(K_t²)` per time.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result, Warning};
use crate::operators::{Convention, MatrixElementSet};
use crate::potential::{ModelTag, PotentialSpec};
use crate::report::{fmt_f64, Table};

/// Thermal sums drop states whose relative Boltzmann weight is below this.
pub const BOLTZMANN_CUTOFF: f64 = 1e-10;
/// Number of top basis states inspected by the truncation diagnostic.
pub const TRUNCATION_PROBE: usize = 10;
/// Share of `c_m(0)` the probe states may carry before a warning.
pub const TRUNCATION_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum OtocKind {
    Microcanonical { m: usize },
    Thermal { beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OtocSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: OtocKind,
    pub truncation: usize,
    pub convention: Convention,
    pub model: ModelTag,
    pub sigma: f64,
    #[serde(skip)]
    pub warnings: Vec<Warning>,
}

impl OtocSeries {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["t", "value"])
            .meta("model", self.model)
            .meta("sigma", fmt_f64(self.sigma));
        t = match self.kind {
            OtocKind::Microcanonical { m } => t.meta("m", m),
            OtocKind::Thermal { beta } => t.meta("beta", fmt_f64(beta)),
        };
        t = t.meta("K_t", self.truncation).meta("convention", self.convention);
        for w in &self.warnings {
            t.push_meta("warning", w);
        }
        for (a, b) in self.times.iter().zip(&self.values) {
            t.push_floats(&[*a, *b]);
        }
        t
    }
}

/// Uniform grid of `samples` times on `[0, t_max]`.
pub fn time_grid(t_max: f64, samples: usize) -> Vec<f64> {
    if samples < 2 {
        return vec![0.0; samples];
    }
    (0..samples).map(|i| t_max * i as f64 / (samples - 1) as f64).collect()
}

/// Default time span: the triple well scrambles about five times faster.
pub fn default_t_max(model: ModelTag) -> f64 {
    match model {
        ModelTag::ModelII => 2.0,
        _ => 10.0,
    }
}

pub const DEFAULT_SAMPLES: usize = 500;

/// Row `b_mk(t)` for all `k`.
fn commutator_row(set: &MatrixElementSet, m: usize, t: f64) -> Vec<Complex64> {
    let k_t = set.truncation();
    let e = set.energies();
    let kappa = set.kappa();
    let xm = set.row(m);
    let a: Vec<Complex64> = (0..k_t).map(|l| xm[l] * Complex64::cis(-e[l] * t)).collect();
    let w: Vec<Complex64> =
        (0..k_t).map(|l| xm[l] * (e[m] - e[l]) * Complex64::cis(e[l] * t)).collect();
    let mut big_a = vec![Complex64::new(0.0, 0.0); k_t];
    let mut big_ae = vec![Complex64::new(0.0, 0.0); k_t];
    let mut big_w = vec![Complex64::new(0.0, 0.0); k_t];
    for l in 0..k_t {
        let row = set.row(l);
        let (al, ale, wl) = (a[l], a[l] * e[l], w[l]);
        for k in 0..k_t {
            let x = row[k];
            big_a[k] += al * x;
            big_ae[k] += ale * x;
            big_w[k] += wl * x;
        }
    }
    let front = Complex64::cis(e[m] * t);
    (0..k_t)
        .map(|k| kappa * (front * (big_ae[k] - e[k] * big_a[k]) - Complex64::cis(-e[k] * t) * big_w[k]))
        .collect()
}

/// `c_m(t)` at one time.
pub fn microcanonical_value(set: &MatrixElementSet, m: usize, t: f64) -> f64 {
    commutator_row(set, m, t).iter().map(|b| b.norm_sqr()).sum()
}

/// Share of `c_m(0)` carried by the top [`TRUNCATION_PROBE`] basis states.
pub fn truncation_fraction(set: &MatrixElementSet, m: usize) -> f64 {
    let row = commutator_row(set, m, 0.0);
    let total: f64 = row.iter().map(|b| b.norm_sqr()).sum();
    let tail: f64 =
        row.iter().skip(row.len().saturating_sub(TRUNCATION_PROBE)).map(|b| b.norm_sqr()).sum();
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(invalid("times must be finite"));
    }
    Ok(())
}

pub fn microcanonical_otoc(set: &MatrixElementSet, m: usize, times: &[f64]) -> Result<OtocSeries> {
    if m >= set.truncation() {
        return Err(invalid(format!("state {m} is outside the truncation {}", set.truncation())));
    }
    check_times(times)?;
    let values = times.par_iter().map(|&t| microcanonical_value(set, m, t)).collect();
    let fraction = truncation_fraction(set, m);
    let warnings = if fraction > TRUNCATION_TOLERANCE {
        vec![Warning::TruncationTooSmall { fraction }]
    } else {
        Vec::new()
    };
    Ok(series(set, OtocKind::Microcanonical { m }, times, values, warnings))
}

fn series(
    set: &MatrixElementSet,
    kind: OtocKind,
    times: &[f64],
    values: Vec<f64>,
    warnings: Vec<Warning>,
) -> OtocSeries {
    let spec: &PotentialSpec = set.spec();
    OtocSeries {
        times: times.to_vec(),
        values,
        kind,
        truncation: set.truncation(),
        convention: set.convention(),
        model: spec.model(),
        sigma: spec.sigma(),
        warnings,
    }
}

/// Normalised Boltzmann weights of the states kept in a thermal sum.
pub fn boltzmann_weights(energies: &[f64], beta: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(invalid(format!("beta must be positive and finite, got {beta}")));
    }
    let e0 = energies.first().copied().unwrap_or(0.0);
    let raw: Vec<f64> = energies
        .iter()
        .map(|e| (-beta * (e - e0)).exp())
        .take_while(|&w| w >= BOLTZMANN_CUTOFF)
        .collect();
    let z: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / z).collect())
}

/// `C_β(t) = Σ_m e^{−βE_m} c_m(t) / Z` over the states above the weight cutoff.
pub fn thermal_otoc(set: &MatrixElementSet, beta: f64, times: &[f64]) -> Result<OtocSeries> {
    check_times(times)?;
    let weights = boltzmann_weights(set.energies(), beta)?;
    let values = times
        .par_iter()
        .map(|&t| weights.iter().enumerate().map(|(m, w)| w * microcanonical_value(set, m, t)).sum())
        .collect();
    let mut warnings = Vec::new();
    if weights.len() == set.truncation() {
        // the cutoff was never reached; report the weight of the top states
        let edge: f64 = weights.iter().rev().take(TRUNCATION_PROBE).sum();
        if edge > TRUNCATION_TOLERANCE {
            warnings.push(Warning::TruncationTooSmall { fraction: edge });
        }
    }
    Ok(series(set, OtocKind::Thermal { beta }, times, values, warnings))
}

/// Direct operator form: `X(t) = e^{iHt} X e^{−iHt}`, `P = iκ E∘X`,
/// `C = X(t)P − PX(t)`, returns `−(C·C)_mm`. Dense `O(K_t³)`.
pub fn matrix_oracle(set: &MatrixElementSet, m: usize, t: f64) -> f64 {
    let k = set.truncation();
    let e = set.energies();
    let kappa = set.kappa();
    let xt: Vec<Complex64> = (0..k * k)
        .map(|ij| {
            let (i, j) = (ij / k, ij % k);
            set.x(i, j) * Complex64::cis((e[i] - e[j]) * t)
        })
        .collect();
    let p: Vec<Complex64> = (0..k * k)
        .map(|ij| {
            let (i, j) = (ij / k, ij % k);
            Complex64::new(0.0, kappa * (e[i] - e[j]) * set.x(i, j))
        })
        .collect();
    let matmul = |a: &[Complex64], b: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); k * k];
        for i in 0..k {
            for l in 0..k {
                let ail = a[i * k + l];
                for j in 0..k {
                    out[i * k + j] += ail * b[l * k + j];
                }
            }
        }
        out
    };
    let xp = matmul(&xt, &p);
    let px = matmul(&p, &xt);
    let c: Vec<Complex64> = xp.iter().zip(&px).map(|(a, b)| a - b).collect();
    let mm: Complex64 = (0..k).map(|j| c[m * k + j] * c[j * k + m]).sum();
    -mm.re
}

/// Window and quality criteria for automatic growth detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthWindowParams {
    /// Earliest admissible window start.
    pub start_after: f64,
    /// Latest admissible window start: growth must be an early-time feature.
    pub latest_start: f64,
    pub min_length: f64,
    pub min_samples: usize,
    /// Allowed spread of the local slope, relative to its mid-range.
    pub slope_tolerance: f64,
}

impl GrowthWindowParams {
    /// Thresholds proportional to the series span; a span of 10 gives a start
    /// after 0.2 and a minimum length of 1.0.
    pub fn for_span(t_max: f64) -> Self {
        GrowthWindowParams {
            start_after: 0.02 * t_max,
            latest_start: 0.3 * t_max,
            min_length: 0.1 * t_max,
            min_samples: 20,
            slope_tolerance: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    /// Half the fitted slope of `ln c`, matching growth as `e^{2λt}`.
    pub lambda_hat: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    /// Standard error of `lambda_hat`.
    pub lambda_stderr: f64,
}

/// Least-squares growth rate over `window`, or over the automatically detected
/// window with thresholds scaled to the series span.
pub fn fit_growth_rate(series: &OtocSeries, window: Option<(f64, f64)>) -> Result<GrowthFit> {
    let span = series.times.last().copied().unwrap_or(0.0) - series.times.first().copied().unwrap_or(0.0);
    fit_growth_rate_with(&series.times, &series.values, window, &GrowthWindowParams::for_span(span))
}

pub fn fit_growth_rate_with(
    times: &[f64],
    values: &[f64],
    window: Option<(f64, f64)>,
    params: &GrowthWindowParams,
) -> Result<GrowthFit> {
    let logs: Vec<f64> = values.iter().map(|&v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let (i, j) = match window {
        Some((lo, hi)) => {
            let idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= lo && times[i] <= hi).collect();
            if idx.len() < params.min_samples {
                return Err(invalid(format!(
                    "window [{lo}, {hi}] holds {} samples, at least {} are needed",
                    idx.len(),
                    params.min_samples
                )));
            }
            (idx[0], idx[idx.len() - 1])
        }
        None => detect_window(times, &logs, params).ok_or(Error::NoGrowthWindow)?,
    };
    Ok(line_fit(&times[i..=j], &logs[i..=j]))
}

/// Local slope of `y`: central differences inside, one-sided at the ends.
fn local_slopes(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (y[b] - y[a]) / (t[b] - t[a])
        })
        .collect()
}

/// Longest run of increasing, near-constant slope that starts early enough.
fn detect_window(t: &[f64], logs: &[f64], p: &GrowthWindowParams) -> Option<(usize, usize)> {
    let n = t.len();
    if n < 3 {
        return None;
    }
    let s = local_slopes(t, logs);
    let mut best: Option<(usize, usize)> = None;
    for i in 0..n {
        if t[i] < p.start_after || s[i] <= 0.0 {
            continue;
        }
        if t[i] > p.latest_start {
            break;
        }
        let (mut lo, mut hi, mut j) = (s[i], s[i], i);
        while j + 1 < n && s[j + 1] > 0.0 {
            let (lo2, hi2) = (lo.min(s[j + 1]), hi.max(s[j + 1]));
            if hi2 - lo2 > p.slope_tolerance * (hi2 + lo2) / 2.0 {
                break;
            }
            (lo, hi, j) = (lo2, hi2, j + 1);
        }
        if best.is_none_or(|(a, b)| j - i > b - a) {
            best = Some((i, j));
        }
    }
    let (i, j) = best?;
    (t[j] - t[i] >= p.min_length && j + 1 - i >= p.min_samples).then_some((i, j))
}

fn line_fit(t: &[f64], y: &[f64]) -> GrowthFit {
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|a| (a - mt).powi(2)).sum();
    let sty: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sty / stt;
    let sse: f64 = t.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mt)).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let stderr = if n > 2.0 { (sse / (n - 2.0) / stt).sqrt() } else { f64::INFINITY };
    GrowthFit {
        lambda_hat: slope / 2.0,
        r_squared,
        window: (t[0], t[t.len() - 1]),
        lambda_stderr: stderr / 2.0,
    }
}

/// Detected states separated by at most this many undetected ones share a band.
pub const GROWTH_BAND_GAP: usize = 1;

/// Automatic growth fits for a range of eigenstates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthScan {
    pub states: Vec<usize>,
    /// `None` where no qualifying window exists.
    pub fits: Vec<Option<GrowthFit>>,
}

/// Runs `fit_growth_rate` on `c_m(t)` for every `m` in `states`.
pub fn growth_scan(
    set: &MatrixElementSet,
    states: std::ops::Range<usize>,
    times: &[f64],
) -> Result<GrowthScan> {
    if states.end > set.truncation() {
        return Err(Error::TruncationTooLarge { requested: states.end, available: set.truncation() });
    }
    let fits = states
        .clone()
        .into_par_iter()
        .map(|m| {
            let series = microcanonical_otoc(set, m, times)?;
            match fit_growth_rate(&series, None) {
                Ok(f) => Ok(Some(f)),
                Err(Error::NoGrowthWindow) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GrowthScan { states: states.collect(), fits })
}

impl GrowthScan {
    pub fn detected(&self) -> Vec<usize> {
        self.states.iter().zip(&self.fits).filter(|(_, f)| f.is_some()).map(|(m, _)| *m).collect()
    }

    pub fn fit(&self, m: usize) -> Option<&GrowthFit> {
        let i = self.states.iter().position(|&s| s == m)?;
        self.fits[i].as_ref()
    }

    /// Runs of detected states, bridging gaps of up to `GROWTH_BAND_GAP`.
    pub fn bands(&self) -> Vec<std::ops::RangeInclusive<usize>> {
        let mut out: Vec<std::ops::RangeInclusive<usize>> = Vec::new();
        for m in self.detected() {
            match out.last_mut() {
                Some(band) if m - band.end() <= GROWTH_BAND_GAP + 1 => *band = *band.start()..=m,
                _ => out.push(m..=m),
            }
        }
        out
    }

    /// Mean fitted window duration over the detected states of a band.
    pub fn mean_window(&self, band: &std::ops::RangeInclusive<usize>) -> f64 {
        let lens: Vec<f64> = band
            .clone()
            .filter_map(|m| self.fit(m))
            .map(|f| f.window.1 - f.window.0)
            .collect();
        lens.iter().sum::<f64>() / lens.len() as f64
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["m", "detected", "lambda_hat", "r_squared", "t_lo", "t_hi", "lambda_stderr"]);
        for band in self.bands() {
            t.push_meta("band", format!("{}..{}", band.start(), band.end()));
        }
        for (m, f) in self.states.iter().zip(&self.fits) {
            let mut row = vec![m.to_string()];
            match f {
                Some(f) => {
                    row.push("1".into());
                    row.extend(
                        [f.lambda_hat, f.r_squared, f.window.0, f.window.1, f.lambda_stderr].map(fmt_f64),
                    );
                }
                None => {
                    row.push("0".into());
                    row.extend(std::iter::repeat_n("nan".to_string(), 5));
                }
            }
            t.push_row(row);
        }
        t
    }
}
