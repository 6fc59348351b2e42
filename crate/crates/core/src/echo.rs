//! Loschmidt echo `M(t) = |⟨ψ0| e^{iH₂t} e^{−iH₁t} |ψ0⟩|²` for a tilt
//! perturbation `H₂ = H₁ + δλ x`.
//!
//! Two paths: the first-order (Peres) reduction, where `M` is the squared
//! characteristic function of `|ψ0|²` at `τ = δλ t`, and exact propagation in
//! the two eigenbases.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::otoc::time_grid;
use crate::potential::{ModelTag, PotentialSpec};
use crate::report::{fmt_f64, Table};
use crate::schrodinger::{solve, EigenSystem, Grid, SolveOptions};

/// Largest tolerated share of `ψ0` outside either eigenbasis.
pub const PROJECTION_TOLERANCE: f64 = 1e-6;
/// Initial states must have unit norm to this tolerance.
const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EchoMethod {
    Peres,
    #[default]
    Exact,
}

impl fmt::Display for EchoMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EchoMethod::Peres => "peres",
            EchoMethod::Exact => "exact",
        })
    }
}

impl std::str::FromStr for EchoMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "peres" => Ok(EchoMethod::Peres),
            "exact" => Ok(EchoMethod::Exact),
            _ => Err(invalid(format!("unknown echo method '{s}' (expected peres or exact)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InitialState {
    #[default]
    GroundOfH1,
    /// `width` is the position standard deviation of the packet.
    Gaussian { center: f64, width: f64 },
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::GroundOfH1 => f.write_str("ground-of-h1"),
            InitialState::Gaussian { center, width } => {
                write!(f, "gaussian(center={}, width={})", fmt_f64(*center), fmt_f64(*width))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EchoSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub method: EchoMethod,
    pub initial: InitialState,
    /// Tilt difference `δλ` between the two Hamiltonians.
    pub lambda: f64,
    /// Model and σ of `H₁`, when the series came from a preset.
    pub source: Option<(ModelTag, f64)>,
}

impl EchoSeries {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["t", "M"])
            .meta("method", self.method)
            .meta("initial_state", self.initial)
            .meta("delta_lambda", fmt_f64(self.lambda));
        if let Some((model, sigma)) = self.source {
            t = t.meta("model", model).meta("sigma", fmt_f64(sigma));
        }
        for (a, b) in self.times.iter().zip(&self.values) {
            t.push_floats(&[*a, *b]);
        }
        t
    }
}

/// Mean and population standard deviation of an echo tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fluctuation {
    pub mean: f64,
    pub amplitude_std: f64,
}

/// Normalised Gaussian packet whose position density has standard deviation `width`.
pub fn gaussian_state(grid: &Grid, center: f64, width: f64) -> Result<Vec<Complex64>> {
    if !(width > 0.0) {
        return Err(invalid(format!("packet width must be positive, got {width}")));
    }
    let mut psi: Vec<Complex64> = grid
        .points()
        .iter()
        .map(|x| Complex64::new((-(x - center).powi(2) / (4.0 * width * width)).exp(), 0.0))
        .collect();
    let norm = (psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.spacing()).sqrt();
    if !(norm > 0.0) {
        return Err(invalid("packet has no weight on the grid"));
    }
    psi.iter_mut().for_each(|z| *z /= norm);
    Ok(psi)
}

pub fn complex_state(state: &[f64]) -> Vec<Complex64> {
    state.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// `(⟨x⟩, ⟨x²⟩ − ⟨x⟩²)` of `|ψ|²` on the grid.
pub fn position_moments(grid: &Grid, psi: &[Complex64]) -> (f64, f64) {
    let h = grid.spacing();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (i, z) in psi.iter().enumerate() {
        let x = grid.x(i);
        let p = z.norm_sqr() * h;
        m1 += x * p;
        m2 += x * x * p;
    }
    (m1, m2 - m1 * m1)
}

fn check_state(grid: &Grid, psi: &[Complex64]) -> Result<()> {
    if psi.len() != grid.n_points() {
        return Err(invalid(format!(
            "state has {} samples but the grid has {}",
            psi.len(),
            grid.n_points()
        )));
    }
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.spacing();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(invalid(format!("initial state must be normalised, norm² = {norm}")));
    }
    Ok(())
}

/// First-order echo `|Σ_i e^{i x_i τ} |ψ0(x_i)|² h|²` with `τ = λ t`.
pub fn peres_echo(
    grid: &Grid,
    psi0: &[Complex64],
    lambda: f64,
    times: &[f64],
    initial: InitialState,
) -> Result<EchoSeries> {
    check_state(grid, psi0)?;
    let h = grid.spacing();
    let xs = grid.points();
    let density: Vec<f64> = psi0.iter().map(|z| z.norm_sqr() * h).collect();
    let values = times
        .par_iter()
        .map(|&t| {
            let tau = lambda * t;
            let a: Complex64 =
                xs.iter().zip(&density).map(|(&x, &w)| Complex64::from_polar(w, x * tau)).sum();
            a.norm_sqr()
        })
        .collect();
    Ok(EchoSeries {
        times: times.to_vec(),
        values,
        method: EchoMethod::Peres,
        initial,
        lambda,
        source: None,
    })
}

/// Expansion coefficients `⟨Ψ_k|ψ⟩` and the norm lost outside the basis.
fn project(eig: &EigenSystem, psi: &[Complex64]) -> (Vec<Complex64>, f64) {
    let h = eig.spacing();
    let c: Vec<Complex64> = eig
        .states
        .iter()
        .map(|s| s.iter().zip(psi).map(|(&a, &b)| b * a).sum::<Complex64>() * h)
        .collect();
    let kept: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    (c, (1.0 - kept).max(0.0))
}

/// Echo by spectral propagation: `A(t) = Σ_jk d_j* e^{iE²_j t} O_jk e^{−iE¹_k t} c_k`
/// with `c = ⟨Ψ¹|ψ0⟩`, `d = ⟨Ψ²|ψ0⟩` and `O_jk = ⟨Ψ²_j|Ψ¹_k⟩`.
pub fn exact_echo(
    eig1: &EigenSystem,
    eig2: &EigenSystem,
    psi0: &[Complex64],
    times: &[f64],
    initial: InitialState,
) -> Result<EchoSeries> {
    if eig1.grid != eig2.grid {
        return Err(invalid("both Hamiltonians must be solved on the same grid"));
    }
    check_state(&eig1.grid, psi0)?;
    let (c, loss1) = project(eig1, psi0);
    let (d, loss2) = project(eig2, psi0);
    let loss = loss1.max(loss2);
    if loss > PROJECTION_TOLERANCE {
        return Err(Error::BasisIncomplete { loss });
    }
    let overlap: Vec<Vec<f64>> =
        eig2.states.par_iter().map(|s2| eig1.states.iter().map(|s1| eig1.overlap(s2, s1)).collect()).collect();
    let values = times
        .par_iter()
        .map(|&t| {
            let evolved: Vec<Complex64> = c
                .iter()
                .zip(&eig1.energies)
                .map(|(ck, &e)| ck * Complex64::from_polar(1.0, -e * t))
                .collect();
            let a: Complex64 = overlap
                .iter()
                .zip(&d)
                .zip(&eig2.energies)
                .map(|((row, dj), &e)| {
                    let inner: Complex64 = row.iter().zip(&evolved).map(|(&o, z)| z * o).sum();
                    dj.conj() * Complex64::from_polar(1.0, e * t) * inner
                })
                .sum();
            a.norm_sqr()
        })
        .collect();
    Ok(EchoSeries {
        times: times.to_vec(),
        values,
        method: EchoMethod::Exact,
        initial,
        lambda: eig2.spec.lambda() - eig1.spec.lambda(),
        source: Some((eig1.spec.model(), eig1.spec.sigma())),
    })
}

/// Mean and standard deviation of the samples with `t > t_settle`.
pub fn post_decay_fluctuation(series: &EchoSeries, t_settle: f64) -> Result<Fluctuation> {
    let tail: Vec<f64> = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| **t > t_settle)
        .map(|(_, v)| *v)
        .collect();
    if tail.is_empty() {
        return Err(invalid(format!("settle time {t_settle} leaves no samples")));
    }
    let n = tail.len() as f64;
    let mean = tail.iter().sum::<f64>() / n;
    let var = tail.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(Fluctuation { mean, amplitude_std: var.sqrt() })
}

/// e-folding time `1/√a` of the initial decay, from a least-squares fit of
/// `ln M ≈ −a t²` over the samples before the first rise or before `M`
/// falls below `e^{−2}`.
pub fn decay_time(series: &EchoSeries) -> Result<f64> {
    let (mut stt, mut sty) = (0.0, 0.0);
    let mut used = 0;
    for i in 1..series.times.len() {
        let (t, m) = (series.times[i], series.values[i]);
        if m > series.values[i - 1] || m < (-2.0f64).exp() {
            break;
        }
        if t > 0.0 && m > 0.0 {
            let t2 = t * t;
            stt += t2 * t2;
            sty += t2 * m.ln();
            used += 1;
        }
    }
    let a = -sty / stt;
    if used < 3 || !(a > 0.0) {
        return Err(invalid("echo shows no initial decay to fit"));
    }
    Ok(1.0 / a.sqrt())
}

/// Default tail start: twice the fitted decay time.
pub fn settle_time(series: &EchoSeries) -> Result<f64> {
    Ok(2.0 * decay_time(series)?)
}

/// Settings for an echo whose perturbation is matched to the initial state:
/// `δλ = strength / σ_x(ψ0)`, so the short-time decay `1 − M ≈ strength² t²`
/// is the same for every potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EchoSettings {
    pub strength: f64,
    pub t_max: f64,
    pub samples: usize,
    pub method: EchoMethod,
    pub initial: InitialState,
    pub solve: SolveOptions,
}

impl Default for EchoSettings {
    fn default() -> Self {
        EchoSettings {
            strength: 1.0,
            t_max: 50.0,
            samples: 1000,
            method: EchoMethod::default(),
            initial: InitialState::default(),
            solve: SolveOptions::default(),
        }
    }
}

/// Solves `H₁ = spec`, builds `ψ0`, and runs the echo against
/// `H₂ = H₁ + δλ x` on the same grid.
pub fn matched_echo(spec: &PotentialSpec, settings: &EchoSettings) -> Result<EchoSeries> {
    if !(settings.strength.is_finite()) || !(settings.t_max > 0.0) || settings.samples < 2 {
        return Err(invalid("echo needs a finite strength, t_max > 0 and at least 2 samples"));
    }
    let eig1 = solve(spec, &settings.solve)?;
    let psi0 = match settings.initial {
        InitialState::GroundOfH1 => complex_state(&eig1.states[0]),
        InitialState::Gaussian { center, width } => gaussian_state(&eig1.grid, center, width)?,
    };
    let (_, var) = position_moments(&eig1.grid, &psi0);
    let delta = settings.strength / var.sqrt();
    let times = time_grid(settings.t_max, settings.samples);
    let mut series = match settings.method {
        EchoMethod::Peres => peres_echo(&eig1.grid, &psi0, delta, &times, settings.initial)?,
        EchoMethod::Exact => {
            let spec2 = spec.with_lambda(spec.lambda() + delta)?;
            let options = SolveOptions {
                domain: Some((eig1.grid.x_min(), eig1.grid.x_max())),
                n_points: eig1.grid.n_points(),
                ..settings.solve
            };
            let eig2 = solve(&spec2, &options)?;
            exact_echo(&eig1, &eig2, &psi0, &times, settings.initial)?
        }
    };
    series.lambda = delta;
    series.source = Some((spec.model(), spec.sigma()));
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::ModelTag;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn harmonic(lambda: f64) -> EigenSystem {
        let spec = PotentialSpec::preset(ModelTag::Harmonic, lambda).unwrap();
        solve(&spec, &SolveOptions { n_points: 2048, k: 60, domain: Some((-10.0, 10.0)), ..Default::default() })
            .unwrap()
    }

    fn ground() -> &'static EigenSystem {
        static EIG: OnceLock<EigenSystem> = OnceLock::new();
        EIG.get_or_init(|| harmonic(0.0))
    }

    #[test]
    fn unperturbed_peres_echo_is_one() {
        let eig = ground();
        let psi = complex_state(&eig.states[3]);
        let s = peres_echo(&eig.grid, &psi, 0.0, &time_grid(10.0, 50), InitialState::GroundOfH1).unwrap();
        assert!(s.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn harmonic_ground_state_is_gaussian() {
        let eig = ground();
        let psi = complex_state(&eig.states[0]);
        let times = time_grid(5.0, 200);
        let s = peres_echo(&eig.grid, &psi, 1.0, &times, InitialState::GroundOfH1).unwrap();
        for (t, m) in times.iter().zip(&s.values) {
            assert!((m - (-t * t / 2.0).exp()).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn gaussian_packet_characteristic_function() {
        let grid = Grid::symmetric(10.0, 4096).unwrap();
        let w = 0.8;
        let psi = gaussian_state(&grid, 1.5, w).unwrap();
        let (mean, var) = position_moments(&grid, &psi);
        assert!((mean - 1.5).abs() < 1e-12 && (var - w * w).abs() < 1e-10);
        let times = time_grid(4.0, 100);
        let init = InitialState::Gaussian { center: 1.5, width: w };
        let s = peres_echo(&grid, &psi, 0.7, &times, init).unwrap();
        for (t, m) in times.iter().zip(&s.values) {
            assert!((m - (-(0.7 * w * t).powi(2)).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_hamiltonians_recover_fully() {
        let eig = ground();
        let psi = complex_state(&eig.states[0]);
        let s = exact_echo(eig, eig, &psi, &time_grid(20.0, 100), InitialState::GroundOfH1).unwrap();
        assert!(s.values.iter().all(|&v| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn exact_matches_first_order_at_short_times() {
        let eig1 = ground();
        let eig2 = harmonic(0.05);
        let psi = complex_state(&eig1.states[0]);
        let times = time_grid(2.0, 41);
        let exact = exact_echo(eig1, &eig2, &psi, &times, InitialState::GroundOfH1).unwrap();
        assert!((exact.lambda - 0.05).abs() < 1e-15);
        let peres = peres_echo(&eig1.grid, &psi, 0.05, &times, InitialState::GroundOfH1).unwrap();
        for (a, b) in exact.values.iter().zip(&peres.values) {
            assert!((a - b).abs() / b < 0.02);
        }
    }

    #[test]
    fn short_time_curvature_is_the_position_variance() {
        let eig1 = ground();
        let lambda = 0.3;
        let eig2 = harmonic(lambda);
        let psi = complex_state(&eig1.states[2]);
        let (_, var) = position_moments(&eig1.grid, &psi);
        let times = time_grid(0.05, 11);
        let s = exact_echo(eig1, &eig2, &psi, &times, InitialState::GroundOfH1).unwrap();
        // fit 1 − M = a t² + b t⁴
        let (mut s44, mut s46, mut s66, mut s4y, mut s6y) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (t, m) in times.iter().zip(&s.values).skip(1) {
            let (t2, y) = (t * t, 1.0 - m);
            s44 += t2 * t2;
            s46 += t2 * t2 * t2;
            s66 += t2 * t2 * t2 * t2;
            s4y += t2 * y;
            s6y += t2 * t2 * y;
        }
        let a = (s4y * s66 - s6y * s46) / (s44 * s66 - s46 * s46);
        let want = lambda * lambda * var;
        assert!((a - want).abs() / want < 1e-3, "{a} vs {want}");
    }

    #[test]
    fn weak_perturbation_stays_near_one() {
        let eig1 = ground();
        let eig2 = harmonic(1e-3);
        let psi = complex_state(&eig1.states[0]);
        let s = exact_echo(eig1, &eig2, &psi, &time_grid(50.0, 500), InitialState::GroundOfH1).unwrap();
        assert!(s.values.iter().all(|&v| (1.0 - v).abs() < 1e-4));
    }

    #[test]
    fn narrow_packet_outside_small_basis_is_rejected() {
        let spec = PotentialSpec::preset(ModelTag::Harmonic, 0.0).unwrap();
        let eig = solve(&spec, &SolveOptions { n_points: 1024, k: 8, domain: Some((-10.0, 10.0)), ..Default::default() })
            .unwrap();
        let psi = gaussian_state(&eig.grid, 2.0, 0.1).unwrap();
        let init = InitialState::Gaussian { center: 2.0, width: 0.1 };
        let err = exact_echo(&eig, &eig, &psi, &[0.0], init).unwrap_err();
        assert!(matches!(err, Error::BasisIncomplete { loss } if loss > 0.1), "{err}");
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let eig1 = ground();
        let spec = PotentialSpec::preset(ModelTag::Harmonic, 0.0).unwrap();
        let eig2 = solve(&spec, &SolveOptions { n_points: 1024, k: 8, domain: Some((-10.0, 10.0)), ..Default::default() })
            .unwrap();
        let psi = complex_state(&eig1.states[0]);
        assert!(exact_echo(eig1, &eig2, &psi, &[0.0], InitialState::GroundOfH1).is_err());
    }

    fn synthetic(values: Vec<f64>, times: Vec<f64>) -> EchoSeries {
        EchoSeries {
            times,
            values,
            method: EchoMethod::Peres,
            initial: InitialState::GroundOfH1,
            lambda: 0.0,
            source: None,
        }
    }

    #[test]
    fn tail_statistics() {
        let times = time_grid(200.0, 20001);
        let flat = synthetic(vec![0.4; times.len()], times.clone());
        let f = post_decay_fluctuation(&flat, 10.0).unwrap();
        assert!(f.amplitude_std < 1e-12);
        assert!((f.mean - 0.4).abs() < 1e-12);
        let wave = synthetic(times.iter().map(|t| 0.5 + 0.1 * t.sin()).collect(), times.clone());
        let f = post_decay_fluctuation(&wave, 10.0).unwrap();
        let want = 0.1 / 2f64.sqrt();
        assert!((f.amplitude_std - want).abs() / want < 0.02);
        assert!(post_decay_fluctuation(&wave, 500.0).is_err());
    }

    #[test]
    fn decay_time_of_a_gaussian_decay() {
        let times = time_grid(10.0, 1001);
        let s = synthetic(times.iter().map(|t| (-t * t / 2.0).exp()).collect(), times);
        assert!((decay_time(&s).unwrap() - 2f64.sqrt()).abs() < 1e-9);
        assert!((settle_time(&s).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-9);
        let times = time_grid(10.0, 100);
        assert!(decay_time(&synthetic(vec![1.0; 100], times)).is_err());
    }

    #[test]
    fn matched_echo_starts_at_one() {
        let spec = PotentialSpec::preset(ModelTag::Harmonic, 0.0).unwrap();
        let settings = EchoSettings {
            t_max: 10.0,
            samples: 100,
            solve: SolveOptions { n_points: 1024, k: 40, ..Default::default() },
            ..Default::default()
        };
        let s = matched_echo(&spec, &settings).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-9);
        assert!(s.values.iter().all(|&v| (-1e-9..=1.0 + 1e-9).contains(&v)));
        // matched strength fixes the short-time curvature: σ_x = 1/√2, δλ = √2
        assert!((s.lambda - 2f64.sqrt()).abs() < 1e-6);
        assert_eq!(s.source, Some((ModelTag::Harmonic, 0.0)));
        let table = s.to_table().render();
        assert!(table.contains("# method: exact"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn peres_echo_ignores_phases(seed in 0u64..1000, lambda in 0.1f64..3.0) {
            let eig = ground();
            let psi = complex_state(&eig.states[1]);
            let scrambled: Vec<Complex64> = psi
                .iter()
                .enumerate()
                .map(|(i, z)| z * Complex64::from_polar(1.0, ((i as u64 * 2654435761 + seed) % 6283) as f64 * 1e-3))
                .collect();
            let times = time_grid(5.0, 30);
            let a = peres_echo(&eig.grid, &psi, lambda, &times, InitialState::GroundOfH1).unwrap();
            let b = peres_echo(&eig.grid, &scrambled, lambda, &times, InitialState::GroundOfH1).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn peres_echo_depends_on_tau_only(lambda in 0.01f64..4.0, state in 0usize..6) {
            let eig = ground();
            let psi = complex_state(&eig.states[state]);
            let times = time_grid(8.0, 40);
            let doubled: Vec<f64> = times.iter().map(|t| 2.0 * t).collect();
            let a = peres_echo(&eig.grid, &psi, lambda, &times, InitialState::GroundOfH1).unwrap();
            let b = peres_echo(&eig.grid, &psi, lambda / 2.0, &doubled, InitialState::GroundOfH1).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
            prop_assert!(a.values.iter().all(|&v| (-1e-9..=1.0 + 1e-9).contains(&v)));
        }
    }
}
