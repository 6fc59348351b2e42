//! Equilibria, bifurcation loci and phase-space trajectories of `V(x) + Λx`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::potential::{ModelTag, PotentialSpec};
use crate::report::{fmt_f64, Table};

/// `|V″|` below this is classified as degenerate.
pub const DEGENERATE_CURVATURE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Stability {
    Minimum,
    Maximum,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    OneFixedPoint,
    TwoFixedPoints,
    ThreeFixedPoints,
    /// Only reached on a saddle-node line of a sextic.
    FourFixedPoints,
    FiveFixedPoints,
}

impl Region {
    fn from_count(n: usize) -> Region {
        match n {
            0 | 1 => Region::OneFixedPoint,
            2 => Region::TwoFixedPoints,
            3 => Region::ThreeFixedPoints,
            4 => Region::FourFixedPoints,
            _ => Region::FiveFixedPoints,
        }
    }

    pub fn count(self) -> usize {
        match self {
            Region::OneFixedPoint => 1,
            Region::TwoFixedPoints => 2,
            Region::ThreeFixedPoints => 3,
            Region::FourFixedPoints => 4,
            Region::FiveFixedPoints => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub x: f64,
    pub stability: Stability,
    /// Shifted potential energy at the point.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointSet {
    /// Ascending in `x`.
    pub points: Vec<FixedPoint>,
    pub region: Region,
}

impl FixedPointSet {
    pub fn maxima(&self) -> impl Iterator<Item = &FixedPoint> {
        self.points.iter().filter(|p| p.stability == Stability::Maximum)
    }

    pub fn minima(&self) -> impl Iterator<Item = &FixedPoint> {
        self.points.iter().filter(|p| p.stability == Stability::Minimum)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["x", "stability", "V"]).meta("region", format!("{:?}", self.region));
        for p in &self.points {
            t.push_row(vec![fmt_f64(p.x), format!("{:?}", p.stability), fmt_f64(p.energy)]);
        }
        t
    }
}

/// All real roots of `V′(x) + Λ`, classified by the sign of `V″`.
pub fn fixed_points(spec: &PotentialSpec) -> FixedPointSet {
    let slope = spec.polynomial().derivative();
    let points: Vec<FixedPoint> = slope
        .real_roots()
        .into_iter()
        .map(|r| {
            let curvature = spec.evaluate(r.x, 2);
            let stability = if r.touching || curvature.abs() <= DEGENERATE_CURVATURE {
                Stability::Degenerate
            } else if curvature > 0.0 {
                Stability::Minimum
            } else {
                Stability::Maximum
            };
            FixedPoint { x: r.x, stability, energy: spec.value(r.x) }
        })
        .collect();
    FixedPointSet { region: Region::from_count(points.len()), points }
}

/// Saddle-node locus of the tilted quartic: `a1 = (3/2) a0^{1/3} Λ^{2/3}`.
pub fn saddle_node_a1(a0: f64, lambda: f64) -> f64 {
    1.5 * a0.cbrt() * lambda.powf(2.0 / 3.0)
}

/// Destabilising coefficient where the fixed-point count of `model` jumps
/// from one to three, by bisection on `[0, a1_hi]` at fixed `a0` and `Λ`.
pub fn count_transition_a1(model: ModelTag, a0: f64, lambda: f64, a1_hi: f64) -> Result<f64> {
    let count = |a1: f64| -> Result<usize> {
        Ok(fixed_points(&PotentialSpec::with_parameters(model, a0, a1, lambda)?).points.len())
    };
    let (mut lo, mut hi) = (0.0, a1_hi);
    if count(hi)? < 3 {
        return Err(invalid(format!("no fixed-point transition below a1 = {a1_hi}")));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if count(mid)? >= 3 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed-form `Λc` for the presets that have one.
pub fn critical_lambda_closed_form(model: ModelTag) -> Option<f64> {
    let (a0, a1) = model.parameters()?;
    match model {
        ModelTag::ModelI => Some(2.0 / 3.0 * (2.0 * a1.powi(3) / (3.0 * a0)).sqrt()),
        ModelTag::ModelIa => Some(16.0 / 25.0 * (2.0 * a1.powi(5) / (5.0 * a0.powi(3))).sqrt()),
        _ => None,
    }
}

/// Smallest tilt at which the last local maximum annihilates with its
/// neighbouring minimum. Zero if the untilted well has neither a maximum nor
/// a degenerate plateau that splits into one under tilt.
pub fn critical_lambda(spec: &PotentialSpec) -> Result<f64> {
    let has_max = |lambda: f64| -> Result<bool> {
        Ok(fixed_points(&spec.with_lambda(lambda)?).maxima().next().is_some())
    };
    let untilted = fixed_points(&spec.with_lambda(0.0)?);
    if untilted.points.iter().all(|p| p.stability == Stability::Minimum) {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while has_max(hi)? {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(invalid("maximum persists for all tilts"));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if has_max(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `σ` corresponding to [`critical_lambda`] for presets.
pub fn critical_sigma(spec: &PotentialSpec) -> Result<f64> {
    let ratio = spec
        .model()
        .sigma_to_lambda()
        .ok_or_else(|| invalid("custom potentials have no sigma scale"))?;
    Ok(critical_lambda(spec)? / ratio)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeMinimum {
    pub x: f64,
    /// `V′(x) + Λ` at the minimum, positive.
    pub slope: f64,
    /// Shifted potential at the minimum.
    pub turning_energy: f64,
}

/// Positive local minima of the tilted slope, ordered by slope ascending so
/// the sharpest (global) one comes first.
pub fn slope_minima(spec: &PotentialSpec) -> Vec<SlopeMinimum> {
    let curvature = spec.polynomial().nth_derivative(2);
    let mut out: Vec<SlopeMinimum> = curvature
        .real_roots()
        .into_iter()
        .filter(|r| !r.touching && spec.evaluate(r.x, 3) > 0.0)
        .map(|r| SlopeMinimum { x: r.x, slope: spec.evaluate(r.x, 1), turning_energy: spec.value(r.x) })
        .filter(|m| m.slope > 0.0)
        .collect();
    out.sort_by(|a, b| a.slope.total_cmp(&b.slope));
    out
}

/// Local maxima of the potential, the zero-slope counterpart of
/// [`slope_minima`] for wells that still have a barrier.
pub fn hilltops(spec: &PotentialSpec) -> Vec<FixedPoint> {
    fixed_points(spec).maxima().copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub t: f64,
    pub x: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<PhasePoint>,
    /// `max |H(t) − H(0)|`.
    pub energy_drift: f64,
}

impl Trajectory {
    pub fn to_table(&self, spec: &PotentialSpec) -> Table {
        let mut t = Table::new(["t", "x", "p", "H"]).meta("energy_drift", fmt_f64(self.energy_drift));
        for s in &self.samples {
            t.push_floats(&[s.t, s.x, s.p, 0.5 * s.p * s.p + spec.value(s.x)]);
        }
        t
    }
}

/// Shortest small-oscillation period among the fixed points and start points.
pub fn characteristic_period(spec: &PotentialSpec, starts: &[(f64, f64)]) -> f64 {
    let curvature = fixed_points(spec)
        .points
        .iter()
        .map(|p| p.x)
        .chain(starts.iter().map(|s| s.0))
        .map(|x| spec.evaluate(x, 2).abs())
        .fold(0.0, f64::max);
    if curvature > 0.0 {
        2.0 * std::f64::consts::PI / curvature.sqrt()
    } else {
        f64::INFINITY
    }
}

/// Velocity-Verlet integration of `ẋ = p`, `ṗ = −V′(x)`, one sample per step.
pub fn phase_portrait(
    spec: &PotentialSpec,
    initial_conditions: &[(f64, f64)],
    t_max: f64,
    dt: f64,
) -> Result<Vec<Trajectory>> {
    if !(dt > 0.0) || !(t_max > 0.0) {
        return Err(invalid("dt and t_max must be positive"));
    }
    let period = characteristic_period(spec, initial_conditions);
    if dt >= period / 20.0 {
        return Err(invalid(format!(
            "dt = {dt} is too coarse for the characteristic period {period:.4}"
        )));
    }
    let steps = (t_max / dt).round() as usize;
    Ok(initial_conditions
        .par_iter()
        .map(|&(x0, p0)| verlet(spec, x0, p0, dt, steps))
        .collect())
}

fn verlet(spec: &PotentialSpec, x0: f64, p0: f64, dt: f64, steps: usize) -> Trajectory {
    let energy = |x: f64, p: f64| 0.5 * p * p + spec.value(x);
    let h0 = energy(x0, p0);
    let (mut x, mut p) = (x0, p0);
    let mut force = -spec.evaluate(x, 1);
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(PhasePoint { t: 0.0, x, p });
    let mut drift: f64 = 0.0;
    for k in 1..=steps {
        p += 0.5 * dt * force;
        x += dt * p;
        force = -spec.evaluate(x, 1);
        p += 0.5 * dt * force;
        drift = drift.max((energy(x, p) - h0).abs());
        samples.push(PhasePoint { t: k as f64 * dt, x, p });
    }
    Trajectory { samples, energy_drift: drift }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionCell {
    pub a1: f64,
    pub lambda: f64,
    pub region: Region,
}

/// Fixed-point region over an `(a1, Λ)` grid at fixed `a0`.
pub fn region_grid(
    model: ModelTag,
    a0: f64,
    a1_values: &[f64],
    lambda_values: &[f64],
) -> Result<Vec<RegionCell>> {
    let cells: Vec<(f64, f64)> = a1_values
        .iter()
        .flat_map(|&a1| lambda_values.iter().map(move |&l| (a1, l)))
        .collect();
    cells
        .par_iter()
        .map(|&(a1, lambda)| {
            let spec = PotentialSpec::with_parameters(model, a0, a1, lambda)?;
            Ok(RegionCell { a1, lambda, region: fixed_points(&spec).region })
        })
        .collect()
}

pub fn region_table(cells: &[RegionCell]) -> Table {
    let mut t = Table::new(["a1", "lambda", "fixed_points"]);
    for c in cells {
        t.push_row(vec![fmt_f64(c.a1), fmt_f64(c.lambda), c.region.count().to_string()]);
    }
    t
}

/// `(Λ, a1)` samples of the quartic saddle-node locus.
pub fn locus_table(a0: f64, lambdas: &[f64]) -> Table {
    let mut t = Table::new(["lambda", "a1"]).meta("a0", fmt_f64(a0));
    for &l in lambdas {
        t.push_floats(&[l, saddle_node_a1(a0, l)]);
    }
    t
}
