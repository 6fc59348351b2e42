//! Successive level differences and their dips, smoothed density of states,
//! doublet splittings below a barrier, and per-state position moments.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::classical::{fixed_points, slope_minima, Stability};
use crate::error::{invalid, Result};
use crate::report::{fmt_f64, Table};
use crate::schrodinger::{table_meta, EigenSystem};

/// Smallest spectrum [`level_differences`] accepts.
pub const MIN_LEVELS: usize = 8;
/// A dip must sit this fraction of its own depth below the lower of its two
/// flanking maxima.
pub const DIP_PROMINENCE: f64 = 0.05;
/// A cluster extends while the smoothed difference stays below this multiple
/// of the dip value.
pub const CLUSTER_FACTOR: f64 = 1.5;
pub const DOS_SAMPLES: usize = 400;
/// Probability mass enclosed by `support_width`.
pub const SUPPORT_MASS: f64 = 0.99;
/// Below this share on either side of the barrier a state counts as localised.
const LOCALISATION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dip {
    /// Index into the differences: the dip sits between levels `index` and `index + 1`.
    pub index: usize,
    /// `(E_index + E_{index+1}) / 2`.
    pub energy: f64,
    /// Smoothed difference at the dip.
    pub value: f64,
    /// Height of the lower flanking maximum above the dip.
    pub prominence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelDifferences {
    /// `ΔE_n = E_{n+1} − E_n`.
    pub diffs: Vec<f64>,
    /// `[1, 2, 1]/4` smoothing, edges replicated.
    pub smoothed: Vec<f64>,
    /// In ascending energy.
    pub dips: Vec<Dip>,
    /// One sorted, disjoint range of difference indices per dip; neighbouring
    /// clusters meet at most at the crest between their dips.
    pub clusters: Vec<RangeInclusive<usize>>,
}

impl LevelDifferences {
    /// Dip with the smallest smoothed difference.
    pub fn deepest(&self) -> Option<&Dip> {
        self.dips.iter().min_by(|a, b| a.value.total_cmp(&b.value))
    }

    /// Levels touched by a cluster: difference range `a..=b` spans levels `a..=b+1`.
    pub fn cluster_states(&self, cluster: usize) -> RangeInclusive<usize> {
        let c = &self.clusters[cluster];
        *c.start()..=*c.end() + 1
    }

    pub fn in_cluster(&self, index: usize) -> bool {
        self.clusters.iter().any(|c| c.contains(&index))
    }

    /// Jaccard index between `states` and the union of cluster states; 0 when both are empty.
    pub fn state_overlap(&self, states: &[usize]) -> f64 {
        let cluster: std::collections::BTreeSet<usize> =
            (0..self.clusters.len()).flat_map(|c| self.cluster_states(c)).collect();
        let other: std::collections::BTreeSet<usize> = states.iter().copied().collect();
        let union = cluster.union(&other).count();
        if union == 0 {
            return 0.0;
        }
        cluster.intersection(&other).count() as f64 / union as f64
    }
}

fn smooth(d: &[f64]) -> Vec<f64> {
    let n = d.len();
    (0..n)
        .map(|i| {
            let left = d[i.saturating_sub(1)];
            let right = d[(i + 1).min(n - 1)];
            0.25 * (left + 2.0 * d[i] + right)
        })
        .collect()
}

/// Lower of the two maxima reached walking outward from `i` until the curve
/// drops below `s[i]` or ends.
fn flank_height(s: &[f64], i: usize) -> f64 {
    let mut left = s[i];
    for &v in s[..i].iter().rev() {
        if v < s[i] {
            break;
        }
        left = left.max(v);
    }
    let mut right = s[i];
    for &v in &s[i + 1..] {
        if v < s[i] {
            break;
        }
        right = right.max(v);
    }
    left.min(right)
}

pub fn level_differences(eig: &EigenSystem) -> Result<LevelDifferences> {
    differences_of(&eig.energies)
}

/// [`level_differences`] on a bare ascending list of levels.
pub fn differences_of(energies: &[f64]) -> Result<LevelDifferences> {
    if energies.len() < MIN_LEVELS {
        return Err(invalid(format!(
            "level statistics need at least {MIN_LEVELS} levels, got {}",
            energies.len()
        )));
    }
    let diffs: Vec<f64> = energies.windows(2).map(|w| w[1] - w[0]).collect();
    let s = smooth(&diffs);
    let mut dips = Vec::new();
    for i in 1..s.len() - 1 {
        if !(s[i] < s[i - 1] && s[i] <= s[i + 1]) {
            continue;
        }
        let prominence = flank_height(&s, i) - s[i];
        if prominence >= DIP_PROMINENCE * s[i] {
            dips.push(Dip { index: i, energy: 0.5 * (energies[i] + energies[i + 1]), value: s[i], prominence });
        }
    }
    // neighbouring dips split their territory at the highest point between them
    let bounds: Vec<usize> = dips
        .windows(2)
        .map(|w| {
            (w[0].index..=w[1].index).max_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap_or(w[0].index)
        })
        .collect();
    let clusters = dips
        .iter()
        .enumerate()
        .map(|(k, dip)| {
            let floor = if k == 0 { 0 } else { bounds[k - 1] + 1 };
            let ceiling = bounds.get(k).copied().unwrap_or(s.len() - 1);
            let limit = CLUSTER_FACTOR * dip.value;
            let mut lo = dip.index;
            while lo > floor && s[lo - 1] <= limit {
                lo -= 1;
            }
            let mut hi = dip.index;
            while hi < ceiling && s[hi + 1] <= limit {
                hi += 1;
            }
            lo..=hi
        })
        .collect();
    Ok(LevelDifferences { diffs, smoothed: s, dips, clusters })
}

/// `2 ×` the median level spacing.
pub fn default_smoothing_width(energies: &[f64]) -> f64 {
    let mut d: Vec<f64> = energies.windows(2).map(|w| w[1] - w[0]).collect();
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let median = if d.len() % 2 == 0 { 0.5 * (d[mid - 1] + d[mid]) } else { d[mid] };
    2.0 * median
}

/// `ρ(E) = Σ_n N(E − E_n; width)` on [`DOS_SAMPLES`] points from the lowest
/// to the highest level.
pub fn density_of_states(energies: &[f64], width: f64) -> Result<Vec<(f64, f64)>> {
    if !(width > 0.0) {
        return Err(invalid(format!("smoothing width must be positive, got {width}")));
    }
    let (Some(&lo), Some(&hi)) = (energies.first(), energies.last()) else {
        return Err(invalid("density of states needs at least one level"));
    };
    let norm = 1.0 / (width * (2.0 * std::f64::consts::PI).sqrt());
    Ok((0..DOS_SAMPLES)
        .map(|i| {
            let e = lo + (hi - lo) * i as f64 / (DOS_SAMPLES - 1) as f64;
            let rho = energies.iter().map(|en| (-0.5 * ((e - en) / width).powi(2)).exp()).sum::<f64>();
            (e, rho * norm)
        })
        .collect())
}

/// Barrier separating two wells: the top of the hill and where it stands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Barrier {
    pub energy: f64,
    pub position: f64,
}

impl Barrier {
    /// Highest local maximum of the potential, if any.
    pub fn of(spec: &crate::potential::PotentialSpec) -> Option<Barrier> {
        fixed_points(spec)
            .maxima()
            .max_by(|a, b| a.energy.total_cmp(&b.energy))
            .map(|p| Barrier { energy: p.energy, position: p.x })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Doublet {
    pub pair: usize,
    pub lower: usize,
    pub upper: usize,
    pub splitting: f64,
}

/// Pairs the levels below `barrier.energy` into doublets.
///
/// States with less than 10% of their weight on one side of the barrier are
/// localised; the `i`-th level of the left well pairs with the `i`-th of the
/// right well. Delocalised states (parity doublets, or no barrier at all) pair
/// consecutively: `(0, 1), (2, 3), …`.
pub fn doublet_splittings(eig: &EigenSystem, barrier: Barrier) -> Vec<Doublet> {
    let h = eig.spacing();
    let xs = eig.grid.points();
    let below: Vec<usize> = (0..eig.len()).filter(|&n| eig.energies[n] < barrier.energy).collect();
    let (mut left, mut right, mut spread) = (Vec::new(), Vec::new(), Vec::new());
    for &n in &below {
        let w: f64 = eig.states[n]
            .iter()
            .zip(&xs)
            .filter(|(_, x)| **x < barrier.position)
            .map(|(p, _)| p * p)
            .sum::<f64>()
            * h;
        if w > 1.0 - LOCALISATION {
            left.push(n);
        } else if w < LOCALISATION {
            right.push(n);
        } else {
            spread.push(n);
        }
    }
    let mut pairs: Vec<(usize, usize)> = left.iter().zip(&right).map(|(&a, &b)| (a.min(b), a.max(b))).collect();
    pairs.extend(spread.chunks_exact(2).map(|c| (c[0], c[1])));
    pairs.sort();
    pairs
        .into_iter()
        .enumerate()
        .map(|(pair, (lower, upper))| Doublet {
            pair,
            lower,
            upper,
            splitting: eig.energies[upper] - eig.energies[lower],
        })
        .collect()
}

/// Fractional level index of `e`: `n + (e − E_n)/(E_{n+1} − E_n)` between
/// levels, clamped to the spectrum.
pub fn staircase(energies: &[f64], e: f64) -> f64 {
    match energies.iter().position(|&en| en > e) {
        None => (energies.len() - 1) as f64,
        Some(0) => 0.0,
        Some(n) => (n - 1) as f64 + (e - energies[n - 1]) / (energies[n] - energies[n - 1]),
    }
}

/// Number of local level spacings between two energies.
pub fn level_distance(energies: &[f64], a: f64, b: f64) -> f64 {
    (staircase(energies, a) - staircase(energies, b)).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// A local maximum (or flat plateau) of the potential.
    Hilltop,
    /// The turning energy at a positive minimum of the slope.
    TurningPoint,
}

/// A classical reference energy and the dip nearest to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DipMatch {
    pub kind: ReferenceKind,
    pub reference: f64,
    pub dip: Option<Dip>,
    /// In level spacings; infinite without a dip.
    pub distance: f64,
}

/// Classical energies at which level differences should dip: the hilltops
/// while the potential still has a barrier, the slope-minimum turning
/// energies once the tilt has removed every barrier.
pub fn classical_references(spec: &crate::potential::PotentialSpec) -> Vec<(ReferenceKind, f64)> {
    let tops: Vec<f64> = fixed_points(spec)
        .points
        .iter()
        .filter(|p| p.stability != Stability::Minimum)
        .map(|p| p.energy)
        .collect();
    if !tops.is_empty() {
        return tops.into_iter().map(|e| (ReferenceKind::Hilltop, e)).collect();
    }
    slope_minima(spec).into_iter().map(|m| (ReferenceKind::TurningPoint, m.turning_energy)).collect()
}

/// Pairs each classical reference energy with its nearest dip.
pub fn dip_correlation(eig: &EigenSystem, levels: &LevelDifferences) -> Vec<DipMatch> {
    classical_references(&eig.spec)
        .into_iter()
        .map(|(kind, reference)| {
            let dip = levels
                .dips
                .iter()
                .min_by(|a, b| {
                    level_distance(&eig.energies, a.energy, reference)
                        .total_cmp(&level_distance(&eig.energies, b.energy, reference))
                })
                .copied();
            let distance = dip.map_or(f64::INFINITY, |d| level_distance(&eig.energies, d.energy, reference));
            DipMatch { kind, reference, dip, distance }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateMoments {
    pub n: usize,
    pub mean_x: f64,
    pub spread_x: f64,
    /// Length of the shortest grid interval holding [`SUPPORT_MASS`] of `|Ψ_n|²`.
    pub support_width: f64,
}

fn support_width(density: &[f64], h: f64) -> f64 {
    let total: f64 = density.iter().sum();
    let target = SUPPORT_MASS * total;
    let mut best = f64::INFINITY;
    let mut lo = 0;
    let mut acc = 0.0;
    for hi in 0..density.len() {
        acc += density[hi];
        while lo < hi && acc - density[lo] >= target {
            acc -= density[lo];
            lo += 1;
        }
        if acc >= target {
            best = best.min((hi - lo) as f64 * h);
        }
    }
    best
}

pub fn state_moments(eig: &EigenSystem) -> Vec<StateMoments> {
    let h = eig.spacing();
    let xs = eig.grid.points();
    eig.states
        .par_iter()
        .enumerate()
        .map(|(n, s)| {
            let density: Vec<f64> = s.iter().map(|p| p * p * h).collect();
            let mean_x: f64 = density.iter().zip(&xs).map(|(d, x)| d * x).sum();
            let second: f64 = density.iter().zip(&xs).map(|(d, x)| d * x * x).sum();
            StateMoments {
                n,
                mean_x,
                spread_x: (second - mean_x * mean_x).max(0.0).sqrt(),
                support_width: support_width(&density, h),
            }
        })
        .collect()
}

/// Everything above for one spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumStats {
    pub levels: LevelDifferences,
    pub smoothing_width: f64,
    pub dos: Vec<(f64, f64)>,
    pub per_state: Vec<StateMoments>,
}

/// `width = None` uses [`default_smoothing_width`].
pub fn spectrum_stats(eig: &EigenSystem, width: Option<f64>) -> Result<SpectrumStats> {
    let levels = level_differences(eig)?;
    let smoothing_width = width.unwrap_or_else(|| default_smoothing_width(&eig.energies));
    let dos = density_of_states(&eig.energies, smoothing_width)?;
    Ok(SpectrumStats { levels, smoothing_width, dos, per_state: state_moments(eig) })
}

impl SpectrumStats {
    /// `n, E_n, ΔE_n, smoothed, dip, cluster` with the last level's
    /// differences left empty.
    pub fn levels_table(&self, eig: &EigenSystem) -> Table {
        let mut t = table_meta(Table::new(["n", "E", "dE", "dE_smoothed", "dip", "cluster"]), &eig.spec, &eig.grid);
        for d in &self.levels.dips {
            t.push_meta("dip", format!("n={} E={}", d.index, fmt_f64(d.energy)));
        }
        for (k, c) in self.levels.clusters.iter().enumerate() {
            t.push_meta("cluster", format!("{k}: dE indices {}..={}", c.start(), c.end()));
        }
        for (n, e) in eig.energies.iter().enumerate() {
            let mut row = vec![n.to_string(), fmt_f64(*e)];
            if n < self.levels.diffs.len() {
                let dip = self.levels.dips.iter().any(|d| d.index == n);
                let cluster = self.levels.clusters.iter().position(|c| c.contains(&n));
                row.push(fmt_f64(self.levels.diffs[n]));
                row.push(fmt_f64(self.levels.smoothed[n]));
                row.push(u8::from(dip).to_string());
                row.push(cluster.map_or_else(|| "-1".to_string(), |c| c.to_string()));
            } else {
                row.extend(["", "", "0", "-1"].map(String::from));
            }
            t.push_row(row);
        }
        t
    }

    pub fn dos_table(&self, eig: &EigenSystem) -> Table {
        let mut t = table_meta(Table::new(["E", "rho"]), &eig.spec, &eig.grid)
            .meta("smoothing_width", fmt_f64(self.smoothing_width));
        for (e, r) in &self.dos {
            t.push_floats(&[*e, *r]);
        }
        t
    }

    pub fn moments_table(&self, eig: &EigenSystem) -> Table {
        let mut t = table_meta(Table::new(["n", "mean_x", "spread_x", "support_width"]), &eig.spec, &eig.grid);
        for m in &self.per_state {
            t.push_row(vec![
                m.n.to_string(),
                fmt_f64(m.mean_x),
                fmt_f64(m.spread_x),
                fmt_f64(m.support_width),
            ]);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{ModelTag, PotentialSpec};
    use crate::schrodinger::{solve, SolveOptions};
    use proptest::prelude::*;

    fn spectrum(model: ModelTag, sigma: f64, k: usize) -> EigenSystem {
        let spec = PotentialSpec::preset(model, sigma).unwrap();
        solve(&spec, &SolveOptions { k, ..Default::default() }).unwrap()
    }

    #[test]
    fn harmonic_levels_are_flat() {
        let spec = PotentialSpec::preset(ModelTag::Harmonic, 0.0).unwrap();
        let eig = solve(&spec, &SolveOptions { k: 60, domain: Some((-16.0, 16.0)), ..Default::default() }).unwrap();
        let lv = level_differences(&eig).unwrap();
        assert_eq!(lv.diffs.len(), 59);
        assert!(lv.diffs.iter().all(|d| (d - 1.0).abs() < 1e-6));
        assert!(lv.dips.is_empty() && lv.clusters.is_empty());
        let width = default_smoothing_width(&eig.energies);
        assert!((width - 2.0).abs() < 1e-6);
        let dos = density_of_states(&eig.energies, width).unwrap();
        assert_eq!(dos.len(), DOS_SAMPLES);
        let interior = |e: f64| e > eig.energies[0] + 4.0 * width && e < eig.energies[59] - 4.0 * width;
        for (e, rho) in dos.iter().filter(|(e, _)| interior(*e)) {
            assert!((rho - 1.0).abs() < 0.05, "E={e} rho={rho}");
        }
        // a narrow kernel ripples: Poisson sum Σ_j 2 e^{−2π²j²w²} cos(2πj(E − ½))
        let w = 0.25;
        let tau = 2.0 * std::f64::consts::PI;
        let ladder: Vec<f64> = (0..60).map(|n| n as f64 + 0.5).collect();
        for (e, rho) in density_of_states(&ladder, w).unwrap().iter().filter(|(e, _)| interior(*e)) {
            let comb: f64 = (1..6)
                .map(|j| {
                    let j = j as f64;
                    2.0 * (-0.5 * (tau * j * w).powi(2)).exp() * (tau * j * (e - 0.5)).cos()
                })
                .sum();
            assert!((rho - 1.0 - comb).abs() < 1e-9, "E={e} rho={rho}");
        }
        let doublets = doublet_splittings(&eig, Barrier { energy: f64::INFINITY, position: 0.0 });
        assert_eq!(doublets.len(), 30);
        assert!(doublets.iter().all(|d| (d.splitting - 1.0).abs() < 1e-6 && d.upper == d.lower + 1));
    }

    #[test]
    fn harmonic_spreads() {
        let eig = spectrum(ModelTag::Harmonic, 0.0, 30);
        for m in state_moments(&eig).iter().take(20) {
            assert!(m.mean_x.abs() < 1e-9);
            assert!((m.spread_x - (m.n as f64 + 0.5).sqrt()).abs() < 1e-4, "n={}", m.n);
        }
    }

    #[test]
    fn symmetric_double_well_dip_at_the_hilltop() {
        let eig = spectrum(ModelTag::ModelI, 0.0, 120);
        let lv = level_differences(&eig).unwrap();
        let dip = lv.deepest().unwrap();
        let spacing = dip.value;
        assert!((dip.energy - 5.12).abs() < 3.0 * spacing, "dip at {}", dip.energy);
        // the smoothing cancels the doublet alternation below the hill
        let raw_swing = lv.diffs[0] / lv.diffs[1];
        assert!(raw_swing < 1e-3);
        assert!(lv.smoothed[2] > 0.2);
        let width = default_smoothing_width(&eig.energies);
        let dos = density_of_states(&eig.energies, width).unwrap();
        let peak = dos.iter().filter(|(e, _)| *e > 2.0).max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        assert!((peak.0 - 5.12).abs() < width, "peak at {}", peak.0);
        for m in state_moments(&eig) {
            assert!(m.mean_x.abs() < 1e-6, "n={} mean={}", m.n, m.mean_x);
        }
    }

    #[test]
    fn density_integrates_to_level_count() {
        let eig = spectrum(ModelTag::ModelI, 30.0, 120);
        let width = default_smoothing_width(&eig.energies);
        let dos = density_of_states(&eig.energies, width).unwrap();
        let step = dos[1].0 - dos[0].0;
        let integral: f64 = dos.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * step).sum();
        assert!((integral - 120.0).abs() / 120.0 < 0.02, "{integral}");
    }

    #[test]
    fn tilted_doublets_split_by_sigma() {
        let eig = spectrum(ModelTag::ModelI, 10.0, 30);
        let barrier = Barrier::of(&eig.spec).unwrap();
        let doublets = doublet_splittings(&eig, barrier);
        assert!(!doublets.is_empty());
        for d in &doublets {
            assert!((d.splitting - 10.0).abs() < 1.5, "{d:?}");
        }
    }

    #[test]
    fn untilted_doublets_are_nearly_degenerate() {
        let eig = spectrum(ModelTag::ModelI, 0.0, 30);
        let barrier = Barrier::of(&eig.spec).unwrap();
        assert!((barrier.energy - 5.12).abs() < 1e-9 && barrier.position.abs() < 1e-9);
        let doublets = doublet_splittings(&eig, barrier);
        assert!(doublets.len() >= 3);
        assert!(doublets[0].splitting < 1e-2);
        let above = eig.energies.iter().position(|&e| e > barrier.energy).unwrap();
        let gap = eig.energies[above + 1] - eig.energies[above];
        assert!(doublets.iter().all(|d| d.splitting < gap));
    }

    #[test]
    fn no_levels_below_barrier_gives_no_doublets() {
        let eig = spectrum(ModelTag::Harmonic, 0.0, 10);
        assert!(doublet_splittings(&eig, Barrier { energy: 0.1, position: 0.0 }).is_empty());
    }

    #[test]
    fn dips_survive_doubling_the_level_count() {
        let coarse = spectrum(ModelTag::ModelI, 30.0, 60);
        let fine = spectrum(ModelTag::ModelI, 30.0, 120);
        let width = default_smoothing_width(&fine.energies);
        let a = level_differences(&coarse).unwrap();
        let b = level_differences(&fine).unwrap();
        for d in &a.dips {
            if d.index + 2 < a.diffs.len() {
                assert!(b.dips.iter().any(|e| (e.energy - d.energy).abs() <= width), "{d:?}");
            }
        }
    }

    #[test]
    fn staircase_interpolates_between_levels() {
        let levels = [0.0, 1.0, 3.0, 4.0];
        assert_eq!(staircase(&levels, -1.0), 0.0);
        assert_eq!(staircase(&levels, 2.0), 1.5);
        assert_eq!(staircase(&levels, 9.0), 3.0);
        assert_eq!(level_distance(&levels, 0.5, 3.5), 2.0);
    }

    #[test]
    fn references_switch_from_hilltops_to_turning_points() {
        let flat = PotentialSpec::preset(ModelTag::ModelI, 0.0).unwrap();
        let refs = classical_references(&flat);
        assert_eq!(refs.len(), 1);
        assert_eq!(refs[0].0, ReferenceKind::Hilltop);
        assert!((refs[0].1 - 5.12).abs() < 1e-9);
        let steep = PotentialSpec::preset(ModelTag::ModelI, 30.0).unwrap();
        let refs = classical_references(&steep);
        assert!(refs.iter().all(|r| r.0 == ReferenceKind::TurningPoint) && refs.len() == 1);
        // the plateau of the sextic counts as a hilltop
        let plateau = PotentialSpec::preset(ModelTag::ModelIa, 0.0).unwrap();
        assert_eq!(classical_references(&plateau)[0].0, ReferenceKind::Hilltop);
    }

    #[test]
    fn too_few_levels_is_an_error() {
        assert!(differences_of(&[0.0, 1.0, 2.0]).is_err());
        assert!(density_of_states(&[0.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn support_width_of_a_box() {
        let density = vec![0.01; 100];
        let w = support_width(&density, 0.1);
        assert!((w - 9.8).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn clusters_are_sorted_and_disjoint(
            gaps in proptest::collection::vec(0.05f64..2.0, 10..80),
        ) {
            let mut levels = vec![0.0];
            for g in &gaps {
                levels.push(levels.last().unwrap() + g);
            }
            let lv = differences_of(&levels).unwrap();
            prop_assert_eq!(lv.diffs.len(), levels.len() - 1);
            prop_assert!(lv.diffs.iter().all(|&d| d > 0.0));
            for w in lv.clusters.windows(2) {
                prop_assert!(w[0].end() < w[1].start());
            }
            prop_assert_eq!(lv.clusters.len(), lv.dips.len());
            for (d, c) in lv.dips.iter().zip(&lv.clusters) {
                prop_assert!(c.contains(&d.index));
                prop_assert!(lv.smoothed[d.index] < lv.smoothed[d.index - 1]);
                prop_assert!(lv.smoothed[d.index] <= lv.smoothed[d.index + 1]);
                prop_assert!(lv.in_cluster(d.index));
            }
        }
    }

    #[test]
    fn overlap_with_cluster_states() {
        let levels = LevelDifferences { diffs: vec![], smoothed: vec![], dips: vec![], clusters: vec![2..=3] };
        assert_eq!(levels.state_overlap(&[2, 3, 4]), 1.0);
        assert_eq!(levels.state_overlap(&[3, 4, 5, 6]), 2.0 / 5.0);
        let empty = LevelDifferences { clusters: vec![], ..levels };
        assert_eq!(empty.state_overlap(&[]), 0.0);
    }
}
