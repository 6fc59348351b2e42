//! Finite-difference eigensystem of `H = −½ d²/dx² + V(x) + Λx` with
//! Dirichlet walls.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result, Warning};
use crate::potential::PotentialSpec;
use crate::report::{fmt_f64, Table};
use crate::tridiag::SymTridiagonal;

pub const DEFAULT_POINTS: usize = 4096;
pub const DEFAULT_STATES: usize = 120;
pub const MIN_POINTS: usize = 64;

/// Uniform grid including both wall points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(invalid(format!("grid needs x_max > x_min, got [{x_min}, {x_max}]")));
        }
        if n_points < MIN_POINTS {
            return Err(invalid(format!("grid needs at least {MIN_POINTS} points, got {n_points}")));
        }
        Ok(Grid { x_min, x_max, n_points })
    }

    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
        Grid::new(-half_width, half_width, n_points)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn n_points(&self) -> usize {
        self.n_points
    }
    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Same interval with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Grid {
        Grid { n_points: (self.n_points - 1) * factor + 1, ..*self }
    }
}

/// Tridiagonal Hamiltonian on the interior points; the wall samples are
/// pinned to zero and not part of the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub matrix: SymTridiagonal,
    /// Potential at the interior points.
    pub potential: Vec<f64>,
    pub grid: Grid,
    pub spec: PotentialSpec,
    /// Even potential on a grid centred at the origin; solved per parity.
    pub mirror_symmetric: bool,
}

pub fn build_hamiltonian(spec: &PotentialSpec, grid: &Grid) -> Hamiltonian {
    let h = grid.spacing();
    let even = spec.lambda() == 0.0 && spec.coefficients().iter().skip(1).step_by(2).all(|&c| c == 0.0);
    let mirror_symmetric = even && grid.x_min() == -grid.x_max();
    let inner = grid.n_points() - 2;
    let potential: Vec<f64> = (0..inner)
        .map(|j| {
            // mirror samples share one evaluation so the symmetry is exact
            let i = if mirror_symmetric { j.min(inner - 1 - j) } else { j };
            spec.value(grid.x(i + 1))
        })
        .collect();
    let diag = potential.iter().map(|v| v + 1.0 / (h * h)).collect();
    Hamiltonian {
        matrix: SymTridiagonal::constant_off(diag, -0.5 / (h * h)),
        potential,
        grid: *grid,
        spec: spec.clone(),
        mirror_symmetric,
    }
}

/// Lowest `k` eigenpairs of an interior matrix that commutes with reflection,
/// from the even and odd half-size blocks. Tunnelling partners fall in
/// different blocks, so their tiny splitting cannot mix them.
fn parity_eigenpairs(t: &SymTridiagonal, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = t.len();
    let half = n / 2;
    let root2 = std::f64::consts::SQRT_2;
    let (even, odd) = if n % 2 == 0 {
        let link = t.off[half - 1];
        let mut e = SymTridiagonal { diag: t.diag[..half].to_vec(), off: t.off[..half - 1].to_vec() };
        let mut o = e.clone();
        e.diag[half - 1] += link;
        o.diag[half - 1] -= link;
        (e, o)
    } else {
        // centre sample: even block carries it scaled by 1/√2, odd block pins it to zero
        let mut off = t.off[..half].to_vec();
        off[half - 1] *= root2;
        let e = SymTridiagonal { diag: t.diag[..=half].to_vec(), off };
        let o = SymTridiagonal { diag: t.diag[..half].to_vec(), off: t.off[..half - 1].to_vec() };
        (e, o)
    };
    let (ev, evec) = even.lowest(k.min(even.len()))?;
    let (ov, ovec) = odd.lowest(k.min(odd.len()))?;
    let unfold = |u: &[f64], parity: f64| -> Vec<f64> {
        let mut v = Vec::with_capacity(n);
        if n % 2 == 0 {
            v.extend_from_slice(u);
            v.extend(u.iter().rev().map(|x| parity * x));
        } else if parity > 0.0 {
            v.extend_from_slice(&u[..half]);
            v.push(root2 * u[half]);
            v.extend(u[..half].iter().rev());
        } else {
            v.extend_from_slice(u);
            v.push(0.0);
            v.extend(u.iter().rev().map(|x| -x));
        }
        v.iter_mut().for_each(|x| *x /= root2);
        v
    };
    let mut merged: Vec<(f64, Vec<f64>)> = ev
        .into_iter()
        .zip(evec.iter().map(|u| unfold(u, 1.0)))
        .chain(ov.into_iter().zip(ovec.iter().map(|u| unfold(u, -1.0))))
        .collect();
    merged.sort_by(|a, b| a.0.total_cmp(&b.0));
    merged.truncate(k);
    Ok(merged.into_iter().unzip())
}

/// Treatment of the leading `O(h²)` error of the three-point stencil.
///
/// The stencil Hamiltonian is `H − (h²/24) p⁴ + O(h⁴)` and `p⁴ = 4 (H − V)²`,
/// so in the computed basis the missing term has elements
/// `W_kn = (h²/6) ⟨(E_k − V)(E_n − V)⟩`. First-order perturbation theory in
/// `W` then fixes both levels and states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum StencilCorrection {
    /// Report raw matrix eigenpairs (error `O(h²)`).
    None,
    /// `E_n += W_nn`, `Ψ_n += Σ_k W_kn / (E_n − E_k) Ψ_k` over the solved
    /// levels, skipping pairs too close for perturbation theory (error `O(h⁴)`).
    #[default]
    FourthOrder,
}

/// Couplings larger than this fraction of the level gap are left out.
const MAX_MIXING: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSystem {
    /// Reported energies, ascending.
    pub energies: Vec<f64>,
    /// Raw matrix eigenvalues, ascending.
    pub discrete_energies: Vec<f64>,
    /// `states[n][i]` is `Ψ_n(x_i)` on every grid point including the walls.
    pub states: Vec<Vec<f64>>,
    pub grid: Grid,
    pub spec: PotentialSpec,
    #[serde(skip)]
    pub warnings: Vec<Warning>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    /// `Σ_i a(x_i) b(x_i) h`.
    pub fn overlap(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * self.spacing()
    }

    pub fn spectrum_table(&self) -> Table {
        let mut t = table_meta(Table::new(["n", "E"]), &self.spec, &self.grid);
        for (n, e) in self.energies.iter().enumerate() {
            t.push_row(vec![n.to_string(), fmt_f64(*e)]);
        }
        t
    }

    /// `x, V(x), Ψ_0 .. Ψ_{count-1}` on every `stride`-th grid point.
    pub fn states_table(&self, count: usize, stride: usize) -> Table {
        let count = count.min(self.len());
        let mut columns = vec!["x".to_string(), "V".to_string()];
        columns.extend((0..count).map(|n| format!("psi{n}")));
        let mut t = table_meta(Table::new(columns), &self.spec, &self.grid);
        for i in (0..self.grid.n_points()).step_by(stride.max(1)) {
            let x = self.grid.x(i);
            let mut row = vec![x, self.spec.value(x)];
            row.extend(self.states[..count].iter().map(|s| s[i]));
            t.push_floats(&row);
        }
        t
    }
}

pub(crate) fn table_meta(t: Table, spec: &PotentialSpec, grid: &Grid) -> Table {
    t.meta("model", spec.model())
        .meta("sigma", fmt_f64(spec.sigma()))
        .meta("lambda", fmt_f64(spec.lambda()))
        .meta("grid", format!("[{}, {}] x {}", fmt_f64(grid.x_min()), fmt_f64(grid.x_max()), grid.n_points()))
}

/// Lowest `k` eigenpairs with the default energy correction.
pub fn eigensolve(ham: &Hamiltonian, k: usize) -> Result<EigenSystem> {
    eigensolve_with(ham, k, StencilCorrection::default())
}

pub fn eigensolve_with(
    ham: &Hamiltonian,
    k: usize,
    correction: StencilCorrection,
) -> Result<EigenSystem> {
    let grid = ham.grid;
    let n = grid.n_points();
    if k == 0 || k > n / 4 {
        return Err(invalid(format!("number of states must be in 1..={}, got {k}", n / 4)));
    }
    let h = grid.spacing();
    let (discrete, vectors) = if ham.mirror_symmetric {
        parity_eigenpairs(&ham.matrix, k)?
    } else {
        ham.matrix.lowest(k)?
    };

    let states: Vec<Vec<f64>> = vectors
        .into_iter()
        .map(|v| {
            let mut psi = Vec::with_capacity(n);
            psi.push(0.0);
            psi.extend(v);
            psi.push(0.0);
            let norm = (psi.iter().map(|x| x * x).sum::<f64>() * h).sqrt();
            let peak = psi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let first = psi.iter().find(|x| x.abs() > 1e-6 * peak).copied().unwrap_or(1.0);
            let sign = if first < 0.0 { -1.0 } else { 1.0 };
            psi.iter_mut().for_each(|x| *x *= sign / norm);
            psi
        })
        .collect();

    let (energies, states) = match correction {
        StencilCorrection::None => (discrete.clone(), states),
        StencilCorrection::FourthOrder => fourth_order(&discrete, states, &ham.potential, h),
    };

    let mut warnings = Vec::new();
    let wall = ham.spec.value(grid.x_min()).min(ham.spec.value(grid.x_max()));
    if let Some((level, &energy)) = energies.iter().enumerate().last() {
        if energy > wall {
            let first = energies.iter().position(|&e| e > wall).unwrap_or(level);
            warnings.push(Warning::Resolution { level: first, energy: energies[first], wall_potential: wall });
        }
    }

    Ok(EigenSystem {
        energies,
        discrete_energies: discrete,
        states,
        grid,
        spec: ham.spec.clone(),
        warnings,
    })
}

fn fourth_order(
    discrete: &[f64],
    states: Vec<Vec<f64>>,
    potential: &[f64],
    h: f64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = discrete.len();
    let n = states[0].len();
    // (E_n − V) Ψ_n on interior points
    let kinetic: Vec<Vec<f64>> = discrete
        .iter()
        .zip(&states)
        .map(|(&e, psi)| potential.iter().zip(&psi[1..n - 1]).map(|(v, p)| (e - v) * p).collect())
        .collect();
    let rows: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|a| {
            (0..k)
                .map(|b| {
                    kinetic[a].iter().zip(&kinetic[b]).map(|(x, y)| x * y).sum::<f64>() * h * h * h / 6.0
                })
                .collect()
        })
        .collect();
    let energies: Vec<f64> = (0..k).map(|a| discrete[a] + rows[a][a]).collect();
    let mut corrected: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|a| {
            let mut psi = states[a].clone();
            for b in (0..k).filter(|&b| b != a) {
                let gap = discrete[a] - discrete[b];
                let w = rows[b][a];
                if w.abs() <= MAX_MIXING * gap.abs() {
                    let c = w / gap;
                    psi.iter_mut().zip(&states[b]).for_each(|(p, q)| *p += c * q);
                }
            }
            psi
        })
        .collect();
    // first-order mixing leaves O(c²) overlaps; restore orthonormality in level order
    for a in 0..k {
        let (done, rest) = corrected.split_at_mut(a);
        let psi = &mut rest[0];
        for _ in 0..2 {
            for q in done.iter() {
                let dot = psi.iter().zip(q).map(|(x, y)| x * y).sum::<f64>() * h;
                psi.iter_mut().zip(q).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = (psi.iter().map(|x| x * x).sum::<f64>() * h).sqrt();
        psi.iter_mut().for_each(|x| *x /= norm);
    }
    (energies, corrected)
}

/// Options for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    pub n_points: usize,
    pub k: usize,
    /// Explicit domain; `None` uses the model default.
    pub domain: Option<(f64, f64)>,
    pub correction: StencilCorrection,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            n_points: DEFAULT_POINTS,
            k: DEFAULT_STATES,
            domain: None,
            correction: StencilCorrection::default(),
        }
    }
}

/// Builds the grid (auto-sizing it when the model has no fixed domain) and solves.
pub fn solve(spec: &PotentialSpec, options: &SolveOptions) -> Result<EigenSystem> {
    let grid = match options.domain.or_else(|| spec.model().default_domain()) {
        Some((lo, hi)) => Grid::new(lo, hi, options.n_points)?,
        None => Grid::symmetric(auto_half_width(spec, options.k)?, options.n_points)?,
    };
    eigensolve_with(&build_hamiltonian(spec, &grid), options.k, options.correction)
}

/// Smallest symmetric half-width, grown by 10% steps, whose walls stand above
/// three times the highest requested level.
pub fn auto_half_width(spec: &PotentialSpec, k: usize) -> Result<f64> {
    let mut half = 1.0 + spec.global_minimizer().abs();
    for _ in 0..200 {
        let n = (4 * k).max(1024);
        let ham = build_hamiltonian(spec, &Grid::symmetric(half, n)?);
        let top = ham.matrix.eigenvalue(k - 1);
        if spec.value(-half).min(spec.value(half)) > 3.0 * top {
            return Ok(half);
        }
        half *= 1.1;
    }
    Err(invalid("could not size the domain: potential does not confine the requested levels"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// `|E_n(fine) − E_n(coarse)| / |E_n(fine)|` per level.
    pub relative_change: Vec<f64>,
    pub max_relative_change: f64,
    pub warnings: Vec<String>,
}

/// Re-solves on a grid with twice the points and compares levels.
pub fn convergence_report(spec: &PotentialSpec, grid: &Grid, k: usize) -> Result<ConvergenceReport> {
    let fine = Grid::new(grid.x_min(), grid.x_max(), 2 * grid.n_points())?;
    compare_grids(spec, grid, &fine, k)
}

/// Level-by-level comparison of two discretisations.
pub fn compare_grids(spec: &PotentialSpec, a: &Grid, b: &Grid, k: usize) -> Result<ConvergenceReport> {
    let ea = eigensolve(&build_hamiltonian(spec, a), k)?;
    let eb = eigensolve(&build_hamiltonian(spec, b), k)?;
    let relative_change: Vec<f64> = ea
        .energies
        .iter()
        .zip(&eb.energies)
        .map(|(x, y)| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE))
        .collect();
    let max_relative_change = relative_change.iter().fold(0.0, |m: f64, &v| m.max(v));
    let warnings = ea.warnings.iter().chain(&eb.warnings).map(ToString::to_string).collect();
    Ok(ConvergenceReport { relative_change, max_relative_change, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::ModelTag;

    fn harmonic() -> PotentialSpec {
        PotentialSpec::preset(ModelTag::Harmonic, 0.0).unwrap()
    }

    #[test]
    fn hand_built_stencil() {
        let grid = Grid::new(-1.0, 1.0, 64).unwrap();
        let ham = build_hamiltonian(&harmonic(), &grid);
        let h = grid.spacing();
        for (j, &d) in ham.matrix.diag.iter().take(3).enumerate() {
            let x = grid.x(j + 1);
            assert!((d - (0.5 * x * x + 1.0 / (h * h))).abs() < 1e-9);
        }
        assert!(ham.matrix.off.iter().all(|&e| e == -0.5 / (h * h)));
        assert_eq!(ham.matrix.len(), 62);
    }

    #[test]
    fn wells_sit_at_zero() {
        let spec = PotentialSpec::preset(ModelTag::ModelI, 0.0).unwrap();
        let grid = Grid::symmetric(10.0, 4096).unwrap();
        let ham = build_hamiltonian(&spec, &grid);
        let h = grid.spacing();
        let min = ham.matrix.diag.iter().fold(f64::INFINITY, |m, &d| m.min(d));
        assert!((min - 1.0 / (h * h)).abs() < 1e-4, "{}", min - 1.0 / (h * h));
    }

    #[test]
    fn harmonic_levels() {
        let eig = solve(&harmonic(), &SolveOptions { k: 20, ..Default::default() }).unwrap();
        for (n, e) in eig.energies.iter().enumerate() {
            let want = n as f64 + 0.5;
            assert!((e - want).abs() < 1e-6 * want, "n={n}: {e}");
        }
        assert!(eig.warnings.is_empty());
    }

    #[test]
    fn normalised_orthogonal_and_signed() {
        let spec = PotentialSpec::preset(ModelTag::ModelI, 10.0).unwrap();
        let eig = solve(&spec, &SolveOptions { n_points: 2048, k: 30, ..Default::default() }).unwrap();
        for (n, s) in eig.states.iter().enumerate() {
            assert!((eig.overlap(s, s) - 1.0).abs() < 1e-10);
            for t in &eig.states[..n] {
                assert!(eig.overlap(s, t).abs() < 1e-8);
            }
            let peak = s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(*s.iter().find(|x| x.abs() > 1e-6 * peak).unwrap() > 0.0);
        }
        assert!(eig.energies.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn error_is_second_order_without_correction() {
        let err = |n: usize| {
            let ham = build_hamiltonian(&harmonic(), &Grid::symmetric(10.0, n).unwrap());
            (eigensolve_with(&ham, 12, StencilCorrection::None).unwrap().energies[10] - 10.5).abs()
        };
        assert!(err(1024) / err(4096) >= 12.0);
    }

    #[test]
    fn correction_beats_raw_stencil() {
        let ham = build_hamiltonian(&harmonic(), &Grid::symmetric(10.0, 1024).unwrap());
        let raw = eigensolve_with(&ham, 12, StencilCorrection::None).unwrap();
        let fixed = eigensolve(&ham, 12).unwrap();
        for n in 0..12 {
            let want = n as f64 + 0.5;
            assert!((fixed.energies[n] - want).abs() < 0.01 * (raw.energies[n] - want).abs());
        }
    }

    #[test]
    fn constant_offset_shifts_levels_only() {
        let spec = PotentialSpec::preset(ModelTag::ModelI, 30.0).unwrap();
        let grid = Grid::symmetric(10.0, 1024).unwrap();
        let a = eigensolve(&build_hamiltonian(&spec, &grid), 20).unwrap();
        let b = eigensolve(&build_hamiltonian(&spec.with_offset(3.25), &grid), 20).unwrap();
        for n in 0..20 {
            assert!((b.energies[n] - a.energies[n] - 3.25).abs() < 1e-9);
            for (x, y) in a.states[n].iter().zip(&b.states[n]) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn untilted_states_have_parity() {
        let spec = PotentialSpec::preset(ModelTag::ModelI, 0.0).unwrap();
        let eig = solve(&spec, &SolveOptions { n_points: 2048, k: 16, ..Default::default() }).unwrap();
        let m = eig.grid.n_points();
        for (n, s) in eig.states.iter().enumerate().filter(|(_, s)| !s.is_empty()) {
            if eig.energies[n] > 5.12 {
                continue;
            }
            let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
            for i in 0..m {
                assert!((s[i] - parity * s[m - 1 - i]).abs() < 1e-6, "n={n}");
            }
        }
    }

    #[test]
    fn too_many_states_is_rejected() {
        let ham = build_hamiltonian(&harmonic(), &Grid::symmetric(5.0, 128).unwrap());
        assert!(eigensolve(&ham, 33).is_err());
        assert!(Grid::new(1.0, 0.0, 128).is_err());
        assert!(Grid::new(0.0, 1.0, 63).is_err());
    }

    #[test]
    fn box_contamination_is_flagged() {
        let spec = PotentialSpec::preset(ModelTag::ModelI, 0.0).unwrap();
        let ham = build_hamiltonian(&spec, &Grid::symmetric(10.0, 512).unwrap());
        let eig = eigensolve(&ham, 128).unwrap();
        assert!(matches!(eig.warnings[0], Warning::Resolution { .. }));
    }
}
