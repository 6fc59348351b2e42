//! Lowest eigenpairs of a real symmetric tridiagonal matrix: Sturm-sequence
//! bisection for the eigenvalues, then inverse iteration with a
//! partial-pivoting LU for the vectors.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix; `off[i]` couples rows `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

const MAX_INVERSE_STEPS: usize = 8;
/// Each step suppresses a near-degenerate partner by `gap / shift error`, so
/// a small residual alone does not mean the partner is gone.
const MIN_INVERSE_STEPS: usize = 3;

impl SymTridiagonal {
    /// Matrix with every off-diagonal entry equal to `off`.
    pub fn constant_off(diag: Vec<f64>, off: f64) -> Self {
        let n = diag.len();
        SymTridiagonal { diag, off: vec![off; n.saturating_sub(1)] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.len();
        let radius = |i: usize| {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            left + right
        };
        let lo = (0..n).map(|i| self.diag[i] - radius(i)).fold(f64::INFINITY, f64::min);
        let hi = (0..n).map(|i| self.diag[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn norm(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.abs().max(hi.abs())
    }

    /// Number of eigenvalues strictly below `x` (Sturm count via LDLᵀ pivots).
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt() * (1.0 + self.norm());
        let mut count = 0;
        let mut q = 1.0;
        for (i, &d) in self.diag.iter().enumerate() {
            q = if i == 0 { d - x } else { d - x - self.off[i - 1] * self.off[i - 1] / q };
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Eigenvalue `k` (0-based, ascending) to full working accuracy.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.bounds();
        let floor = f64::EPSILON * self.norm();
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * mid.abs() + floor * 1e-3 {
                return mid;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// Lowest `k` eigenpairs; vectors are unit-norm in the Euclidean sense.
    pub fn lowest(&self, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let values: Vec<f64> = (0..k).map(|j| self.eigenvalue(j)).collect();
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
        let scale = self.norm();
        for (j, &lambda) in values.iter().enumerate() {
            let v = self.inverse_iteration(lambda, j, &vectors, scale)?;
            vectors.push(v);
        }
        Ok((values, vectors))
    }

    fn inverse_iteration(
        &self,
        lambda: f64,
        index: usize,
        previous: &[Vec<f64>],
        scale: f64,
    ) -> Result<Vec<f64>> {
        let n = self.len();
        let lu = ShiftedLu::new(self, lambda, scale);
        // deterministic, generic start vector
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * (0.754877666 + index as f64 * 0.1)).sin())
            .collect();
        normalize(&mut v);
        let tol = 1e3 * f64::EPSILON * scale;
        for step in 0..MAX_INVERSE_STEPS {
            lu.solve(&mut v);
            orthogonalize(&mut v, previous);
            normalize(&mut v);
            if step + 1 < MIN_INVERSE_STEPS {
                continue;
            }
            let r = residual(self, &v, lambda);
            if r <= tol {
                return Ok(v);
            }
        }
        Err(Error::ConvergenceFailure(format!(
            "inverse iteration for level {index} (E = {lambda}) did not converge"
        )))
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

/// Twice-applied classical Gram–Schmidt against the accepted vectors.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let dot: f64 = b.iter().zip(v.iter()).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
    }
}

fn residual(t: &SymTridiagonal, v: &[f64], lambda: f64) -> f64 {
    t.matvec(v)
        .iter()
        .zip(v)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// LU factorisation with partial pivoting of `T − μI`, stored as in `?gttrf`.
struct ShiftedLu {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    upper2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn new(t: &SymTridiagonal, mu: f64, scale: f64) -> Self {
        let n = t.len();
        let mut lower = t.off.clone();
        let mut diag: Vec<f64> = t.diag.iter().map(|d| d - mu).collect();
        let mut upper = t.off.clone();
        let mut upper2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if diag[i].abs() >= lower[i].abs() {
                let fact = if diag[i] != 0.0 { lower[i] / diag[i] } else { 0.0 };
                lower[i] = fact;
                diag[i + 1] -= fact * upper[i];
            } else {
                let fact = diag[i] / lower[i];
                diag[i] = lower[i];
                lower[i] = fact;
                let temp = upper[i];
                upper[i] = diag[i + 1];
                diag[i + 1] = temp - fact * diag[i + 1];
                if i + 2 < n {
                    upper2[i] = upper[i + 1];
                    upper[i + 1] = -fact * upper[i + 1];
                }
                swapped[i] = true;
            }
        }
        let tiny = f64::EPSILON * scale;
        for d in &mut diag {
            if d.abs() < tiny {
                *d = if *d < 0.0 { -tiny } else { tiny };
            }
        }
        ShiftedLu { lower, diag, upper, upper2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let t = b[i];
                b[i] = b[i + 1];
                b[i + 1] = t - self.lower[i] * b[i];
            } else {
                b[i + 1] -= self.lower[i] * b[i];
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.upper[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.upper2[i] * b[i + 2];
            }
            b[i] = s / self.diag[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;

    fn dense(t: &SymTridiagonal) -> DMatrix<f64> {
        let n = t.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                t.diag[i]
            } else if i.abs_diff(j) == 1 {
                t.off[i.min(j)]
            } else {
                0.0
            }
        })
    }

    fn check_against_dense(t: &SymTridiagonal, k: usize) {
        let (vals, vecs) = t.lowest(k).unwrap();
        let eig = SymmetricEigen::new(dense(t));
        let mut order: Vec<usize> = (0..t.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let scale = t.norm();
        for j in 0..k {
            assert!((vals[j] - eig.eigenvalues[order[j]]).abs() < 1e-12 * scale, "level {j}");
            let r = residual(t, &vecs[j], vals[j]);
            assert!(r < 1e-10 * scale);
            for i in 0..j {
                let dot: f64 = vecs[i].iter().zip(&vecs[j]).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn matches_dense_solver_on_a_double_well() {
        let n = 300;
        let h = 16.0 / (n + 1) as f64;
        let diag = (0..n)
            .map(|i| {
                let x = -8.0 + (i + 1) as f64 * h;
                0.02 * x.powi(4) - 0.64 * x * x + 5.12 + 1.0 / (h * h)
            })
            .collect();
        check_against_dense(&SymTridiagonal::constant_off(diag, -0.5 / (h * h)), 30);
    }

    #[test]
    fn resolves_near_degenerate_pairs() {
        // two decoupled identical blocks give exact degeneracy up to the weak link
        let n = 200;
        let mut diag: Vec<f64> = (0..n).map(|i| ((i % 100) as f64 - 50.0).powi(2) * 1e-3).collect();
        diag[99] += 1e3;
        diag[100] += 1e3;
        check_against_dense(&SymTridiagonal::constant_off(diag, -1.0), 12);
    }

    #[test]
    fn free_particle_in_a_box() {
        let n = 64;
        let t = SymTridiagonal::constant_off(vec![2.0; n], -1.0);
        for k in 0..5 {
            let want = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((t.eigenvalue(k) - want).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn random_matrices(
            diag in proptest::collection::vec(-5.0f64..5.0, 20..60),
            off in proptest::collection::vec(-2.0f64..-0.1, 59),
        ) {
            let n = diag.len();
            let t = SymTridiagonal { diag, off: off[..n - 1].to_vec() };
            check_against_dense(&t, 8);
        }
    }
}
