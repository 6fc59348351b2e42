//! Dense real polynomials of low degree and a bracketing real-root finder.
//!
//! Roots are isolated through the critical points of the polynomial: between
//! two consecutive real roots of `p'` the polynomial is monotone, so it has at
//! most one root there and bisection with a Newton polish finds it. Critical
//! points where `p` vanishes to rounding accuracy are reported as touching
//! (even-multiplicity) roots.

use serde::{Deserialize, Serialize};

/// Polynomial with ascending coefficients, `c[0] + c[1] x + c[2] x² + ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

/// A real root and whether it is a critical point of the polynomial too.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealRoot {
    pub x: f64,
    pub touching: bool,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::new(vec![0.0]);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn nth_derivative(&self, order: usize) -> Polynomial {
        (0..order).fold(self.clone(), |p, _| p.derivative())
    }

    /// Adds `c` to the coefficient of `x^power`.
    pub fn add_term(&mut self, power: usize, c: f64) {
        if self.coeffs.len() <= power {
            self.coeffs.resize(power + 1, 0.0);
        }
        self.coeffs[power] += c;
        *self = Polynomial::new(std::mem::take(&mut self.coeffs));
    }

    /// Running error bound of Horner evaluation at `x`.
    fn rounding_bound(&self, x: f64) -> f64 {
        let ax = x.abs();
        let magnitude = self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs());
        64.0 * f64::EPSILON * magnitude
    }

    /// Cauchy bound: every real root lies in `[-b, b]`.
    pub fn root_bound(&self) -> f64 {
        let lead = *self.coeffs.last().unwrap();
        if lead == 0.0 {
            return 0.0;
        }
        1.0 + self.coeffs[..self.degree()]
            .iter()
            .map(|c| (c / lead).abs())
            .fold(0.0, f64::max)
    }

    /// All distinct real roots, ascending.
    pub fn real_roots(&self) -> Vec<RealRoot> {
        match self.degree() {
            0 => Vec::new(),
            1 => vec![RealRoot { x: -self.coeffs[0] / self.coeffs[1], touching: false }],
            _ => self.roots_by_critical_points(),
        }
    }

    fn roots_by_critical_points(&self) -> Vec<RealRoot> {
        let critical: Vec<f64> = self.derivative().real_roots().into_iter().map(|r| r.x).collect();
        let reach = critical.iter().fold(self.root_bound(), |b, c| b.max(c.abs() + 1.0));

        let mut nodes = Vec::with_capacity(critical.len() + 2);
        nodes.push(-reach);
        nodes.extend_from_slice(&critical);
        nodes.push(reach);

        // sign with a rounding dead zone: 0 means "vanishes to working accuracy"
        let sign = |x: f64| {
            let v = self.eval(x);
            if v.abs() <= self.rounding_bound(x) {
                0
            } else if v > 0.0 {
                1
            } else {
                -1
            }
        };
        let signs: Vec<i8> = nodes.iter().map(|&x| sign(x)).collect();

        let mut roots = Vec::new();
        for i in 0..nodes.len() {
            if i > 0 && signs[i - 1] * signs[i] < 0 {
                roots.push(RealRoot {
                    x: self.bracketed_root(nodes[i - 1], nodes[i]),
                    touching: false,
                });
            }
            let interior = i > 0 && i + 1 < nodes.len();
            if interior && signs[i] == 0 {
                roots.push(RealRoot { x: nodes[i], touching: true });
            }
        }
        roots.dedup_by(|a, b| (a.x - b.x).abs() <= 1e-14 * (1.0 + a.x.abs()));
        roots
    }

    /// Safeguarded Newton inside a sign-changing bracket.
    fn bracketed_root(&self, a: f64, b: f64) -> f64 {
        let (mut lo, mut hi) = if self.eval(a) < 0.0 { (a, b) } else { (b, a) };
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (f, df) = self.eval_with_derivative(x);
            if f == 0.0 {
                return x;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let newton = x - f / df;
            let inside = (newton - lo) * (newton - hi) < 0.0;
            let next = if df != 0.0 && inside { newton } else { 0.5 * (lo + hi) };
            if (next - x).abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
                return next;
            }
            x = next;
            if (hi - lo).abs() <= 2.0 * f64::EPSILON * (1.0 + x.abs()) {
                break;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_roots(roots: &[f64]) -> Polynomial {
        let mut c = vec![1.0];
        for &r in roots {
            let mut next = vec![0.0; c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= r * ck;
            }
            c = next;
        }
        Polynomial::new(c)
    }

    #[test]
    fn horner_matches_naive() {
        let p = Polynomial::new(vec![1.0, -2.0, 0.5, 3.0]);
        let x: f64 = 1.7;
        let naive = 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x.powi(3);
        assert!((p.eval(x) - naive).abs() < 1e-12);
        let (_, d) = p.eval_with_derivative(x);
        assert!((d - p.derivative().eval(x)).abs() < 1e-12);
    }

    #[test]
    fn finds_simple_roots() {
        let want = [-2.3403, -1.3512, 0.0, 1.3512, 2.3403];
        let roots = from_roots(&want).real_roots();
        assert_eq!(roots.len(), 5);
        for (r, w) in roots.iter().zip(want) {
            assert!((r.x - w).abs() < 1e-10, "{} vs {}", r.x, w);
            assert!(!r.touching);
        }
    }

    #[test]
    fn double_root_is_touching() {
        // (x - 1)^2 (x + 2)
        let roots = from_roots(&[1.0, 1.0, -2.0]).real_roots();
        assert_eq!(roots.len(), 2);
        assert!((roots[0].x + 2.0).abs() < 1e-12);
        assert!((roots[1].x - 1.0).abs() < 1e-8);
        assert!(roots[1].touching);
    }

    #[test]
    fn no_real_roots() {
        let p = Polynomial::new(vec![1.0, 0.0, 1.0]);
        assert!(p.real_roots().is_empty());
    }

    #[test]
    fn trims_leading_zeros() {
        let p = Polynomial::new(vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 1);
        assert_eq!(p.real_roots()[0].x, -0.5);
    }
}
