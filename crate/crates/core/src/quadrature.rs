//! One-dimensional Gauss rules and tensor-product grids over named coordinates.

use nalgebra::DMatrix;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A 1-D quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }

    /// Affine map of a rule on `[-1, 1]` to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Rule {
            nodes: self.nodes.iter().map(|t| mid + half * t).collect(),
            weights: self.weights.iter().map(|w| w * half).collect(),
        }
    }
}

/// Golub-Welsch: nodes and weights from a symmetric Jacobi matrix.
fn golub_welsch(diag: &[f64], offdiag: &[f64], mu0: f64) -> Rule {
    let n = diag.len();
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = diag[i];
        if i + 1 < n {
            j[(i, i + 1)] = offdiag[i];
            j[(i + 1, i)] = offdiag[i];
        }
    }
    let eig = j.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // symmetric weight: enforce exact antisymmetry of nodes
    for k in 0..n / 2 {
        let x = 0.5 * (pairs[n - 1 - k].0 - pairs[k].0);
        let w = 0.5 * (pairs[n - 1 - k].1 + pairs[k].1);
        pairs[k] = (-x, w);
        pairs[n - 1 - k] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// `∫_{-1}^{1} (1 - t²)^α dt` for `2α` a nonnegative integer.
fn gegenbauer_mass(alpha: f64) -> f64 {
    let twice = (2.0 * alpha).round() as i64;
    let mut m = if twice % 2 == 0 { 2.0 } else { PI / 2.0 };
    let mut a = if twice % 2 == 0 { 0.0 } else { 0.5 };
    while a < alpha - 1e-12 {
        a += 1.0;
        m *= 2.0 * a / (2.0 * a + 1.0);
    }
    m
}

/// Gauss-Legendre rule with `n` nodes on `[-1, 1]`, exact to degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Rule {
    gauss_gegenbauer(n, 0.0).expect("alpha = 0 is always supported")
}

/// Gauss rule for the weight `(1 - t²)^α` on `[-1, 1]`; `α` must be a
/// nonnegative multiple of ½.
pub fn gauss_gegenbauer(n: usize, alpha: f64) -> Result<Rule> {
    if n == 0 {
        return Err(Error::InvalidInput("quadrature needs at least one node".into()));
    }
    let twice = 2.0 * alpha;
    if alpha < 0.0 || (twice - twice.round()).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "Gegenbauer exponent {alpha} must be a nonnegative multiple of 1/2"
        )));
    }
    let lambda = alpha + 0.5;
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            let beta = k * (k + 2.0 * lambda - 1.0) / (4.0 * (k + lambda) * (k + lambda - 1.0));
            beta.sqrt()
        })
        .collect();
    Ok(golub_welsch(&vec![0.0; n], &off, gegenbauer_mass(alpha)))
}

/// Periodic trapezoid rule on `[start, start + 2π)`, exact for trigonometric
/// polynomials of degree below `m`.
pub fn periodic_trapezoid(m: usize, start: f64) -> Rule {
    let h = 2.0 * PI / m as f64;
    Rule {
        nodes: (0..m).map(|k| start + h * k as f64).collect(),
        weights: vec![h; m],
    }
}

/// A product quadrature over named coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordGrid {
    pub names: Vec<String>,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl CoordGrid {
    pub fn from_rule(name: &str, rule: &Rule) -> Self {
        Self {
            names: vec![name.to_string()],
            nodes: rule.nodes.iter().map(|x| vec![*x]).collect(),
            weights: rule.weights.clone(),
        }
    }

    /// Single point of unit weight with no coordinates.
    pub fn point() -> Self {
        Self {
            names: vec![],
            nodes: vec![vec![]],
            weights: vec![1.0],
        }
    }

    /// Cartesian product; the left grid's coordinates come first and vary slowest.
    pub fn product(&self, other: &CoordGrid) -> CoordGrid {
        let mut nodes = Vec::with_capacity(self.len() * other.len());
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for (a, wa) in self.nodes.iter().zip(&self.weights) {
            for (b, wb) in other.nodes.iter().zip(&other.weights) {
                let mut n = a.clone();
                n.extend_from_slice(b);
                nodes.push(n);
                weights.push(wa * wb);
            }
        }
        let mut names = self.names.clone();
        names.extend(other.names.iter().cloned());
        CoordGrid { names, nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn ncoords(&self) -> usize {
        self.names.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn scaled_to(&self, mass: f64) -> CoordGrid {
        let s = mass / self.total_mass();
        CoordGrid {
            names: self.names.clone(),
            nodes: self.nodes.clone(),
            weights: self.weights.iter().map(|w| w * s).collect(),
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}
