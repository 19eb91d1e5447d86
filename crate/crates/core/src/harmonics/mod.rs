//! Real hyperspherical harmonics on S^{p-1}, product quadrature grids and
//! generic orthonormal function systems.
//!
//! Angles follow the nested convention
//! `x0 = cos θ1, x1 = sin θ1 cos θ2, …, x_{p-1} = sin θ1 ⋯ sin θ_{p-2} sin φ`
//! with `θ_k ∈ [0, π]` and `φ ∈ [0, 2π)`. On the circle the single angle is `φ`.

pub mod convolution;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_gegenbauer, periodic_trapezoid, CoordGrid, Rule};

pub use convolution::{convolve, zonal_convolve, RotationQuadrature};

/// Evaluates every function of a basis at one coordinate tuple.
pub type EvalFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Surface area of S^{p-1}.
pub fn sphere_area(p: usize) -> f64 {
    match p {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI / (p as f64 - 2.0) * sphere_area(p - 2),
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Dimension `N(p, n)` of the degree-`n` harmonics on S^{p-1}.
pub fn harmonic_count(p: usize, n: usize) -> Result<usize> {
    if p < 2 {
        return Err(Error::InvalidDimension(format!("harmonics need p >= 2, got {p}")));
    }
    if n == 0 {
        return Ok(1);
    }
    let (p, n) = (p as u128, n as u128);
    // (2n + p - 2)/n * C(n + p - 3, n - 1); the product is divisible by n.
    Ok(((2 * n + p - 2) * binomial(n + p - 3, n - 1) / n) as usize)
}

/// Cartesian point of S^{p-1} from nested angles.
pub fn sphere_point(angles: &[f64]) -> Vec<f64> {
    let p = angles.len() + 1;
    let mut x = vec![0.0; p];
    let mut s = 1.0;
    for k in 0..p - 2 {
        x[k] = s * angles[k].cos();
        s *= angles[k].sin();
    }
    let phi = angles[p - 2];
    x[p - 2] = s * phi.cos();
    x[p - 1] = s * phi.sin();
    x
}

/// Inverse of [`sphere_point`]; the input need not be normalized.
pub fn sphere_angles(x: &[f64]) -> Vec<f64> {
    let p = x.len();
    let mut angles = Vec::with_capacity(p - 1);
    for k in 0..p - 2 {
        let tail: f64 = x[k + 1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        angles.push(tail.atan2(x[k]));
    }
    angles.push(x[p - 1].atan2(x[p - 2]).rem_euclid(2.0 * PI));
    angles
}

/// Product quadrature on S^{p-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    pub p: usize,
    pub resolution: usize,
    /// Angle tuples `(θ1, …, θ_{p-2}, φ)`.
    pub nodes: Vec<Vec<f64>>,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub total_mass: f64,
    /// Highest polynomial degree integrated exactly.
    pub exactness: usize,
}

impl SphereGrid {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// True when products of two degree-`n_max` functions are integrated exactly.
    pub fn supports_bandwidth(&self, n_max: usize) -> bool {
        self.exactness >= 2 * n_max
    }

    pub fn coord_grid(&self) -> CoordGrid {
        let mut names: Vec<String> = (1..self.p - 1).map(|k| format!("theta{k}")).collect();
        names.push("phi".into());
        CoordGrid {
            names,
            nodes: self.nodes.clone(),
            weights: self.weights.clone(),
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Gauss-Gegenbauer rule in each polar cosine and a `2r`-point azimuthal
/// trapezoid (`r` points on the circle).
pub fn make_grid(p: usize, resolution: usize) -> Result<SphereGrid> {
    if p < 2 {
        return Err(Error::InvalidDimension(format!("sphere grids need p >= 2, got {p}")));
    }
    if resolution < 2 {
        return Err(Error::InvalidInput(format!(
            "grid resolution must be at least 2, got {resolution}"
        )));
    }
    if p == 2 {
        let rule = periodic_trapezoid(resolution, 0.0);
        let nodes: Vec<Vec<f64>> = rule.nodes.iter().map(|x| vec![*x]).collect();
        let points = nodes.iter().map(|a| sphere_point(a)).collect();
        return Ok(SphereGrid {
            p,
            resolution,
            total_mass: rule.weights.iter().sum(),
            nodes,
            points,
            weights: rule.weights,
            exactness: resolution - 1,
        });
    }
    // polar angle k (1-based) carries sin^{p-1-k}; in t = cos θ that is (1-t²)^{(p-2-k)/2}
    let mut polar: Vec<Rule> = Vec::with_capacity(p - 2);
    for k in 1..=p - 2 {
        polar.push(gauss_gegenbauer(resolution, (p - 2 - k) as f64 / 2.0)?);
    }
    let azimuth = periodic_trapezoid(2 * resolution, 0.0);
    let mut nodes = vec![vec![]];
    let mut weights = vec![1.0];
    for rule in polar.iter().chain(std::iter::once(&azimuth)) {
        let is_azimuth = std::ptr::eq(rule, &azimuth);
        let mut nn = Vec::with_capacity(nodes.len() * rule.len());
        let mut ww = Vec::with_capacity(nodes.len() * rule.len());
        for (a, wa) in nodes.iter().zip(&weights) {
            for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                let mut v: Vec<f64> = a.clone();
                v.push(if is_azimuth { *t } else { t.clamp(-1.0, 1.0).acos() });
                nn.push(v);
                ww.push(wa * wt);
            }
        }
        nodes = nn;
        weights = ww;
    }
    let points = nodes.iter().map(|a| sphere_point(a)).collect();
    Ok(SphereGrid {
        p,
        resolution,
        total_mass: weights.iter().sum(),
        nodes,
        points,
        weights,
        exactness: 2 * resolution - 1,
    })
}

/// Smallest grid whose exactness covers products of degree-`n_max` functions.
pub fn grid_for_bandwidth(p: usize, n_max: usize) -> Result<SphereGrid> {
    let res = if p == 2 { 2 * n_max + 1 } else { n_max + 1 };
    make_grid(p, res.max(2))
}

/// Index label of an orthonormal function: degree and within-degree index
/// per factor. Product systems carry one entry per factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeKey {
    pub n: Vec<usize>,
    pub j: Vec<usize>,
}

impl ModeKey {
    pub fn single(n: usize, j: usize) -> Self {
        Self { n: vec![n], j: vec![j] }
    }

    pub fn degree(&self) -> usize {
        self.n.iter().sum()
    }

    pub fn n_label(&self) -> String {
        join(&self.n)
    }

    pub fn j_label(&self) -> String {
        join(&self.j)
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(":")
}

impl fmt::Display for ModeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n_label(), self.j_label())
    }
}

/// Functions orthonormal under a grid's quadrature, with pointwise evaluation.
#[derive(Clone)]
pub struct FunctionBasis {
    grid: CoordGrid,
    keys: Vec<ModeKey>,
    values: Vec<Vec<f64>>,
    eval: EvalFn,
}

impl fmt::Debug for FunctionBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionBasis")
            .field("coords", &self.grid.names)
            .field("nodes", &self.grid.len())
            .field("functions", &self.keys.len())
            .finish()
    }
}

impl FunctionBasis {
    pub fn new(grid: CoordGrid, keys: Vec<ModeKey>, values: Vec<Vec<f64>>, eval: EvalFn) -> Self {
        assert_eq!(keys.len(), values.len());
        Self { grid, keys, values, eval }
    }

    pub fn grid(&self) -> &CoordGrid {
        &self.grid
    }

    pub fn keys(&self) -> &[ModeKey] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Values of function `k` at the grid nodes.
    pub fn values(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn eval(&self, coords: &[f64]) -> Vec<f64> {
        (self.eval)(coords)
    }

    pub fn eval_fn(&self) -> EvalFn {
        self.eval.clone()
    }

    pub fn gram(&self) -> DMatrix<f64> {
        let n = self.len();
        let w = &self.grid.weights;
        let entries: Vec<f64> = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (a, b) = (idx / n, idx % n);
                dot_w(w, &self.values[a], &self.values[b])
            })
            .collect();
        DMatrix::from_row_slice(n, n, &entries)
    }

    /// Quadrature inner products of `samples` with every function.
    pub fn coefficients(&self, samples: &[f64]) -> Vec<f64> {
        self.values
            .par_iter()
            .map(|y| dot_w(&self.grid.weights, samples, y))
            .collect()
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (c, y) in coeffs.iter().zip(&self.values) {
            if *c != 0.0 {
                for (o, v) in out.iter_mut().zip(y) {
                    *o += c * v;
                }
            }
        }
        out
    }

    /// Same functions with the coordinates renamed.
    pub fn renamed(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.grid.ncoords());
        self.grid.names = names;
        self
    }

    /// Products `f_a(x) g_b(y)` on the product grid, keys concatenated.
    pub fn product(a: &FunctionBasis, b: &FunctionBasis) -> FunctionBasis {
        let grid = a.grid.product(&b.grid);
        let mut keys = Vec::with_capacity(a.len() * b.len());
        let mut values = Vec::with_capacity(a.len() * b.len());
        for (ka, va) in a.keys.iter().zip(&a.values) {
            for (kb, vb) in b.keys.iter().zip(&b.values) {
                let mut n = ka.n.clone();
                n.extend_from_slice(&kb.n);
                let mut j = ka.j.clone();
                j.extend_from_slice(&kb.j);
                keys.push(ModeKey { n, j });
                let mut v = Vec::with_capacity(grid.len());
                for x in va {
                    for y in vb {
                        v.push(x * y);
                    }
                }
                values.push(v);
            }
        }
        let split = a.grid.ncoords();
        let (ea, eb) = (a.eval.clone(), b.eval.clone());
        let eval: EvalFn = Arc::new(move |coords: &[f64]| {
            let fa = ea(&coords[..split]);
            let fb = eb(&coords[split..]);
            let mut out = Vec::with_capacity(fa.len() * fb.len());
            for x in &fa {
                for y in &fb {
                    out.push(x * y);
                }
            }
            out
        });
        FunctionBasis { grid, keys, values, eval }
    }

    /// Circle harmonics `1/√(2π), cos kφ/√π, sin kφ/√π` for `k ≤ k_max` on an
    /// `m`-point trapezoid in the named coordinate.
    pub fn circle(name: &str, k_max: usize, m: usize) -> FunctionBasis {
        let rule = periodic_trapezoid(m, 0.0);
        let grid = CoordGrid::from_rule(name, &rule);
        let mut keys = vec![ModeKey::single(0, 1)];
        for k in 1..=k_max {
            keys.push(ModeKey::single(k, 1));
            keys.push(ModeKey::single(k, 2));
        }
        let eval: EvalFn = Arc::new(move |c: &[f64]| circle_values(c[0], k_max));
        let per_node: Vec<Vec<f64>> = rule.nodes.iter().map(|x| circle_values(*x, k_max)).collect();
        let values = (0..keys.len())
            .map(|k| per_node.iter().map(|v| v[k]).collect())
            .collect();
        FunctionBasis { grid, keys, values, eval }
    }
}

fn circle_values(x: f64, k_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * k_max + 1);
    out.push(1.0 / (2.0 * PI).sqrt());
    let s = 1.0 / PI.sqrt();
    for k in 1..=k_max {
        let (sn, cs) = (k as f64 * x).sin_cos();
        out.push(cs * s);
        out.push(sn * s);
    }
    out
}

pub(crate) fn dot_w(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..w.len() {
        acc += w[i] * a[i] * b[i];
    }
    acc
}

/// Incremental orthonormalization (classical Gram-Schmidt, two passes) that
/// tracks each accepted function as a combination of the candidates.
pub(crate) struct Orthonormalizer<'a> {
    weights: &'a [f64],
    n_candidates: usize,
    pub values: Vec<Vec<f64>>,
    pub coefs: Vec<Vec<f64>>,
}

impl<'a> Orthonormalizer<'a> {
    pub fn new(weights: &'a [f64], n_candidates: usize) -> Self {
        Self {
            weights,
            n_candidates,
            values: Vec::new(),
            coefs: Vec::new(),
        }
    }

    /// Adds candidate `idx` if it is independent of everything accepted so far.
    pub fn try_add(&mut self, idx: usize, samples: &[f64], rel_tol: f64) -> bool {
        let w = self.weights;
        let mut v = samples.to_vec();
        let mut c = vec![0.0; self.n_candidates];
        c[idx] = 1.0;
        let orig = dot_w(w, &v, &v).sqrt();
        if orig == 0.0 {
            return false;
        }
        for _ in 0..2 {
            let proj: Vec<f64> = self.values.par_iter().map(|y| dot_w(w, &v, y)).collect();
            for (k, pk) in proj.iter().enumerate() {
                if *pk != 0.0 {
                    for (vi, yi) in v.iter_mut().zip(&self.values[k]) {
                        *vi -= pk * yi;
                    }
                    for (ci, yi) in c.iter_mut().zip(&self.coefs[k]) {
                        *ci -= pk * yi;
                    }
                }
            }
        }
        let norm = dot_w(w, &v, &v).sqrt();
        if norm <= rel_tol * orig {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        c.iter_mut().for_each(|x| *x /= norm);
        self.values.push(v);
        self.coefs.push(c);
        true
    }
}

/// Exponent vectors of all monomials of total degree `d` in `p` variables,
/// lexicographic with `x0` first.
pub fn monomials(p: usize, d: usize) -> Vec<Vec<u32>> {
    fn rec(p: usize, d: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == p - 1 {
            let mut m = prefix.clone();
            m.push(d as u32);
            out.push(m);
            return;
        }
        for a in (0..=d).rev() {
            prefix.push(a as u32);
            rec(p, d - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(p, d, &mut Vec::new(), &mut out);
    out
}

fn monomial_values(x: &[f64], monos: &[Vec<u32>]) -> Vec<f64> {
    monos
        .iter()
        .map(|m| m.iter().zip(x).map(|(a, xi)| xi.powi(*a as i32)).product())
        .collect()
}

/// Orthonormal real harmonics of degree `≤ n_max` sampled on a sphere grid.
#[derive(Debug, Clone)]
pub struct HarmonicBasisTable {
    pub grid: SphereGrid,
    pub n_max: usize,
    keys: Vec<(usize, usize)>,
    values: Vec<Vec<f64>>,
    monomials: Vec<Vec<u32>>,
    coefs: Vec<Vec<f64>>,
}

/// Gram-Schmidt on monomials, degree by degree, against everything of lower
/// degree. Within a degree the surviving monomials are taken in lexicographic order.
pub fn build_harmonics(grid: &SphereGrid, n_max: usize) -> Result<HarmonicBasisTable> {
    if !grid.supports_bandwidth(n_max) {
        return Err(Error::AliasingRisk {
            exactness: grid.exactness,
            required: 2 * n_max,
        });
    }
    let p = grid.p;
    let by_degree: Vec<Vec<Vec<u32>>> = (0..=n_max).map(|d| monomials(p, d)).collect();
    let all: Vec<Vec<u32>> = by_degree.iter().flatten().cloned().collect();
    let mut gs = Orthonormalizer::new(&grid.weights, all.len());
    let mut keys = Vec::new();
    let mut offset = 0;
    for (n, monos) in by_degree.iter().enumerate() {
        let want = harmonic_count(p, n)?;
        let mut got = 0;
        for (i, m) in monos.iter().enumerate() {
            if got == want {
                break;
            }
            let samples: Vec<f64> = grid
                .points
                .iter()
                .map(|x| m.iter().zip(x).map(|(a, xi)| xi.powi(*a as i32)).product())
                .collect();
            if gs.try_add(offset + i, &samples, 1e-9) {
                got += 1;
                keys.push((n, got));
            }
        }
        if got != want {
            return Err(Error::DegenerateGrid(format!(
                "degree {n} on S^{}: found {got} independent harmonics, expected {want}",
                p - 1
            )));
        }
        offset += monos.len();
    }
    Ok(HarmonicBasisTable {
        grid: grid.clone(),
        n_max,
        keys,
        values: gs.values,
        monomials: all,
        coefs: gs.coefs,
    })
}

impl HarmonicBasisTable {
    pub fn p(&self) -> usize {
        self.grid.p
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// `(n, j)` labels in storage order, `j` 1-based.
    pub fn keys(&self) -> &[(usize, usize)] {
        &self.keys
    }

    pub fn index_of(&self, n: usize, j: usize) -> Option<usize> {
        self.keys.iter().position(|k| *k == (n, j))
    }

    pub fn values(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    /// All harmonics at a Cartesian point of the sphere.
    pub fn eval_point(&self, x: &[f64]) -> Vec<f64> {
        let m = monomial_values(x, &self.monomials);
        self.coefs
            .iter()
            .map(|c| c.iter().zip(&m).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn eval_angles(&self, angles: &[f64]) -> Vec<f64> {
        self.eval_point(&sphere_point(angles))
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.function_basis().gram()
    }

    /// The table as a generic function system over the grid angles.
    pub fn function_basis(&self) -> FunctionBasis {
        let me = Arc::new(self.clone());
        let keys = self.keys.iter().map(|(n, j)| ModeKey::single(*n, *j)).collect();
        let eval: EvalFn = Arc::new(move |a: &[f64]| me.eval_angles(a));
        FunctionBasis::new(self.grid.coord_grid(), keys, self.values.clone(), eval)
    }
}

/// Coefficients `c_{n,j}`, stored per degree with `j` 1-based in accessors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicExpansion {
    pub p: usize,
    pub n_max: usize,
    pub coeffs: Vec<Vec<f64>>,
}

impl HarmonicExpansion {
    pub fn zeros(p: usize, n_max: usize) -> Result<Self> {
        let coeffs = (0..=n_max)
            .map(|n| harmonic_count(p, n).map(|c| vec![0.0; c]))
            .collect::<Result<_>>()?;
        Ok(Self { p, n_max, coeffs })
    }

    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.coeffs
            .get(n)
            .and_then(|d| d.get(j.wrapping_sub(1)))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn set(&mut self, n: usize, j: usize, value: f64) {
        self.coeffs[n][j - 1] = value;
    }

    pub fn flat(&self) -> Vec<f64> {
        self.coeffs.iter().flatten().copied().collect()
    }

    pub fn from_flat(p: usize, n_max: usize, flat: &[f64]) -> Result<Self> {
        let mut e = Self::zeros(p, n_max)?;
        let mut it = flat.iter();
        for d in e.coeffs.iter_mut() {
            for c in d.iter_mut() {
                *c = *it
                    .next()
                    .ok_or_else(|| Error::InvalidInput("too few coefficients".into()))?;
            }
        }
        if it.next().is_some() {
            return Err(Error::InvalidInput("too many coefficients".into()));
        }
        Ok(e)
    }

    /// Largest coefficient magnitude among degrees strictly above `n`.
    pub fn max_abs_above(&self, n: usize) -> f64 {
        self.coeffs
            .iter()
            .skip(n + 1)
            .flatten()
            .fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let a = self.flat();
        let b = other.flat();
        let n = a.len().max(b.len());
        (0..n)
            .map(|i| (a.get(i).unwrap_or(&0.0) - b.get(i).unwrap_or(&0.0)).abs())
            .fold(0.0, f64::max)
    }
}

/// Quadrature inner products of grid samples with every harmonic of the table.
pub fn expand(samples: &[f64], table: &HarmonicBasisTable) -> Result<HarmonicExpansion> {
    if samples.len() != table.grid.len() {
        return Err(Error::InvalidInput(format!(
            "{} samples for a grid of {} nodes",
            samples.len(),
            table.grid.len()
        )));
    }
    let flat: Vec<f64> = table
        .values
        .par_iter()
        .map(|y| dot_w(&table.grid.weights, samples, y))
        .collect();
    HarmonicExpansion::from_flat(table.p(), table.n_max, &flat)
}

/// `Σ c_{n,j} Y_{n,j}` at the table's grid nodes.
pub fn synthesize(expansion: &HarmonicExpansion, table: &HarmonicBasisTable) -> Result<Vec<f64>> {
    check_compatible(expansion, table)?;
    let mut out = vec![0.0; table.grid.len()];
    for (k, (n, j)) in table.keys.iter().enumerate() {
        if *n > expansion.n_max {
            break;
        }
        let c = expansion.get(*n, *j);
        if c != 0.0 {
            for (o, y) in out.iter_mut().zip(&table.values[k]) {
                *o += c * y;
            }
        }
    }
    Ok(out)
}

/// `Σ c_{n,j} Y_{n,j}(x)` at an arbitrary Cartesian point.
pub fn evaluate(expansion: &HarmonicExpansion, table: &HarmonicBasisTable, x: &[f64]) -> Result<f64> {
    check_compatible(expansion, table)?;
    let y = table.eval_point(x);
    Ok(table
        .keys
        .iter()
        .zip(&y)
        .filter(|((n, _), _)| *n <= expansion.n_max)
        .map(|((n, j), v)| expansion.get(*n, *j) * v)
        .sum())
}

fn check_compatible(expansion: &HarmonicExpansion, table: &HarmonicBasisTable) -> Result<()> {
    if expansion.p != table.p() {
        return Err(Error::InvalidInput(format!(
            "expansion lives on S^{}, table on S^{}",
            expansion.p - 1,
            table.p() - 1
        )));
    }
    if expansion.n_max > table.n_max {
        return Err(Error::InvalidInput(format!(
            "expansion bandwidth {} exceeds table bandwidth {}",
            expansion.n_max, table.n_max
        )));
    }
    Ok(())
}

/// Generalized Legendre polynomial of degree `n` on S^{p-1}, normalized to 1 at `t = 1`.
pub fn gegenbauer(p: usize, n: usize, t: f64) -> Result<f64> {
    if p < 2 {
        return Err(Error::InvalidDimension(format!("p must be >= 2, got {p}")));
    }
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("gegenbauer argument {t} outside [-1, 1]")));
    }
    if p == 2 {
        return Ok((n as f64 * t.acos()).cos());
    }
    let lambda = (p as f64 - 2.0) / 2.0;
    let raw = |x: f64| {
        let (mut c0, mut c1) = (1.0, 2.0 * lambda * x);
        if n == 0 {
            return c0;
        }
        for k in 1..n {
            let k = k as f64;
            let c2 = (2.0 * x * (k + lambda) * c1 - (k + 2.0 * lambda - 1.0) * c0) / (k + 1.0);
            c0 = c1;
            c1 = c2;
        }
        c1
    };
    Ok(raw(t) / raw(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_residual(g: &DMatrix<f64>) -> f64 {
        let n = g.nrows();
        (g - DMatrix::<f64>::identity(n, n)).abs().max()
    }

    #[test]
    fn counts_match_closed_forms() {
        assert_eq!(harmonic_count(2, 5).unwrap(), 2);
        assert_eq!(harmonic_count(3, 2).unwrap(), 5);
        assert_eq!(harmonic_count(4, 2).unwrap(), 9);
        assert_eq!(harmonic_count(7, 0).unwrap(), 1);
        assert!(harmonic_count(1, 3).is_err());
    }

    #[test]
    fn grid_masses() {
        let g = make_grid(2, 64).unwrap();
        assert_eq!(g.len(), 64);
        assert!(g.weights.iter().all(|w| (w - 2.0 * PI / 64.0).abs() < 1e-15));
        assert!((make_grid(3, 32).unwrap().total_mass - 4.0 * PI).abs() < 1e-12);
        assert!((make_grid(4, 24).unwrap().total_mass - 2.0 * PI * PI).abs() < 1e-10);
        assert!(make_grid(3, 1).is_err());
    }

    #[test]
    fn angles_round_trip() {
        let a = vec![0.3, 2.1, 1.2, 5.5];
        let back = sphere_angles(&sphere_point(&a));
        for (x, y) in a.iter().zip(&back) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn circle_harmonics_are_cos_sin() {
        let g = make_grid(2, 16).unwrap();
        let t = build_harmonics(&g, 3).unwrap();
        assert_eq!(t.len(), 7);
        assert!(identity_residual(&t.gram()) < 1e-12);
        for (node, a) in g.nodes.iter().enumerate() {
            let phi = a[0];
            for n in 1..=3 {
                let c = t.values(t.index_of(n, 1).unwrap())[node];
                let s = t.values(t.index_of(n, 2).unwrap())[node];
                assert!((c - (n as f64 * phi).cos() / PI.sqrt()).abs() < 1e-12);
                assert!((s - (n as f64 * phi).sin() / PI.sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sphere_tables_orthonormal() {
        let t2 = build_harmonics(&make_grid(3, 6).unwrap(), 2).unwrap();
        assert_eq!(t2.len(), 9);
        assert!(identity_residual(&t2.gram()) < 1e-10);
        let t3 = build_harmonics(&make_grid(4, 6).unwrap(), 2).unwrap();
        assert_eq!(t3.len(), 14);
        assert!(identity_residual(&t3.gram()) < 1e-10);
    }

    #[test]
    fn aliasing_is_an_error() {
        let g = make_grid(3, 2).unwrap();
        assert!(matches!(
            build_harmonics(&g, 3),
            Err(Error::AliasingRisk { exactness: 3, required: 6 })
        ));
    }

    #[test]
    fn expand_simple_functions() {
        let g = make_grid(3, 6).unwrap();
        let t = build_harmonics(&g, 2).unwrap();
        let e = expand(&vec![1.0; g.len()], &t).unwrap();
        assert!((e.get(0, 1) - (4.0 * PI).sqrt()).abs() < 1e-12);
        assert!(e.max_abs_above(0) < 1e-12);
        let k = t.index_of(2, 3).unwrap();
        let e = expand(t.values(k), &t).unwrap();
        assert!((e.get(2, 3) - 1.0).abs() < 1e-12);
        let mut e2 = e.clone();
        e2.set(2, 3, 0.0);
        assert!(e2.flat().iter().all(|c| c.abs() < 1e-10));
        // cos²θ has only degrees 0 and 2
        let samples: Vec<f64> = g.points.iter().map(|x| x[0] * x[0]).collect();
        let e = expand(&samples, &t).unwrap();
        assert!(e.coeffs[1].iter().all(|c| c.abs() < 1e-12));
        assert!(e.coeffs[2].iter().any(|c| c.abs() > 0.1));
    }

    #[test]
    fn synthesize_checks_bandwidth() {
        let g = make_grid(3, 4).unwrap();
        let t = build_harmonics(&g, 1).unwrap();
        let zero = HarmonicExpansion::zeros(3, 1).unwrap();
        assert!(synthesize(&zero, &t).unwrap().iter().all(|v| *v == 0.0));
        let mut one = zero.clone();
        one.set(1, 1, 1.0);
        assert_eq!(synthesize(&one, &t).unwrap(), t.values(t.index_of(1, 1).unwrap()));
        assert!(synthesize(&HarmonicExpansion::zeros(3, 2).unwrap(), &t).is_err());
    }

    #[test]
    fn gegenbauer_values() {
        assert_eq!(gegenbauer(5, 0, 0.3).unwrap(), 1.0);
        assert!((gegenbauer(3, 1, 0.7).unwrap() - 0.7).abs() < 1e-15);
        assert!((gegenbauer(3, 2, 0.5).unwrap() + 0.125).abs() < 1e-15);
        assert!(matches!(gegenbauer(3, 2, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn monomial_order() {
        assert_eq!(
            monomials(3, 2),
            vec![
                vec![2, 0, 0],
                vec![1, 1, 0],
                vec![1, 0, 1],
                vec![0, 2, 0],
                vec![0, 1, 1],
                vec![0, 0, 2]
            ]
        );
    }
}
