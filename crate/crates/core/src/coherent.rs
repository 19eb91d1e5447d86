//! Coherent-state families, (pseudo-)displacement operators and coefficient tables.
//!
//! Coordinate conventions:
//! - SU(N): `ξ = (θ1, φ1, …, θ_{N-1}, φ_{N-1})`, `θ_k ∈ [0, π]`,
//!   `z0 = cos(θ1/2)`, `z_k = e^{iφ_k} sin(θ1/2)⋯sin(θ_k/2) cos(θ_{k+1}/2)`,
//!   last component without the cosine. For N = 2 this is the Bloch sphere.
//!   Measure: `Π_k ((1 - cos θ_k)/2)^{N-k-1} d(cos θ_k) dφ_k`.
//! - Hypersphere: a point of S^{2N-1} read as `z_k = x_{2k} + i x_{2k+1}`.
//! - Exchange: `(φ1, φ2, θ)` with `θ ∈ [0, π/2]` and measure `sin θ cos θ dθ dφ1 dφ2`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::{sphere_angles, sphere_point, EvalFn, FunctionBasis, ModeKey, SphereGrid};
use crate::operator::{
    expectation, gellmann_basis, hermiticity_residual, identity, ComplexMatrix, HermitianBasis,
    StateVector, ONE,
};
use crate::quadrature::{gauss_legendre, periodic_trapezoid, CoordGrid, Rule};

pub type StateFn = Arc<dyn Fn(&[f64]) -> StateVector + Send + Sync>;

/// A family of unit vectors over a quadrature grid.
#[derive(Clone)]
pub struct CoherentFamily {
    pub dim: usize,
    pub descriptor: String,
    pub grid: CoordGrid,
    state: StateFn,
    /// Whether `∫|ξ⟩⟨ξ| dξ ∝ I` on the full space.
    pub claims_resolution: bool,
}

impl std::fmt::Debug for CoherentFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoherentFamily")
            .field("dim", &self.dim)
            .field("descriptor", &self.descriptor)
            .field("nodes", &self.grid.len())
            .finish()
    }
}

impl CoherentFamily {
    pub fn new(dim: usize, descriptor: &str, grid: CoordGrid, state: StateFn, claims_resolution: bool) -> Self {
        Self {
            dim,
            descriptor: descriptor.to_string(),
            grid,
            state,
            claims_resolution,
        }
    }

    pub fn state(&self, xi: &[f64]) -> StateVector {
        (self.state)(xi)
    }

    pub fn state_fn(&self) -> StateFn {
        self.state.clone()
    }

    pub fn states(&self) -> Vec<StateVector> {
        self.grid.nodes.par_iter().map(|x| (self.state)(x)).collect()
    }

    /// `∫ |ξ⟩⟨ξ| dξ`.
    pub fn frame_operator(&self) -> ComplexMatrix {
        let parts: Vec<ComplexMatrix> = self
            .grid
            .nodes
            .par_iter()
            .zip(&self.grid.weights)
            .map(|(x, w)| {
                let v = (self.state)(x);
                &v * v.adjoint() * Complex64::new(*w, 0.0)
            })
            .collect();
        parts
            .into_iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |a, b| a + b)
    }

    /// `max |∫|ξ⟩⟨ξ| − (mass/dim) I|`.
    pub fn resolution_residual(&self) -> f64 {
        let f = self.frame_operator();
        let target = identity(self.dim) * Complex64::new(self.grid.total_mass() / self.dim as f64, 0.0);
        (f - target).iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// SU(N) coherent state in the nested half-angle convention.
pub fn sun_coherent(dim: usize, xi: &[f64]) -> Result<StateVector> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("coherent states need dim >= 2, got {dim}")));
    }
    if xi.len() != 2 * (dim - 1) {
        return Err(Error::InvalidCoordinates {
            expected: 2 * (dim - 1),
            got: xi.len(),
        });
    }
    Ok(sun_state_unchecked(dim, xi))
}

fn sun_state_unchecked(dim: usize, xi: &[f64]) -> StateVector {
    let mut z = StateVector::zeros(dim);
    let mut s = 1.0;
    for k in 0..dim - 1 {
        let (sh, ch) = (0.5 * xi[2 * k]).sin_cos();
        let phase = if k == 0 { ONE } else { Complex64::from_polar(1.0, xi[2 * k - 1]) };
        z[k] = phase * (s * ch);
        s *= sh;
    }
    z[dim - 1] = Complex64::from_polar(s, xi[2 * dim - 3]);
    z
}

/// Coordinates of the coherent state equal to `z` up to global phase.
pub fn sun_angles(z: &StateVector) -> Vec<f64> {
    let dim = z.len();
    let lead = z.iter().find(|c| c.norm() > 1e-14).copied().unwrap_or(ONE);
    let fix = if z[0].norm() > 1e-14 { z[0].conj() / z[0].norm() } else { lead.conj() / lead.norm() };
    let norm = z.norm();
    let v: Vec<Complex64> = z.iter().map(|c| c * fix / norm).collect();
    let mut xi = Vec::with_capacity(2 * (dim - 1));
    for k in 1..dim {
        let tail: f64 = v[k..].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        xi.push(2.0 * tail.atan2(v[k - 1].norm()));
        let ph = if v[k].norm() > 1e-14 { v[k].arg().rem_euclid(2.0 * PI) } else { 0.0 };
        xi.push(ph);
    }
    xi
}

/// SU(N) family on the product grid: `polar` Gauss-Legendre nodes per `cos θ_k`
/// and `phase` trapezoid nodes per `φ_k`.
pub fn sun_family(dim: usize, polar: usize, phase: usize) -> Result<CoherentFamily> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("coherent states need dim >= 2, got {dim}")));
    }
    let gl = gauss_legendre(polar);
    let ph = periodic_trapezoid(phase, 0.0);
    let mut grid = CoordGrid::point();
    for k in 1..dim {
        let power = (dim - k - 1) as i32;
        let rule = Rule {
            nodes: gl.nodes.iter().map(|t| t.clamp(-1.0, 1.0).acos()).collect(),
            weights: gl
                .nodes
                .iter()
                .zip(&gl.weights)
                .map(|(t, w)| w * ((1.0 - t) / 2.0).powi(power))
                .collect(),
        };
        grid = grid
            .product(&CoordGrid::from_rule(&format!("theta{k}"), &rule))
            .product(&CoordGrid::from_rule(&format!("phi{k}"), &ph));
    }
    let state: StateFn = Arc::new(move |xi: &[f64]| sun_state_unchecked(dim, xi));
    Ok(CoherentFamily::new(dim, &format!("su{dim}-coset"), grid, state, true))
}

/// Default SU(N) family: exact for products of two degree-one coset functions.
pub fn default_sun_family(dim: usize) -> Result<CoherentFamily> {
    sun_family(dim, dim.max(3), 5)
}

/// Qubit state with Bloch vector `(x1, x2, x0)`, i.e. `⟨σz⟩ = x0`.
pub fn bloch_state(x: &[f64]) -> StateVector {
    sun_state_unchecked(2, &sphere_angles(x))
}

/// `z_k = x_{2k} + i x_{2k+1}`.
pub fn hypersphere_state(x: &[f64]) -> StateVector {
    StateVector::from_fn(x.len() / 2, |k, _| Complex64::new(x[2 * k], x[2 * k + 1]))
}

pub fn hypersphere_point(z: &StateVector) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// Bloch vector `(⟨σz⟩, ⟨σx⟩, ⟨σy⟩)` of a qubit state.
pub fn bloch_point(z: &StateVector) -> Vec<f64> {
    let n = z.norm_squared();
    let c = z[0].conj() * z[1];
    vec![
        (z[0].norm_sqr() - z[1].norm_sqr()) / n,
        2.0 * c.re / n,
        2.0 * c.im / n,
    ]
}

/// Coherent family over a sphere grid: the Bloch sphere for `dim = 2, p = 3`,
/// otherwise S^{2N-1} with `p = 2N`.
pub fn sphere_family(dim: usize, grid: &SphereGrid) -> Result<CoherentFamily> {
    let g = grid.coord_grid();
    if dim == 2 && grid.p == 3 {
        let state: StateFn = Arc::new(|a: &[f64]| sun_state_unchecked(2, a));
        return Ok(CoherentFamily::new(2, "bloch-sphere", g, state, true));
    }
    if grid.p != 2 * dim {
        return Err(Error::InvalidInput(format!(
            "dim {dim} needs a grid on S^{}, got S^{}",
            2 * dim - 1,
            grid.p - 1
        )));
    }
    let state: StateFn = Arc::new(|a: &[f64]| hypersphere_state(&sphere_point(a)));
    Ok(CoherentFamily::new(dim, &format!("s{}-hypersphere", 2 * dim - 1), g, state, true))
}

fn binomial_f(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// SU(2) coherent state in `D` dimensions:
/// `Σ_m e^{imφ2} e^{i(D-m-1)φ1} sin^m θ cos^{D-m-1} θ C(D-1, m)^{1/2} |m⟩`.
pub fn su2_coherent_in_d(d: usize, phi1: f64, phi2: f64, theta: f64) -> StateVector {
    let (s, c) = theta.sin_cos();
    StateVector::from_fn(d, |m, _| {
        let amp = s.powi(m as i32) * c.powi((d - m - 1) as i32) * binomial_f(d - 1, m).sqrt();
        Complex64::from_polar(amp, m as f64 * phi2 + (d - m - 1) as f64 * phi1)
    })
}

/// Dimensions of the constant-excitation blocks for local highest excitations `d1, d2`.
pub fn block_dims(d1: usize, d2: usize) -> Vec<usize> {
    (0..=d1 + d2)
        .map(|j| {
            if j <= d1 && j <= d2 {
                j + 1
            } else if d1 <= j && j <= d2 {
                d1 + 1
            } else if d2 <= j && j <= d1 {
                d2 + 1
            } else {
                d1 + d2 - j + 1
            }
        })
        .collect()
}

/// One constant-excitation block `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeBlock {
    pub charge: usize,
    /// Global indices of `|J; m⟩`, `m = 0, 1, …`; `m = 0` has the most
    /// excitations in the first subsystem.
    pub states: Vec<usize>,
    /// Occupations `(n1, n2)` of each state.
    pub occupations: Vec<(usize, usize)>,
}

impl ExchangeBlock {
    pub fn dim(&self) -> usize {
        self.states.len()
    }
}

/// Block layout of `C^{d1+1} ⊗ C^{d2+1}`, global index `n1 (d2+1) + n2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeLayout {
    pub d1: usize,
    pub d2: usize,
    pub blocks: Vec<ExchangeBlock>,
}

impl ExchangeLayout {
    pub fn new(d1: usize, d2: usize) -> Result<Self> {
        if d1 == 0 || d2 == 0 {
            return Err(Error::InvalidDimension(
                "exchange subsystems need highest excitation >= 1".into(),
            ));
        }
        let blocks: Vec<ExchangeBlock> = (0..=d1 + d2)
            .map(|j| {
                let top = j.min(d1);
                let bottom = j.saturating_sub(d2);
                let occupations: Vec<(usize, usize)> = (bottom..=top).rev().map(|a| (a, j - a)).collect();
                ExchangeBlock {
                    charge: j,
                    states: occupations.iter().map(|(a, b)| a * (d2 + 1) + b).collect(),
                    occupations,
                }
            })
            .collect();
        let layout = Self { d1, d2, blocks };
        debug_assert_eq!(
            layout.blocks.iter().map(|b| b.dim()).collect::<Vec<_>>(),
            block_dims(d1, d2)
        );
        Ok(layout)
    }

    pub fn dim(&self) -> usize {
        (self.d1 + 1) * (self.d2 + 1)
    }

    /// `(block, m)` of a global index.
    pub fn locate(&self, index: usize) -> (usize, usize) {
        for (b, blk) in self.blocks.iter().enumerate() {
            if let Some(m) = blk.states.iter().position(|s| *s == index) {
                return (b, m);
            }
        }
        unreachable!("index {index} outside layout")
    }

    pub fn occupation(&self, index: usize) -> (usize, usize) {
        (index / (self.d2 + 1), index % (self.d2 + 1))
    }
}

/// Direct sum over blocks of `su2_coherent_in_d(D_J, …)` times the charge
/// phase, so that every component carries `e^{i(n1 φ1 + n2 φ2)}`. Each block
/// has unit norm; the whole vector is divided by the square root of the block count.
pub fn tensor_sum_coherent(layout: &ExchangeLayout, phi1: f64, phi2: f64, theta: f64) -> StateVector {
    let mut v = StateVector::zeros(layout.dim());
    let norm = 1.0 / (layout.blocks.len() as f64).sqrt();
    for blk in &layout.blocks {
        let d = blk.dim();
        let eta = su2_coherent_in_d(d, phi1, phi2, theta);
        let (top, _) = blk.occupations[0];
        let charge_phase = Complex64::from_polar(
            norm,
            (top as f64 - (d as f64 - 1.0)) * phi1 + (blk.charge - top) as f64 * phi2,
        );
        for (m, idx) in blk.states.iter().enumerate() {
            v[*idx] = charge_phase * eta[m];
        }
    }
    v
}

pub const EXCHANGE_THETA_NODES: usize = 24;

/// Grid over `(φ1, φ2, θ)` for the exchange family.
pub fn exchange_grid(d1: usize, d2: usize, theta_nodes: usize) -> CoordGrid {
    let ph = periodic_trapezoid(exchange_phase_points(d1, d2), 0.0);
    CoordGrid::from_rule("phi1", &ph)
        .product(&CoordGrid::from_rule("phi2", &ph))
        .product(&CoordGrid::from_rule("theta", &exchange_theta_rule(theta_nodes)))
}

/// Trapezoid points per phase angle of the exchange grid.
pub fn exchange_phase_points(d1: usize, d2: usize) -> usize {
    4 * d1.max(d2) + 3
}

/// Gauss-Legendre on `[0, π/2]` with the `sin θ cos θ` Jacobian folded in.
pub fn exchange_theta_rule(n: usize) -> Rule {
    let gl = gauss_legendre(n).mapped(0.0, PI / 2.0);
    Rule {
        weights: gl.nodes.iter().zip(&gl.weights).map(|(t, w)| w * t.sin() * t.cos()).collect(),
        nodes: gl.nodes,
    }
}

pub fn exchange_family(d1: usize, d2: usize) -> Result<CoherentFamily> {
    let layout = Arc::new(ExchangeLayout::new(d1, d2)?);
    let grid = exchange_grid(d1, d2, EXCHANGE_THETA_NODES);
    let l = layout.clone();
    let state: StateFn = Arc::new(move |c: &[f64]| tensor_sum_coherent(&l, c[0], c[1], c[2]));
    Ok(CoherentFamily::new(
        layout.dim(),
        &format!("exchange-{d1}-{d2}"),
        grid,
        state,
        false,
    ))
}

/// `|θ⟩ = (e^{-iθ}, e^{iθ})/√2`; `e^{-iασz}` maps `|θ⟩` to `|θ+α⟩`.
pub fn dephasing_state(theta: f64) -> StateVector {
    let s = 1.0 / 2f64.sqrt();
    StateVector::from_vec(vec![Complex64::from_polar(s, -theta), Complex64::from_polar(s, theta)])
}

/// `|θ⟩ = e^{-iθ Z⊗Z}|++⟩`.
pub fn zz_state(theta: f64) -> StateVector {
    let even = Complex64::from_polar(0.5, -theta);
    let odd = Complex64::from_polar(0.5, theta);
    StateVector::from_vec(vec![even, odd, odd, even])
}

pub fn dephasing_family(m: usize) -> CoherentFamily {
    let grid = CoordGrid::from_rule("theta", &periodic_trapezoid(m, 0.0));
    CoherentFamily::new(2, "dephasing-circle", grid, Arc::new(|c: &[f64]| dephasing_state(c[0])), false)
}

pub fn zz_family(m: usize) -> CoherentFamily {
    let grid = CoordGrid::from_rule("theta", &periodic_trapezoid(m, 0.0));
    CoherentFamily::new(4, "zz-circle", grid, Arc::new(|c: &[f64]| zz_state(c[0])), false)
}

/// Constant plus the normalized functions `⟨ξ|Λ_j|ξ⟩`; on the SU(N) coset
/// these span the degree-zero and degree-one harmonics.
pub fn coset_basis(family: &CoherentFamily) -> Result<FunctionBasis> {
    let basis = Arc::new(gellmann_basis(family.dim)?);
    let states = family.states();
    let w = &family.grid.weights;
    let mass = family.grid.total_mass();
    let mut values = vec![vec![1.0 / mass.sqrt(); states.len()]];
    let mut norms = Vec::with_capacity(basis.len());
    for op in basis.elements() {
        let g: Vec<f64> = states.iter().map(|v| expectation(v, op)).collect();
        let n = g.iter().zip(w).map(|(x, wi)| wi * x * x).sum::<f64>().sqrt();
        if n < 1e-12 {
            return Err(Error::DegenerateGrid(format!(
                "expectation function vanishes on family {}",
                family.descriptor
            )));
        }
        values.push(g.iter().map(|x| x / n).collect());
        norms.push(n);
    }
    let mut keys = vec![ModeKey::single(0, 1)];
    keys.extend((1..=basis.len()).map(|j| ModeKey::single(1, j)));
    let state = family.state_fn();
    let c0 = 1.0 / mass.sqrt();
    let eval: EvalFn = Arc::new(move |xi: &[f64]| {
        let v = state(xi);
        let mut out = vec![c0];
        out.extend(basis.elements().iter().zip(&norms).map(|(op, n)| expectation(&v, op) / n));
        out
    });
    Ok(FunctionBasis::new(family.grid.clone(), keys, values, eval))
}

/// `D = ∫ Y(ξ) |ξ⟩⟨ξ| dξ` for one orthonormal function.
#[derive(Debug, Clone)]
pub struct DisplacementOperator {
    pub key: ModeKey,
    pub mat: ComplexMatrix,
}

pub fn displacement_operators(family: &CoherentFamily, basis: &FunctionBasis) -> Result<Vec<DisplacementOperator>> {
    let g = basis.grid();
    if g.len() != family.grid.len() || g.names != family.grid.names || g.weights != family.grid.weights {
        return Err(Error::InvalidInput(format!(
            "function grid ({} nodes over {:?}) does not match family grid ({} nodes over {:?})",
            g.len(),
            g.names,
            family.grid.len(),
            family.grid.names
        )));
    }
    let projectors: Vec<ComplexMatrix> = family.states().iter().map(|v| v * v.adjoint()).collect();
    let ops = (0..basis.len())
        .into_par_iter()
        .map(|k| {
            let y = basis.values(k);
            let mut m = ComplexMatrix::zeros(family.dim, family.dim);
            for ((p, w), yv) in projectors.iter().zip(&g.weights).zip(y) {
                let c = w * yv;
                if c != 0.0 {
                    m += p * Complex64::new(c, 0.0);
                }
            }
            // quadrature of Hermitian terms; remove rounding asymmetry
            let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
            DisplacementOperator {
                key: basis.keys()[k].clone(),
                mat: m,
            }
        })
        .collect();
    Ok(ops)
}

/// Coefficients `f^{(i)}_{(n,j)}` with a partition of the basis operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub keys: Vec<ModeKey>,
    pub op_labels: Vec<String>,
    /// `rows[i][k]`: operator `i`, function `k`.
    pub rows: Vec<Vec<f64>>,
    pub classes: Vec<Vec<usize>>,
}

impl CoefficientTable {
    /// Builds and validates: `classes` must partition the rows and rows in a
    /// class must be mutually orthogonal.
    pub fn new(keys: Vec<ModeKey>, op_labels: Vec<String>, rows: Vec<Vec<f64>>, classes: Vec<Vec<usize>>) -> Result<Self> {
        let n = rows.len();
        if op_labels.len() != n || rows.iter().any(|r| r.len() != keys.len()) {
            return Err(Error::InvalidInput("coefficient table shape mismatch".into()));
        }
        let mut seen = vec![false; n];
        for c in &classes {
            for &i in c {
                if i >= n || seen[i] {
                    return Err(Error::InvalidInput(format!(
                        "classes must partition 0..{n}; index {i} is out of range or repeated"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!("operator {i} belongs to no class")));
        }
        let t = Self { keys, op_labels, rows, classes };
        t.check_orthogonality(1e-8)?;
        Ok(t)
    }

    pub fn row_dot(&self, a: usize, b: usize) -> f64 {
        self.rows[a].iter().zip(&self.rows[b]).map(|(x, y)| x * y).sum()
    }

    /// Errors on the first pair within a class whose normalized overlap exceeds `tol`.
    pub fn check_orthogonality(&self, tol: f64) -> Result<()> {
        for (ci, class) in self.classes.iter().enumerate() {
            for (x, &a) in class.iter().enumerate() {
                for &b in &class[x + 1..] {
                    let scale = (self.row_dot(a, a) * self.row_dot(b, b)).sqrt();
                    let ov = self.row_dot(a, b);
                    if ov.abs() > tol * scale + 1e-14 {
                        return Err(Error::OrthogonalityViolation {
                            class: ci,
                            first: a,
                            second: b,
                            overlap: ov,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn class_of(&self, op: usize) -> usize {
        self.classes.iter().position(|c| c.contains(&op)).expect("validated partition")
    }

    /// Row sums `Σ_k f_k Y_k` at every node of the function basis.
    pub fn synthesize_row(&self, i: usize, basis: &FunctionBasis) -> Vec<f64> {
        basis.synthesize(&self.rows[i])
    }
}

/// Expands per-operator functions over a function basis.
pub fn table_from_functions(
    basis: &FunctionBasis,
    samples: &[Vec<f64>],
    op_labels: Vec<String>,
    classes: Vec<Vec<usize>>,
) -> Result<CoefficientTable> {
    let rows = samples.iter().map(|s| basis.coefficients(s)).collect();
    CoefficientTable::new(basis.keys().to_vec(), op_labels, rows, classes)
}

/// `f^{(i)}_k = ½ Tr[D_k Λ_i]`.
pub fn coefficient_table(
    ops: &[DisplacementOperator],
    basis: &HermitianBasis,
    classes: Vec<Vec<usize>>,
) -> Result<CoefficientTable> {
    if let Some(d) = ops.first() {
        if d.mat.nrows() != basis.dim() {
            return Err(Error::InvalidDimension(format!(
                "displacement operators act on {}, basis on {}",
                d.mat.nrows(),
                basis.dim()
            )));
        }
    }
    let rows = basis
        .elements()
        .par_iter()
        .map(|lam| {
            ops.iter()
                .map(|d| 0.5 * crate::operator::trace_product(&d.mat, lam).re)
                .collect()
        })
        .collect();
    let labels = basis.labels().iter().map(|l| l.to_string()).collect();
    CoefficientTable::new(ops.iter().map(|d| d.key.clone()).collect(), labels, rows, classes)
}

/// Largest Hermiticity residual among displacement operators.
pub fn displacement_hermiticity(ops: &[DisplacementOperator]) -> f64 {
    ops.iter().map(|d| hermiticity_residual(&d.mat)).fold(0.0, f64::max)
}

pub fn all_in_one_class(n: usize) -> Vec<Vec<usize>> {
    vec![(0..n).collect()]
}

pub fn singleton_classes(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|i| vec![i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::{build_harmonics, make_grid};
    use crate::operator::ZERO;
    use crate::operator::{random_pure_state, seeded_rng};

    #[test]
    fn qubit_coherent_state() {
        let v = sun_coherent(2, &[0.0, 0.0]).unwrap();
        assert_eq!(v[0], ONE);
        assert_eq!(v[1], ZERO);
        let v = sun_coherent(2, &[1.0, 0.4]).unwrap();
        assert!((v[0].re - 0.5f64.cos()).abs() < 1e-15);
        assert!((v[1] - Complex64::from_polar(0.5f64.sin(), 0.4)).norm() < 1e-15);
        assert!(matches!(
            sun_coherent(3, &[0.1, 0.2]),
            Err(Error::InvalidCoordinates { expected: 4, got: 2 })
        ));
    }

    #[test]
    fn resolution_of_unity() {
        let f2 = default_sun_family(2).unwrap();
        assert!(f2.resolution_residual() < 1e-10);
        let f3 = default_sun_family(3).unwrap();
        assert!(f3.resolution_residual() < 1e-8);
        let s5 = sphere_family(3, &make_grid(6, 3).unwrap()).unwrap();
        assert!(s5.resolution_residual() < 1e-8);
    }

    #[test]
    fn sun_angles_inverts_up_to_phase() {
        let mut rng = seeded_rng(3);
        for dim in 2..5 {
            let z = random_pure_state(dim, &mut rng);
            let back = sun_coherent(dim, &sun_angles(&z)).unwrap();
            let overlap = (back.adjoint() * &z)[(0, 0)].norm();
            assert!((overlap - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn su2_in_d_cases() {
        let v = su2_coherent_in_d(1, 0.3, 0.7, 1.1);
        assert!((v[0].norm() - 1.0).abs() < 1e-15);
        let v = su2_coherent_in_d(2, 0.3, 0.7, 0.0);
        assert!((v[0] - Complex64::from_polar(1.0, 0.3)).norm() < 1e-15 && v[1].norm() == 0.0);
        assert!((su2_coherent_in_d(3, 0.1, 0.2, PI / 4.0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn block_dimensions() {
        assert_eq!(block_dims(1, 1), vec![1, 2, 1]);
        assert_eq!(block_dims(2, 2), vec![1, 2, 3, 2, 1]);
        assert_eq!(block_dims(1, 2), vec![1, 2, 2, 1]);
        for d1 in 1..4 {
            for d2 in 1..4 {
                let l = ExchangeLayout::new(d1, d2).unwrap();
                assert_eq!(l.blocks.iter().map(|b| b.dim()).collect::<Vec<_>>(), block_dims(d1, d2));
                assert_eq!(block_dims(d1, d2).iter().sum::<usize>(), (d1 + 1) * (d2 + 1));
            }
        }
    }

    #[test]
    fn tensor_sum_phases_follow_occupations() {
        let l = ExchangeLayout::new(1, 2).unwrap();
        let (p1, p2, th) = (0.4, 1.3, 0.7);
        let v = tensor_sum_coherent(&l, p1, p2, th);
        let w = tensor_sum_coherent(&l, 0.0, 0.0, th);
        for idx in 0..l.dim() {
            let (n1, n2) = l.occupation(idx);
            let expect = w[idx] * Complex64::from_polar(1.0, n1 as f64 * p1 + n2 as f64 * p2);
            assert!((v[idx] - expect).norm() < 1e-14);
        }
        for blk in &l.blocks {
            let n: f64 = blk.states.iter().map(|i| v[*i].norm_sqr()).sum();
            assert!((n * l.blocks.len() as f64 - 1.0).abs() < 1e-12);
        }
        // θ = 0: highest weight in every block
        let v0 = tensor_sum_coherent(&l, 0.0, 0.0, 0.0);
        for blk in &l.blocks {
            assert!(blk.states[1..].iter().all(|i| v0[*i].norm() < 1e-15));
        }
    }

    #[test]
    fn dephasing_expectations() {
        let b = gellmann_basis(2).unwrap();
        let v = dephasing_state(0.0);
        assert!((expectation(&v, b.element(0)) - 1.0).abs() < 1e-15);
        let v = dephasing_state(0.3);
        assert!((expectation(&v, b.element(0)) - 0.6f64.cos()).abs() < 1e-15);
        assert!((expectation(&v, b.element(1)) - 0.6f64.sin()).abs() < 1e-15);
        assert!(expectation(&v, b.element(2)).abs() < 1e-15);
    }

    #[test]
    fn qubit_table_and_displacements() {
        let grid = make_grid(3, 4).unwrap();
        let fam = sphere_family(2, &grid).unwrap();
        let table = build_harmonics(&grid, 2).unwrap();
        let fb = table.function_basis();
        let ds = displacement_operators(&fam, &fb).unwrap();
        assert!(displacement_hermiticity(&ds) < 1e-12);
        // D_{0,1} ∝ I
        let d0 = &ds[0].mat;
        assert!((d0[(0, 0)] - d0[(1, 1)]).norm() < 1e-12 && d0[(0, 1)].norm() < 1e-12);
        let b = gellmann_basis(2).unwrap();
        let t = coefficient_table(&ds, &b, all_in_one_class(3)).unwrap();
        let g = nalgebra::DMatrix::from_fn(3, 3, |a, c| t.row_dot(a, c));
        assert!((g[(0, 0)] - g[(1, 1)]).abs() < 1e-12 && (g[(1, 1)] - g[(2, 2)]).abs() < 1e-12);
        // degree-1 operators span the Pauli matrices
        for d in &ds[1..4] {
            assert!(d.mat.trace().norm() < 1e-12);
        }
    }

    #[test]
    fn dephasing_table_classes() {
        let fam = dephasing_family(9);
        let fb = FunctionBasis::circle("theta", 2, 9);
        let ds = displacement_operators(&fam, &fb).unwrap();
        let b = gellmann_basis(2).unwrap();
        let t = coefficient_table(&ds, &b, vec![vec![0, 1], vec![2]]).unwrap();
        assert!(t.rows[2].iter().all(|x| x.abs() < 1e-14));
        assert!((t.row_dot(0, 0) - t.row_dot(1, 1)).abs() < 1e-12);
        // the cos 2θ harmonic displacement is proportional to σx
        let k = fb.keys().iter().position(|k| *k == ModeKey::single(2, 1)).unwrap();
        let d = &ds[k].mat;
        assert!(d[(0, 0)].norm() < 1e-12 && d[(0, 1)].im.abs() < 1e-12 && d[(0, 1)].re > 0.1);
    }

    #[test]
    fn table_rejects_bad_partitions() {
        let keys = vec![ModeKey::single(0, 1), ModeKey::single(1, 1)];
        let rows = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        let labels = vec!["a".into(), "b".into()];
        assert!(matches!(
            CoefficientTable::new(keys.clone(), labels.clone(), rows.clone(), all_in_one_class(2)),
            Err(Error::OrthogonalityViolation { first: 0, second: 1, .. })
        ));
        assert!(CoefficientTable::new(keys.clone(), labels.clone(), rows.clone(), vec![vec![0]]).is_err());
        assert!(CoefficientTable::new(keys, labels, rows, singleton_classes(2)).is_ok());
    }
}
