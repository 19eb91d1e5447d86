//! Probabilistic-unitary noise channels.
//!
//! Angle distributions are quadrature rules (nodes and weights summing to 1),
//! so every channel is a finite sum `Σ_k w_k U(θ_k) ρ U(θ_k)†`.

pub mod gadget;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherent::ExchangeLayout;
use crate::error::{Error, Result};
use crate::harmonics::HarmonicExpansion;
use crate::operator::{identity, ComplexMatrix, DensityMatrix, HermitianBasis, StateVector, ONE, ZERO};
use crate::quadrature::{gauss_legendre, periodic_trapezoid};

pub use gadget::{
    exact_weak_entangling_unitary, gadget_expectation, gadget_extend, teleported_cnot, weak_entangling_channel,
    weak_entangling_report, GadgetState, WeakEntanglingReport, SMALL_ANGLE_REGIME,
};

/// Default quadrature size for continuous distributions.
pub const DEFAULT_POINTS: usize = 48;

/// Named family of an angle distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionKind {
    Delta {
        #[serde(default)]
        at: f64,
    },
    Uniform {
        #[serde(default = "default_points")]
        quadrature_points: usize,
    },
    WrappedGaussian {
        #[serde(default)]
        mean: f64,
        sigma: f64,
        #[serde(default = "default_points")]
        quadrature_points: usize,
    },
    Tabulated { nodes: Vec<f64>, weights: Vec<f64> },
}

fn default_points() -> usize {
    DEFAULT_POINTS
}

/// A probability distribution over an angle, carried as a quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub kind: DistributionKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Distribution {
    pub fn delta(at: f64) -> Self {
        Self {
            kind: DistributionKind::Delta { at },
            nodes: vec![at],
            weights: vec![1.0],
        }
    }

    /// Uniform on `[0, 2π)`: exact for trigonometric polynomials of degree below `m`.
    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidModel("uniform distribution needs quadrature points".into()));
        }
        let r = periodic_trapezoid(m, 0.0);
        Ok(Self {
            kind: DistributionKind::Uniform { quadrature_points: m },
            nodes: r.nodes,
            weights: vec![1.0 / m as f64; m],
        })
    }

    /// Gaussian of width `σ` around `mean`, truncated at 8σ (tail below 1e-15)
    /// and renormalized. When 8σ exceeds π the wrapped density is sampled on a
    /// periodic grid instead.
    pub fn wrapped_gaussian(mean: f64, sigma: f64, points: usize) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidModel(format!("Gaussian width must be positive, got {sigma}")));
        }
        if points == 0 {
            return Err(Error::InvalidModel("Gaussian distribution needs quadrature points".into()));
        }
        let density = |x: f64| (-0.5 * (x / sigma).powi(2)).exp();
        let (nodes, mut weights): (Vec<f64>, Vec<f64>) = if 8.0 * sigma <= PI {
            let r = gauss_legendre(points).mapped(-8.0 * sigma, 8.0 * sigma);
            let w = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * density(*x)).collect();
            (r.nodes.iter().map(|x| x + mean).collect(), w)
        } else {
            let r = periodic_trapezoid(points, -PI);
            let w = r
                .nodes
                .iter()
                .map(|x| (-8..=8).map(|k| density(x + 2.0 * PI * k as f64)).sum::<f64>())
                .collect();
            (r.nodes.iter().map(|x| x + mean).collect(), w)
        };
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self {
            kind: DistributionKind::WrappedGaussian {
                mean,
                sigma,
                quadrature_points: points,
            },
            nodes,
            weights,
        })
    }

    pub fn tabulated(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::InvalidModel("tabulated distribution needs matching nonempty nodes and weights".into()));
        }
        if let Some(w) = weights.iter().find(|w| **w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidModel(format!("negative or non-finite weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidModel(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            kind: DistributionKind::Tabulated {
                nodes: nodes.clone(),
                weights: weights.clone(),
            },
            nodes,
            weights,
        })
    }

    /// Rebuilds the quadrature from the kind.
    pub fn from_kind(kind: DistributionKind) -> Result<Self> {
        match kind {
            DistributionKind::Delta { at } => Ok(Self::delta(at)),
            DistributionKind::Uniform { quadrature_points } => Self::uniform(quadrature_points),
            DistributionKind::WrappedGaussian {
                mean,
                sigma,
                quadrature_points,
            } => Self::wrapped_gaussian(mean, sigma, quadrature_points),
            DistributionKind::Tabulated { nodes, weights } => Self::tabulated(nodes, weights),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_delta_at_zero(&self) -> bool {
        self.nodes.iter().zip(&self.weights).all(|(x, w)| *w == 0.0 || *x == 0.0)
    }

    /// `E[cos kθ]`.
    pub fn cos_moment(&self, k: f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * (k * x).cos()).sum()
    }

    /// `E[sin kθ]`.
    pub fn sin_moment(&self, k: f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * (k * x).sin()).sum()
    }

    /// Largest `|θ|` carrying weight.
    pub fn max_abs(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(x, _)| x.abs())
            .fold(0.0, f64::max)
    }

    /// Circle-harmonic coefficients of the density, as a function on S¹.
    pub fn circle_expansion(&self, k_max: usize) -> HarmonicExpansion {
        let mut e = HarmonicExpansion::zeros(2, k_max).expect("circle");
        e.set(0, 1, 1.0 / (2.0 * PI).sqrt());
        let s = 1.0 / PI.sqrt();
        for n in 1..=k_max {
            e.set(n, 1, s * self.cos_moment(n as f64));
            e.set(n, 2, s * self.sin_moment(n as f64));
        }
        e
    }

    /// Distribution of the sum of independent angles.
    pub fn convolve(&self, other: &Distribution) -> Distribution {
        let mut nodes = Vec::with_capacity(self.len() * other.len());
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for (a, wa) in self.nodes.iter().zip(&self.weights) {
            for (b, wb) in other.nodes.iter().zip(&other.weights) {
                nodes.push(a + b);
                weights.push(wa * wb);
            }
        }
        Distribution {
            kind: DistributionKind::Tabulated {
                nodes: nodes.clone(),
                weights: weights.clone(),
            },
            nodes,
            weights,
        }
    }

    fn check(&self) -> Result<()> {
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 || self.weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidModel(format!(
                "distribution weights must be nonnegative and sum to 1 (sum {total})"
            )));
        }
        Ok(())
    }
}

/// Noise models acting on density matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    GlobalDepolarizing { p: f64 },
    /// Depolarizing with probability `p[k]` on tensor factor `k`.
    LocalDepolarizing { dims: Vec<usize>, p: Vec<f64> },
    /// Qubit: `e^{-iθσz}`.
    Dephasing { dist: Distribution },
    /// Two qubits: `e^{-iθ Z⊗Z}`.
    Zz { dist: Distribution },
    /// `e^{iθT}` with `T = S⁺⊗S⁻ + S⁻⊗S⁺` on `C^{d1+1} ⊗ C^{d2+1}`.
    Exchange { d1: usize, d2: usize, dist: Distribution },
    /// Line of `n` qubits: `L_φ Π_k e^{iθ_k CNOT_{k,k+1}} L_η` with
    /// `L_η = ⊗ e^{-iηZ}`, `L_φ = ⊗ e^{-iφX}` (one shared angle each).
    WeakEntangling {
        n: usize,
        links: Vec<Distribution>,
        eta: Distribution,
        phi: Distribution,
    },
}

impl NoiseModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            NoiseModel::GlobalDepolarizing { .. } => "global_depolarizing",
            NoiseModel::LocalDepolarizing { .. } => "local_depolarizing",
            NoiseModel::Dephasing { .. } => "dephasing",
            NoiseModel::Zz { .. } => "zz_rotation",
            NoiseModel::Exchange { .. } => "exchange",
            NoiseModel::WeakEntangling { .. } => "weak_entangling",
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            NoiseModel::GlobalDepolarizing { .. } => None,
            NoiseModel::LocalDepolarizing { dims, .. } => Some(dims.iter().product()),
            NoiseModel::Dephasing { .. } => Some(2),
            NoiseModel::Zz { .. } => Some(4),
            NoiseModel::Exchange { d1, d2, .. } => Some((d1 + 1) * (d2 + 1)),
            NoiseModel::WeakEntangling { n, .. } => Some(1 << n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!("probability {p} outside [0, 1]")))
            }
        };
        match self {
            NoiseModel::GlobalDepolarizing { p } => prob(*p),
            NoiseModel::LocalDepolarizing { dims, p } => {
                if dims.len() != p.len() || dims.is_empty() {
                    return Err(Error::InvalidModel("one probability per tensor factor is required".into()));
                }
                if dims.iter().any(|d| *d < 2) {
                    return Err(Error::InvalidModel("tensor factors need dimension >= 2".into()));
                }
                p.iter().try_for_each(|x| prob(*x))
            }
            NoiseModel::Dephasing { dist } | NoiseModel::Zz { dist } => dist.check(),
            NoiseModel::Exchange { d1, d2, dist } => {
                if *d1 == 0 || *d2 == 0 {
                    return Err(Error::InvalidModel("exchange needs highest excitations >= 1".into()));
                }
                dist.check()
            }
            NoiseModel::WeakEntangling { n, links, eta, phi } => {
                if *n < 2 || links.len() != n - 1 {
                    return Err(Error::InvalidModel(format!(
                        "weak entangling noise on {n} qubits needs {} link distributions",
                        n.saturating_sub(1)
                    )));
                }
                links.iter().chain([eta, phi]).try_for_each(|d| d.check())
            }
        }
    }
}

/// `exp(i t H)` for Hermitian `H`.
pub fn unitary_exp(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let eig = h.clone().symmetric_eigen();
    let d = StateVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|l| Complex64::from_polar(1.0, t * l)),
    );
    &eig.eigenvectors * ComplexMatrix::from_diagonal(&d) * eig.eigenvectors.adjoint()
}

fn check_dim(rho: &DensityMatrix, dim: usize, what: &str) -> Result<()> {
    if rho.dim() != dim {
        return Err(Error::InvalidInput(format!(
            "{what} acts on dimension {dim}, state has dimension {}",
            rho.dim()
        )));
    }
    Ok(())
}

fn mixture(rho: &ComplexMatrix, unitaries: Vec<(ComplexMatrix, f64)>) -> ComplexMatrix {
    let parts: Vec<ComplexMatrix> = unitaries
        .into_par_iter()
        .map(|(u, w)| &u * rho * u.adjoint() * Complex64::new(w, 0.0))
        .collect();
    let n = rho.nrows();
    let sum = parts.into_iter().fold(ComplexMatrix::zeros(n, n), |a, b| a + b);
    (&sum + sum.adjoint()) * Complex64::new(0.5, 0.0)
}

fn diag_phases(phases: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&StateVector::from_iterator(
        phases.len(),
        phases.iter().map(|p| Complex64::from_polar(1.0, *p)),
    ))
}

/// `(1/d) Σ_ij E_ij ρ E_ji` on factor `k`, i.e. `Tr_k ρ ⊗ I/d_k` in place.
fn depolarize_factor(rho: &ComplexMatrix, dims: &[usize], k: usize, p: f64) -> ComplexMatrix {
    if p == 0.0 {
        return rho.clone();
    }
    let n = rho.nrows();
    let d = dims[k];
    let inner: usize = dims[k + 1..].iter().product();
    let digit = |idx: usize| (idx / inner) % d;
    let replace = |idx: usize, v: usize| idx - digit(idx) * inner + v * inner;
    let mut out = rho * Complex64::new(1.0 - p, 0.0);
    let c = Complex64::new(p / d as f64, 0.0);
    for r in 0..n {
        for col in 0..n {
            if digit(r) != digit(col) {
                continue;
            }
            // (Tr_k ρ ⊗ I/d)[r, col] = (1/d) Σ_j ρ[r with j, col with j]
            let mut s = ZERO;
            for j in 0..d {
                s += rho[(replace(r, j), replace(col, j))];
            }
            out[(r, col)] += c * s;
        }
    }
    out
}

/// `Σ_k w_k U_k ρ U_k†` over the model's quadrature.
pub fn apply_channel(rho: &DensityMatrix, model: &NoiseModel) -> Result<DensityMatrix> {
    model.validate()?;
    let m = rho.matrix();
    let out = match model {
        NoiseModel::GlobalDepolarizing { p } => {
            let n = rho.dim();
            m * Complex64::new(1.0 - p, 0.0) + identity(n) * Complex64::new(p / n as f64, 0.0)
        }
        NoiseModel::LocalDepolarizing { dims, p } => {
            check_dim(rho, dims.iter().product(), "local depolarizing")?;
            let mut out = m.clone();
            for (k, pk) in p.iter().enumerate() {
                out = depolarize_factor(&out, dims, k, *pk);
            }
            out
        }
        NoiseModel::Dephasing { dist } => {
            check_dim(rho, 2, "dephasing")?;
            let us = dist
                .nodes
                .iter()
                .zip(&dist.weights)
                .map(|(t, w)| (diag_phases(&[-t, *t]), *w))
                .collect();
            mixture(m, us)
        }
        NoiseModel::Zz { dist } => {
            check_dim(rho, 4, "ZZ rotation")?;
            let us = dist
                .nodes
                .iter()
                .zip(&dist.weights)
                .map(|(t, w)| (diag_phases(&[-t, *t, *t, -t]), *w))
                .collect();
            mixture(m, us)
        }
        NoiseModel::Exchange { d1, d2, dist } => return exchange_channel(rho, *d1, *d2, dist),
        NoiseModel::WeakEntangling { n, .. } => {
            check_dim(rho, 1 << n, "weak entangling noise")?;
            let us = gadget::weak_entangling_unitaries(model)?;
            mixture(m, us)
        }
    };
    Ok(DensityMatrix::from_channel_output(out))
}

/// Heisenberg-picture map `Σ_k w_k U_k† O U_k`.
pub fn adjoint_channel(op: &ComplexMatrix, model: &NoiseModel) -> Result<ComplexMatrix> {
    model.validate()?;
    let n = op.nrows();
    match model {
        NoiseModel::GlobalDepolarizing { p } => Ok(op * Complex64::new(1.0 - p, 0.0)
            + identity(n) * Complex64::new(p * op.trace().re / n as f64, 0.0)),
        NoiseModel::LocalDepolarizing { dims, p } => {
            let mut out = op.clone();
            for (k, pk) in p.iter().enumerate() {
                out = depolarize_factor(&out, dims, k, *pk);
            }
            Ok(out)
        }
        _ => {
            let us = channel_unitaries(model)?;
            Ok(mixture(op, us.into_iter().map(|(u, w)| (u.adjoint(), w)).collect()))
        }
    }
}

/// The weighted unitaries of a probabilistic-unitary model.
pub fn channel_unitaries(model: &NoiseModel) -> Result<Vec<(ComplexMatrix, f64)>> {
    model.validate()?;
    Ok(match model {
        NoiseModel::Dephasing { dist } => dist
            .nodes
            .iter()
            .zip(&dist.weights)
            .map(|(t, w)| (diag_phases(&[-t, *t]), *w))
            .collect(),
        NoiseModel::Zz { dist } => dist
            .nodes
            .iter()
            .zip(&dist.weights)
            .map(|(t, w)| (diag_phases(&[-t, *t, *t, -t]), *w))
            .collect(),
        NoiseModel::Exchange { d1, d2, dist } => {
            let layout = ExchangeLayout::new(*d1, *d2)?;
            dist.nodes
                .iter()
                .zip(&dist.weights)
                .map(|(t, w)| (exchange_unitary(&layout, *t), *w))
                .collect()
        }
        NoiseModel::WeakEntangling { .. } => gadget::weak_entangling_unitaries(model)?,
        _ => {
            return Err(Error::UnsupportedNoise(format!(
                "{} is not a mixture of unitaries in this implementation",
                model.kind_name()
            )))
        }
    })
}

/// Per-operator attenuation of depolarizing channels.
pub fn depolarizing_factors(model: &NoiseModel, basis: &HermitianBasis) -> Result<Vec<f64>> {
    model.validate()?;
    match model {
        NoiseModel::GlobalDepolarizing { p } => Ok(vec![1.0 - p; basis.len()]),
        NoiseModel::LocalDepolarizing { dims, p } => {
            if basis.factor_dims() != dims.as_slice() {
                return Err(Error::InvalidInput(format!(
                    "basis factors {:?} do not match model factors {:?}",
                    basis.factor_dims(),
                    dims
                )));
            }
            Ok((0..basis.len())
                .map(|i| basis.support(i).iter().map(|k| 1.0 - p[*k]).product())
                .collect())
        }
        _ => Err(Error::UnsupportedNoise(format!(
            "{} is not a depolarizing model",
            model.kind_name()
        ))),
    }
}

/// `e^{i 2θ cos(hπ/(D+1))}`, `h = 1..D`: eigenvalues of `exp(iθT)` for the
/// `D×D` tridiagonal Toeplitz matrix `T` with unit off-diagonals.
pub fn toeplitz_eigenvalues(d: usize, theta: f64) -> Vec<Complex64> {
    (1..=d)
        .map(|h| Complex64::from_polar(1.0, 2.0 * theta * (h as f64 * PI / (d as f64 + 1.0)).cos()))
        .collect()
}

/// Eigenvectors `√(2/(D+1)) sin(k h π/(D+1))` (columns `h`) of the Toeplitz matrix.
pub fn toeplitz_eigenvectors(d: usize) -> nalgebra::DMatrix<f64> {
    let s = (2.0 / (d as f64 + 1.0)).sqrt();
    nalgebra::DMatrix::from_fn(d, d, |k, h| s * (((k + 1) * (h + 1)) as f64 * PI / (d as f64 + 1.0)).sin())
}

/// `T = S⁺⊗S⁻ + S⁻⊗S⁺` with unit-weight ladder operators.
pub fn exchange_generator(d1: usize, d2: usize) -> Result<ComplexMatrix> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::InvalidDimension("exchange needs highest excitations >= 1".into()));
    }
    let n2 = d2 + 1;
    let dim = (d1 + 1) * n2;
    let mut t = ComplexMatrix::zeros(dim, dim);
    for a in 0..d1 {
        for b in 1..=d2 {
            let from = a * n2 + b;
            let to = (a + 1) * n2 + (b - 1);
            t[(to, from)] = ONE;
            t[(from, to)] = ONE;
        }
    }
    Ok(t)
}

/// `exp(iθT)` assembled block by block from the analytic Toeplitz eigensystem.
pub fn exchange_unitary(layout: &ExchangeLayout, theta: f64) -> ComplexMatrix {
    let dim = layout.dim();
    let mut u = ComplexMatrix::zeros(dim, dim);
    for blk in &layout.blocks {
        let d = blk.dim();
        let v = toeplitz_eigenvectors(d);
        let lam = toeplitz_eigenvalues(d, theta);
        for (r, sr) in blk.states.iter().enumerate() {
            for (c, sc) in blk.states.iter().enumerate() {
                let mut z = ZERO;
                for h in 0..d {
                    z += lam[h] * (v[(r, h)] * v[(c, h)]);
                }
                u[(*sr, *sc)] = z;
            }
        }
    }
    u
}

/// Exchange noise averaged over `dist`.
pub fn exchange_channel(rho: &DensityMatrix, d1: usize, d2: usize, dist: &Distribution) -> Result<DensityMatrix> {
    let layout = ExchangeLayout::new(d1, d2)?;
    check_dim(rho, layout.dim(), "exchange noise")?;
    dist.check()?;
    let us = dist
        .nodes
        .iter()
        .zip(&dist.weights)
        .map(|(t, w)| (exchange_unitary(&layout, *t), *w))
        .collect();
    Ok(DensityMatrix::from_channel_output(mixture(rho.matrix(), us)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{random_density, trace_distance};

    #[test]
    fn distributions_normalized() {
        for d in [
            Distribution::uniform(8).unwrap(),
            Distribution::wrapped_gaussian(0.1, 0.3, 20).unwrap(),
            Distribution::wrapped_gaussian(0.0, 1.5, 40).unwrap(),
        ] {
            assert!((d.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        assert!(Distribution::tabulated(vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(Distribution::tabulated(vec![0.0], vec![-1.0]).is_err());
    }

    #[test]
    fn gaussian_moments() {
        // E[cos kθ] = e^{-k²σ²/2} up to the truncation
        let d = Distribution::wrapped_gaussian(0.0, 0.3, 40).unwrap();
        for k in 1..4 {
            let want = (-0.5 * (k as f64 * 0.3).powi(2)).exp();
            assert!((d.cos_moment(k as f64) - want).abs() < 1e-5);
            assert!(d.sin_moment(k as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn trivial_channels() {
        let rho = random_density(2, 4);
        let same = apply_channel(&rho, &NoiseModel::Dephasing { dist: Distribution::delta(0.0) }).unwrap();
        assert!(trace_distance(same.matrix(), rho.matrix()) < 1e-15);
        let mixed = apply_channel(&rho, &NoiseModel::GlobalDepolarizing { p: 1.0 }).unwrap();
        assert!((mixed.matrix() - DensityMatrix::maximally_mixed(2).matrix()).norm() < 1e-15);
        let flat = apply_channel(&rho, &NoiseModel::Dephasing { dist: Distribution::uniform(8).unwrap() }).unwrap();
        assert!(flat.matrix()[(0, 1)].norm() < 1e-10);
    }

    #[test]
    fn toeplitz_small_cases() {
        let t = 0.4;
        let l = toeplitz_eigenvalues(2, t);
        assert!((l[0] - Complex64::from_polar(1.0, t)).norm() < 1e-14);
        assert!((l[1] - Complex64::from_polar(1.0, -t)).norm() < 1e-14);
        assert!((toeplitz_eigenvalues(1, t)[0] - ONE).norm() < 1e-15);
    }

    #[test]
    fn exchange_unitary_matches_dense_exponential() {
        for (d1, d2) in [(1, 1), (1, 2), (2, 3)] {
            let layout = ExchangeLayout::new(d1, d2).unwrap();
            let g = exchange_generator(d1, d2).unwrap();
            let a = exchange_unitary(&layout, 0.37);
            let b = unitary_exp(&g, 0.37);
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn depolarizing_factor_examples() {
        let q = crate::operator::gellmann_basis(2).unwrap();
        let basis = crate::operator::tensor_basis(&[q.clone(), q]).unwrap();
        let model = NoiseModel::LocalDepolarizing {
            dims: vec![2, 2],
            p: vec![0.1, 0.2],
        };
        let f = depolarizing_factors(&model, &basis).unwrap();
        // [X, Y] and [X, I]
        let xy = basis
            .labels()
            .iter()
            .position(|l| *l == crate::operator::BasisLabel::Tensor(vec![Some(0), Some(1)]))
            .unwrap();
        let xi = basis
            .labels()
            .iter()
            .position(|l| *l == crate::operator::BasisLabel::Tensor(vec![Some(0), None]))
            .unwrap();
        assert!((f[xy] - 0.72).abs() < 1e-15);
        assert!((f[xi] - 0.9).abs() < 1e-15);
        let g = depolarizing_factors(&NoiseModel::GlobalDepolarizing { p: 0.1 }, &basis).unwrap();
        assert!(g.iter().all(|x| (x - 0.9).abs() < 1e-15));
    }
}
