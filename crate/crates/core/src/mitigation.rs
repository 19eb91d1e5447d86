//! Attenuation profiles and their inversion.
//!
//! Depolarizing noise scales every traceless basis operator by a constant.
//! Circular noise `U(θ) = V e^{iθΛ} V†` rotates `|k⟩⟨l|` (eigenbasis) by
//! `e^{iθ(λ_k − λ_l)}`, so in the eigenbasis-aligned Gell-Mann basis each
//! operator is scaled by `E[cos ωθ]`, provided the odd moments `E[sin ωθ]`
//! vanish. Otherwise the pair `X_kl, Y_kl` is mixed and element-wise
//! inversion is not available.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coherent::ExchangeLayout;
use crate::error::{Error, Result};
use crate::harmonics::HarmonicExpansion;
use crate::noise::{apply_channel, depolarizing_factors, toeplitz_eigenvalues, toeplitz_eigenvectors, Distribution, NoiseModel};
use crate::operator::{gellmann_basis, trace_product, BasisLabel, ComplexMatrix, DensityMatrix, HermitianBasis};

/// Smallest factor that will be inverted; keeps amplification at most 1000.
pub const DEFAULT_FLOOR: f64 = 1e-3;
/// Odd moments below this count as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileScope {
    PerOperator,
    PerHarmonicDegree,
    PerCircularFrequency,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttenuationProfile {
    pub scope: ProfileScope,
    /// Keyed by operator label, harmonic degree or frequency.
    pub factors: BTreeMap<String, f64>,
    /// Rotation frequency per operator, for circular models.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub frequencies: BTreeMap<String, f64>,
    pub descriptor: String,
    #[serde(skip)]
    pub basis: Option<HermitianBasis>,
}

impl AttenuationProfile {
    pub fn factor(&self, key: &str) -> Option<f64> {
        self.factors.get(key).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    /// Refuse circular profiles whose distribution has nonzero odd moments.
    pub check_symmetry: bool,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { check_symmetry: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MitigatedEstimate {
    pub raw: f64,
    pub factor: f64,
    pub mitigated: f64,
    /// `1 / factor`, a proxy for the variance cost.
    pub amplification: f64,
}

pub fn noisy_expectation(op: &ComplexMatrix, rho: &DensityMatrix, model: &NoiseModel) -> Result<f64> {
    if op.nrows() != rho.dim() || op.ncols() != rho.dim() {
        return Err(Error::InvalidInput(format!(
            "observable is {}x{}, state has dimension {}",
            op.nrows(),
            op.ncols(),
            rho.dim()
        )));
    }
    Ok(trace_product(op, apply_channel(rho, model)?.matrix()).re)
}

/// Eigenphases `λ` and eigenvectors `V` with `U(θ) = V diag(e^{iθλ}) V†`.
pub fn circular_spectrum(model: &NoiseModel) -> Result<(Vec<f64>, ComplexMatrix)> {
    match model {
        NoiseModel::Dephasing { .. } => Ok((vec![-1.0, 1.0], ComplexMatrix::identity(2, 2))),
        NoiseModel::Zz { .. } => Ok((vec![-1.0, 1.0, 1.0, -1.0], ComplexMatrix::identity(4, 4))),
        NoiseModel::Exchange { d1, d2, .. } => {
            let layout = ExchangeLayout::new(*d1, *d2)?;
            let dim = layout.dim();
            let mut lam = Vec::with_capacity(dim);
            let mut v = ComplexMatrix::zeros(dim, dim);
            let mut col = 0;
            for blk in &layout.blocks {
                let d = blk.dim();
                let vecs = toeplitz_eigenvectors(d);
                // e^{i 2θ cos} = e^{iθλ}
                lam.extend(toeplitz_eigenvalues(d, 1.0).iter().map(|z| z.arg()));
                for h in 0..d {
                    for (r, s) in blk.states.iter().enumerate() {
                        v[(*s, col)] = Complex64::new(vecs[(r, h)], 0.0);
                    }
                    col += 1;
                }
            }
            Ok((lam, v))
        }
        other => Err(Error::UnsupportedNoise(format!(
            "{} is not a single-parameter circular model",
            other.kind_name()
        ))),
    }
}

/// Gell-Mann basis written in the noise eigenbasis.
pub fn circular_basis(model: &NoiseModel) -> Result<HermitianBasis> {
    let (_, v) = circular_spectrum(model)?;
    let g = gellmann_basis(v.nrows())?;
    let elements = g.elements().iter().map(|e| &v * e * v.adjoint()).collect();
    HermitianBasis::from_elements(v.nrows(), elements, g.labels().to_vec())
}

fn distribution_of(model: &NoiseModel) -> Option<&Distribution> {
    match model {
        NoiseModel::Dephasing { dist } | NoiseModel::Zz { dist } | NoiseModel::Exchange { dist, .. } => Some(dist),
        _ => None,
    }
}

fn describe(model: &NoiseModel) -> String {
    match (model, distribution_of(model)) {
        (NoiseModel::Exchange { d1, d2, .. }, Some(d)) => format!("exchange({d1},{d2}) {:?}", d.kind),
        (_, Some(d)) => format!("{} {:?}", model.kind_name(), d.kind),
        _ => format!("{model:?}"),
    }
}

/// Per-operator factors for depolarizing and circular models.
///
/// Depolarizing models use `basis` (required). Circular models always use
/// their eigenbasis-aligned basis; a supplied basis must match it.
pub fn attenuation_profile(
    model: &NoiseModel,
    basis: Option<&HermitianBasis>,
    opts: &ProfileOptions,
) -> Result<AttenuationProfile> {
    model.validate()?;
    let descriptor = describe(model);
    match model {
        NoiseModel::GlobalDepolarizing { .. } | NoiseModel::LocalDepolarizing { .. } => {
            let basis = basis.ok_or_else(|| Error::InvalidInput("depolarizing profiles need an operator basis".into()))?;
            let f = depolarizing_factors(model, basis)?;
            Ok(AttenuationProfile {
                scope: ProfileScope::PerOperator,
                factors: basis.labels().iter().map(|l| l.to_string()).zip(f).collect(),
                frequencies: BTreeMap::new(),
                descriptor,
                basis: Some(basis.clone()),
            })
        }
        NoiseModel::Dephasing { .. } | NoiseModel::Zz { .. } | NoiseModel::Exchange { .. } => {
            let dist = distribution_of(model).expect("circular model");
            let (lam, _) = circular_spectrum(model)?;
            let aligned = circular_basis(model)?;
            if let Some(b) = basis {
                let same = b.len() == aligned.len()
                    && b.elements().iter().zip(aligned.elements()).all(|(x, y)| (x - y).norm() < 1e-10);
                if !same {
                    return Err(Error::InvalidInput(
                        "circular profiles are defined on the noise eigenbasis; use circular_basis".into(),
                    ));
                }
            }
            let mut factors = BTreeMap::new();
            let mut frequencies = BTreeMap::new();
            for label in aligned.labels() {
                let omega = match label {
                    BasisLabel::Symmetric { row, col } | BasisLabel::Antisymmetric { row, col } => lam[*row] - lam[*col],
                    _ => 0.0,
                };
                let name = label.to_string();
                if omega.abs() > 1e-12 && dist.sin_moment(omega).abs() > SYMMETRY_TOL && opts.check_symmetry {
                    return Err(Error::NotInvertibleProfile(format!(
                        "{name} rotates at frequency {omega} and the distribution has odd moment {:.3e}",
                        dist.sin_moment(omega)
                    )));
                }
                let f = if omega.abs() > 1e-12 { dist.cos_moment(omega) } else { 1.0 };
                factors.insert(name.clone(), f);
                frequencies.insert(name, omega.abs());
            }
            Ok(AttenuationProfile {
                scope: ProfileScope::PerOperator,
                factors,
                frequencies,
                descriptor,
                basis: Some(aligned),
            })
        }
        other => Err(Error::UnsupportedNoise(format!(
            "no attenuation profile for {}",
            other.kind_name()
        ))),
    }
}

/// Factors `E[cos nθ]` for `n = 0..=n_max`.
pub fn frequency_profile(dist: &Distribution, n_max: usize) -> AttenuationProfile {
    AttenuationProfile {
        scope: ProfileScope::PerCircularFrequency,
        factors: (0..=n_max).map(|n| (n.to_string(), dist.cos_moment(n as f64))).collect(),
        frequencies: BTreeMap::new(),
        descriptor: format!("{:?}", dist.kind),
        basis: None,
    }
}

/// Global depolarizing as a per-degree profile: degree 0 untouched, every other degree `1 − p`.
pub fn degree_profile(model: &NoiseModel, n_max: usize) -> Result<AttenuationProfile> {
    match model {
        NoiseModel::GlobalDepolarizing { p } => {
            model.validate()?;
            Ok(AttenuationProfile {
                scope: ProfileScope::PerHarmonicDegree,
                factors: (0..=n_max)
                    .map(|n| (n.to_string(), if n == 0 { 1.0 } else { 1.0 - p }))
                    .collect(),
                frequencies: BTreeMap::new(),
                descriptor: format!("{model:?}"),
                basis: None,
            })
        }
        other => Err(Error::UnsupportedNoise(format!(
            "{} does not act per harmonic degree",
            other.kind_name()
        ))),
    }
}

/// `raw / factor` per operator.
pub fn mitigate(
    raw: &BTreeMap<String, f64>,
    profile: &AttenuationProfile,
    floor: f64,
) -> Result<BTreeMap<String, MitigatedEstimate>> {
    raw.iter()
        .map(|(op, r)| {
            let factor = profile
                .factor(op)
                .ok_or_else(|| Error::InvalidInput(format!("no attenuation factor for operator {op}")))?;
            if factor.abs() < floor {
                return Err(Error::IllConditioned {
                    operator: op.clone(),
                    factor,
                    floor,
                });
            }
            Ok((
                op.clone(),
                MitigatedEstimate {
                    raw: *r,
                    factor,
                    mitigated: r / factor,
                    amplification: 1.0 / factor.abs(),
                },
            ))
        })
        .collect()
}

/// Noisy expectations of every operator in the profile's basis.
pub fn raw_expectations(profile: &AttenuationProfile, noisy: &DensityMatrix) -> Result<BTreeMap<String, f64>> {
    let basis = profile
        .basis
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("profile carries no operator basis".into()))?;
    if basis.dim() != noisy.dim() {
        return Err(Error::InvalidInput("state and basis dimensions differ".into()));
    }
    Ok(basis
        .labels()
        .iter()
        .zip(basis.elements())
        .map(|(l, e)| (l.to_string(), trace_product(e, noisy.matrix()).re))
        .collect())
}

/// Mitigated `⟨O⟩` from per-operator estimates: the identity part `Tr[O]/N`
/// is kept as is and `O − Tr[O]/N` is expanded in the profile's basis.
pub fn mitigated_observable(
    op: &ComplexMatrix,
    profile: &AttenuationProfile,
    estimates: &BTreeMap<String, MitigatedEstimate>,
) -> Result<f64> {
    let basis = profile
        .basis
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("profile carries no operator basis".into()))?;
    let n = basis.dim() as f64;
    let mut total = op.trace().re / n;
    for (l, e) in basis.labels().iter().zip(basis.elements()) {
        let c = trace_product(op, e).re / 2.0;
        if c == 0.0 {
            continue;
        }
        let est = estimates
            .get(&l.to_string())
            .ok_or_else(|| Error::InvalidInput(format!("no estimate for operator {l}")))?;
        total += c * est.mitigated;
    }
    Ok(total)
}

/// Result of dividing circle coefficients by `E[cos nθ]`.
#[derive(Debug, Clone)]
pub struct Reweighted {
    pub expansion: HarmonicExpansion,
    /// Frequencies whose factor fell below the floor; their coefficients are zeroed.
    pub truncated: Vec<usize>,
}

/// Undoes a symmetric circular convolution on a circle expansion.
pub fn circular_reweight(w: &HarmonicExpansion, dist: &Distribution, floor: f64) -> Result<Reweighted> {
    if w.p != 2 {
        return Err(Error::InvalidInput(format!("expected a circle expansion, got p = {}", w.p)));
    }
    let mut out = w.clone();
    let mut truncated = Vec::new();
    for n in 1..=w.n_max {
        let s = dist.sin_moment(n as f64);
        if s.abs() > SYMMETRY_TOL {
            return Err(Error::NotInvertibleProfile(format!(
                "distribution has odd moment {s:.3e} at frequency {n}"
            )));
        }
        let f = dist.cos_moment(n as f64);
        for j in 1..=2 {
            if f.abs() < floor {
                out.set(n, j, 0.0);
            } else {
                out.set(n, j, w.get(n, j) / f);
            }
        }
        if f.abs() < floor {
            truncated.push(n);
        }
    }
    Ok(Reweighted { expansion: out, truncated })
}

/// Mitigation of one state end to end: channel, raw expectations, inversion.
#[derive(Debug, Clone, Serialize)]
pub struct MitigationReport {
    pub model: String,
    pub floor: f64,
    pub operators: BTreeMap<String, MitigatedEstimate>,
    /// Noiseless `Tr[O_i ρ]` when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_error: Option<f64>,
}

pub fn mitigation_report(
    rho: &DensityMatrix,
    model: &NoiseModel,
    profile: &AttenuationProfile,
    floor: f64,
) -> Result<MitigationReport> {
    let noisy = apply_channel(rho, model)?;
    let raw = raw_expectations(profile, &noisy)?;
    let operators = mitigate(&raw, profile, floor)?;
    let exact = raw_expectations(profile, rho)?;
    let max_error = operators
        .iter()
        .map(|(k, e)| (e.mitigated - exact[k]).abs())
        .fold(0.0, f64::max);
    Ok(MitigationReport {
        model: model.kind_name().to_string(),
        floor,
        operators,
        exact: Some(exact),
        max_error: Some(max_error),
    })
}
