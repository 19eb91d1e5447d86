//! Shift noise seen as a convolution of the Wigner function.
//!
//! If the noise unitary shifts the first coordinate, covariance gives
//! `W_{E(ρ)}(θ, η) = Σ_α w_α W_ρ(θ − α, η)`. Each `η`-slice is expanded in
//! circle harmonics and multiplied by the distribution's Fourier moments.

use serde::Serialize;

use super::{wigner, Field, Kernel, ShiftKind};
use crate::error::{Error, Result};
use crate::noise::{apply_channel, Distribution, NoiseModel};
use crate::operator::DensityMatrix;

#[derive(Debug, Clone, Serialize)]
pub struct ConvolutionCheck {
    /// Convolution prediction at the kernel nodes.
    pub predicted: Vec<f64>,
    /// `W` of the noisy state at the same nodes.
    pub direct: Vec<f64>,
    pub max_abs_error: f64,
}

/// `Σ_α w_α f(θ − α)` for samples of `f` on an `m`-point periodic grid.
fn convolve_slice(samples: &[f64], nodes: &[f64], dist: &Distribution) -> Vec<f64> {
    let m = samples.len();
    let k_max = (m - 1) / 2;
    let mut a = vec![0.0; k_max + 1];
    let mut b = vec![0.0; k_max + 1];
    for (f, x) in samples.iter().zip(nodes) {
        for k in 0..=k_max {
            let (s, c) = (k as f64 * x).sin_cos();
            a[k] += f * c;
            b[k] += f * s;
        }
    }
    // f(θ) = a0/m + Σ_k (2/m)(a_k cos kθ + b_k sin kθ)
    let mut out = Vec::with_capacity(m);
    for x in nodes {
        let mut v = a[0] / m as f64;
        for k in 1..=k_max {
            let kf = k as f64;
            let (ec, es) = (dist.cos_moment(kf), dist.sin_moment(kf));
            // shifted: cos k(θ−α), sin k(θ−α) averaged over α
            let (s, c) = (kf * x).sin_cos();
            let ca = c * ec + s * es;
            let sa = s * ec - c * es;
            v += 2.0 / m as f64 * (a[k] * ca + b[k] * sa);
        }
        out.push(v);
    }
    out
}

/// Predicts the noisy Wigner function by convolution and compares it with
/// the Wigner function of the noisy state.
pub fn channel_as_convolution(kernel: &Kernel, noise: &NoiseModel, rho: &DensityMatrix) -> Result<ConvolutionCheck> {
    let dist = match (kernel.shift(), noise) {
        (Some(ShiftKind::Dephasing), NoiseModel::Dephasing { dist }) => dist,
        (Some(ShiftKind::Zz), NoiseModel::Zz { dist }) => dist,
        _ => {
            return Err(Error::UnsupportedNoise(format!(
                "{} noise is not a coordinate shift of kernel {}",
                noise.kind_name(),
                kernel.name
            )))
        }
    };
    let (noise_grid, n_res) = match kernel.field() {
        Field::Separable { noise, residual, .. } => (noise, residual.len()),
        Field::Dense { .. } => {
            return Err(Error::UnsupportedNoise(format!(
                "kernel {} has no separable shift coordinate",
                kernel.name
            )))
        }
    };
    if noise_grid.ncoords() != 1 {
        return Err(Error::UnsupportedNoise("shift coordinate must be a single circle".into()));
    }
    let nodes: Vec<f64> = noise_grid.nodes.iter().map(|p| p[0]).collect();
    let w = wigner(rho, kernel)?.values;
    let mut predicted = vec![0.0; w.len()];
    for b in 0..n_res {
        let slice: Vec<f64> = (0..nodes.len()).map(|a| w[a * n_res + b]).collect();
        for (a, v) in convolve_slice(&slice, &nodes, dist).into_iter().enumerate() {
            predicted[a * n_res + b] = v;
        }
    }
    let noisy = apply_channel(rho, noise)?;
    let direct = wigner(&noisy, kernel)?.values;
    let max_abs_error = predicted
        .iter()
        .zip(&direct)
        .map(|(p, d)| (p - d).abs())
        .fold(0.0, f64::max);
    Ok(ConvolutionCheck {
        predicted,
        direct,
        max_abs_error,
    })
}
