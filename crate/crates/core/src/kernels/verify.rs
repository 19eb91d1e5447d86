//! Quadrature checks of the Stratonovich-Weyl conditions.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Kernel;
use crate::operator::{
    conjugate, hermiticity_residual, identity, random_density_with, seeded_rng, trace_product, DensityMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Random states (and state pairs) for the trace rule, traciality and
    /// reconstruction; also the number of sampled group elements per probe.
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub covariance: bool,
    /// Nodes checked per sampled group element.
    pub covariance_nodes: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            samples: 20,
            seed: 0,
            tol: 1e-7,
            covariance: true,
            covariance_nodes: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceResult {
    pub name: String,
    pub gated: bool,
    pub samples: usize,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SWReport {
    pub kernel: String,
    pub dim: usize,
    pub nodes: usize,
    pub tolerance: f64,
    pub samples: usize,
    pub seed: u64,
    /// Max Hermiticity residual of `Δ` over all nodes.
    pub hermiticity: f64,
    /// Max entry of `∫Δ − I`.
    pub normalization: f64,
    /// Max `|∫W_ρ − Tr ρ|` over sampled states.
    pub trace_rule: f64,
    /// Max `|∫W_ρ W_σ − Tr[ρσ]|` over sampled pairs.
    pub traciality: f64,
    /// Max Frobenius error of `∫W_ρ Δ − ρ`.
    pub reconstruction: f64,
    pub covariance: Vec<CovarianceResult>,
    pub hermiticity_pass: bool,
    pub normalization_pass: bool,
    pub trace_rule_pass: bool,
    pub traciality_pass: bool,
    pub reconstruction_pass: bool,
    /// All gated probes pass (true when there are none).
    pub covariance_pass: bool,
    /// Conditions 1-4.
    pub pass: bool,
}

fn max_abs(m: &crate::operator::ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Runs the checks and marks the kernel verified when conditions 1-4 pass.
pub fn verify_sw(kernel: &Kernel, opts: &VerifyOptions) -> SWReport {
    let dim = kernel.dim();
    let tol = opts.tol;
    let nodes = kernel.node_count();

    let hermiticity = (0..nodes)
        .into_par_iter()
        .map(|k| hermiticity_residual(&kernel.eval_node(k)))
        .reduce(|| 0.0, f64::max);

    let ones = vec![1.0; nodes];
    let normalization = max_abs(&(kernel.integrate_against(&ones) - identity(dim)));

    let mut rng = seeded_rng(opts.seed);
    let states: Vec<DensityMatrix> = (0..opts.samples.max(1))
        .map(|_| random_density_with(dim, &mut rng))
        .collect();
    let ws: Vec<Vec<f64>> = states
        .iter()
        .map(|r| kernel.wigner_values(r.matrix()).expect("dimension matches"))
        .collect();
    let weights = kernel.field().weights();
    let integ = |a: &[f64], b: Option<&[f64]>| -> f64 {
        match b {
            None => weights.iter().zip(a).map(|(w, x)| w * x).sum(),
            Some(b) => weights.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum(),
        }
    };
    let trace_rule = ws.iter().map(|w| (integ(w, None) - 1.0).abs()).fold(0.0, f64::max);
    let n = states.len();
    let traciality = (0..n)
        .map(|a| {
            let b = (a + 1) % n;
            let want = trace_product(states[a].matrix(), states[b].matrix()).re;
            (integ(&ws[a], Some(&ws[b])) - want).abs()
        })
        .fold(0.0, f64::max);
    let reconstruction = states
        .iter()
        .zip(&ws)
        .map(|(r, w)| (kernel.integrate_against(w) - r.matrix()).norm())
        .fold(0.0, f64::max);

    let mut covariance = Vec::new();
    if opts.covariance && !kernel.probes().is_empty() {
        let grid = kernel.grid();
        for probe in kernel.probes() {
            let mut residual: f64 = 0.0;
            for _ in 0..opts.samples {
                let g = (probe.sampler)(&mut rng);
                let picks: Vec<usize> = (0..opts.covariance_nodes.min(nodes))
                    .map(|_| rng.random_range(0..nodes))
                    .collect();
                let r = picks
                    .par_iter()
                    .map(|&k| {
                        let xi = &grid.nodes[k];
                        let lhs = kernel.eval(&(g.action)(xi)).expect("coordinates from the grid");
                        let rhs = conjugate(&g.unitary, &kernel.eval_node(k));
                        max_abs(&(lhs - rhs))
                    })
                    .reduce(|| 0.0, f64::max);
                residual = residual.max(r);
            }
            covariance.push(CovarianceResult {
                name: probe.name.clone(),
                gated: probe.gated,
                samples: opts.samples,
                residual,
                pass: residual < tol,
            });
        }
    }
    let covariance_pass = covariance.iter().filter(|c| c.gated).all(|c| c.pass);
    let hermiticity_pass = hermiticity < tol;
    let normalization_pass = normalization < tol;
    let trace_rule_pass = trace_rule < tol;
    let traciality_pass = traciality < tol;
    let pass = hermiticity_pass && normalization_pass && trace_rule_pass && traciality_pass;
    kernel.set_verified(pass);
    SWReport {
        kernel: kernel.name.clone(),
        dim,
        nodes,
        tolerance: tol,
        samples: opts.samples,
        seed: opts.seed,
        hermiticity,
        normalization,
        trace_rule,
        traciality,
        reconstruction,
        covariance,
        hermiticity_pass,
        normalization_pass,
        trace_rule_pass,
        traciality_pass,
        reconstruction_pass: reconstruction < tol,
        covariance_pass,
        pass,
    }
}
