//! Phase-space kernels `Δ(ξ) = C·I + Σ_i s_{class(i)} F_i(ξ) O_i`.
//!
//! Basis operators `O_i` are traceless, Hermitian and normalized to
//! `Tr[O_i O_j] = 2δ_ij`. The functions `F_i` are stored unscaled at the
//! quadrature nodes; the constant `C` and the per-class scales `s` are solved
//! when the kernel is assembled (see [`build`]). With `r_i = Tr[ρ O_i]` the
//! Wigner function is `W(ξ) = C + Σ_i s_i r_i F_i(ξ)`.

pub mod build;
pub mod convolution;
pub mod effective;
pub mod verify;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coherent::CoefficientTable;
use crate::error::{Error, Result};
use crate::harmonics::EvalFn;
use crate::operator::{identity, ComplexMatrix, DensityMatrix, HermitianBasis};
use crate::quadrature::CoordGrid;

pub use build::{
    brif_mann_kernel, build_general_kernel, displaced_parity_kernel, parity_normalization,
    tensor_product_kernel,
};
pub use convolution::{channel_as_convolution, ConvolutionCheck};
pub use effective::{
    dephasing_kernel, effective_kernel_indices, exchange_kernel, exchange_operator_basis,
    exchange_table, transition_overlaps, zz_kernel, zz_operators, EffectiveIndices, ExchangeOpKind, ExchangeOperators,
    TransitionOverlap, ZzOperators,
};
pub use verify::{verify_sw, CovarianceResult, SWReport, VerifyOptions};

/// Unscaled `F_i` sampled at the quadrature nodes.
#[derive(Debug, Clone)]
pub enum Field {
    /// `values[i][node]`.
    Dense { grid: CoordGrid, values: Vec<Vec<f64>> },
    /// `F_i(x, η) = g[i][a] · r[i][b]` on the product of a noise grid (node `a`)
    /// and a residual grid (node `b`); flat node index `a · n_res + b`.
    Separable {
        noise: CoordGrid,
        residual: CoordGrid,
        g: Vec<Vec<f64>>,
        r: Vec<Vec<f64>>,
    },
}

fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

impl Field {
    pub fn n_ops(&self) -> usize {
        match self {
            Field::Dense { values, .. } => values.len(),
            Field::Separable { g, .. } => g.len(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Field::Dense { grid, .. } => grid.len(),
            Field::Separable { noise, residual, .. } => noise.len() * residual.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coord_names(&self) -> Vec<String> {
        match self {
            Field::Dense { grid, .. } => grid.names.clone(),
            Field::Separable { noise, residual, .. } => {
                noise.names.iter().chain(&residual.names).cloned().collect()
            }
        }
    }

    /// The full product grid (built on demand for separable fields).
    pub fn grid(&self) -> CoordGrid {
        match self {
            Field::Dense { grid, .. } => grid.clone(),
            Field::Separable { noise, residual, .. } => noise.product(residual),
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        match self {
            Field::Dense { grid, .. } => grid.weights.clone(),
            Field::Separable { noise, residual, .. } => noise
                .weights
                .iter()
                .flat_map(|a| residual.weights.iter().map(move |b| a * b))
                .collect(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Field::Dense { grid, .. } => grid.total_mass(),
            Field::Separable { noise, residual, .. } => noise.total_mass() * residual.total_mass(),
        }
    }

    /// Rescales the measure to total mass `target`.
    pub fn with_mass(self, target: f64) -> Self {
        match self {
            Field::Dense { grid, values } => Field::Dense {
                grid: grid.scaled_to(target),
                values,
            },
            Field::Separable { noise, residual, g, r } => {
                let m = target / noise.total_mass();
                Field::Separable {
                    residual: residual.scaled_to(m),
                    noise,
                    g,
                    r,
                }
            }
        }
    }

    pub fn value(&self, op: usize, node: usize) -> f64 {
        match self {
            Field::Dense { values, .. } => values[op][node],
            Field::Separable { residual, g, r, .. } => {
                let n = residual.len();
                g[op][node / n] * r[op][node % n]
            }
        }
    }

    /// `∫ F_i`.
    pub fn integrals(&self) -> Vec<f64> {
        match self {
            Field::Dense { grid, values } => values.iter().map(|v| grid.integrate(v)).collect(),
            Field::Separable { noise, residual, g, r } => g
                .iter()
                .zip(r)
                .map(|(gi, ri)| noise.integrate(gi) * residual.integrate(ri))
                .collect(),
        }
    }

    /// `G_ij = ∫ F_i F_j`.
    pub fn gram(&self) -> DMatrix<f64> {
        let n = self.n_ops();
        let entries: Vec<f64> = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (a, b) = (idx / n, idx % n);
                if b < a {
                    return f64::NAN;
                }
                match self {
                    Field::Dense { grid, values } => wdot(&grid.weights, &values[a], &values[b]),
                    Field::Separable { noise, residual, g, r } => {
                        wdot(&noise.weights, &g[a], &g[b]) * wdot(&residual.weights, &r[a], &r[b])
                    }
                }
            })
            .collect();
        let mut m = DMatrix::from_row_slice(n, n, &entries);
        for a in 0..n {
            for b in 0..a {
                m[(a, b)] = m[(b, a)];
            }
        }
        m
    }

    /// `Σ_i c_i F_i` at every node.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        match self {
            Field::Dense { grid, values } => {
                let mut out = vec![0.0; grid.len()];
                for (c, v) in coeffs.iter().zip(values) {
                    if *c != 0.0 {
                        out.iter_mut().zip(v).for_each(|(o, x)| *o += c * x);
                    }
                }
                out
            }
            Field::Separable { noise, residual, g, r } => {
                let nr = residual.len();
                let mut out = vec![0.0; noise.len() * nr];
                out.par_chunks_mut(nr).enumerate().for_each(|(a, chunk)| {
                    for ((c, gi), ri) in coeffs.iter().zip(g).zip(r) {
                        let ca = c * gi[a];
                        if ca != 0.0 {
                            chunk.iter_mut().zip(ri).for_each(|(o, x)| *o += ca * x);
                        }
                    }
                });
                out
            }
        }
    }

    /// `∫ h F_i` for node values `h`.
    pub fn moments(&self, h: &[f64]) -> Vec<f64> {
        match self {
            Field::Dense { grid, values } => values
                .par_iter()
                .map(|v| wdot(&grid.weights, v, h))
                .collect(),
            Field::Separable { noise, residual, g, r } => {
                let nr = residual.len();
                g.par_iter()
                    .zip(r)
                    .map(|(gi, ri)| {
                        noise
                            .weights
                            .iter()
                            .enumerate()
                            .map(|(a, wa)| wa * gi[a] * wdot(&residual.weights, ri, &h[a * nr..(a + 1) * nr]))
                            .sum()
                    })
                    .collect()
            }
        }
    }
}

/// A group element for covariance probing: `Δ(action(ξ)) = U Δ(ξ) U†`.
pub struct GroupElement {
    pub unitary: ComplexMatrix,
    pub action: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

pub type ProbeSampler = Arc<dyn Fn(&mut ChaCha8Rng) -> GroupElement + Send + Sync>;

/// A family of transformations under which the kernel is expected to be covariant.
/// Probes with `gated = false` are reported without affecting the covariance flag.
#[derive(Clone)]
pub struct CovarianceProbe {
    pub name: String,
    pub gated: bool,
    pub sampler: ProbeSampler,
}

/// Noise that acts as a shift of one kernel coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftKind {
    /// `e^{-iθσz}` shifts the first coordinate by `θ`.
    Dephasing,
    /// `e^{-iθ Z⊗Z}` shifts the first coordinate by `θ`.
    Zz,
}

/// A verified (or not yet verified) kernel. Immutable apart from the
/// verification flag, which `verify_sw` sets.
pub struct Kernel {
    pub name: String,
    pub descriptor: String,
    ops: Arc<HermitianBasis>,
    class_of: Vec<usize>,
    class_names: Vec<String>,
    class_scales: Vec<f64>,
    c_delta: f64,
    field: Arc<Field>,
    eval_fn: EvalFn,
    table: Option<Arc<CoefficientTable>>,
    pub(crate) probes: Vec<CovarianceProbe>,
    pub(crate) shift: Option<ShiftKind>,
    pub(crate) info: BTreeMap<String, serde_json::Value>,
    verified: AtomicBool,
}

impl Clone for Kernel {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            descriptor: self.descriptor.clone(),
            ops: self.ops.clone(),
            class_of: self.class_of.clone(),
            class_names: self.class_names.clone(),
            class_scales: self.class_scales.clone(),
            c_delta: self.c_delta,
            field: self.field.clone(),
            eval_fn: self.eval_fn.clone(),
            table: self.table.clone(),
            probes: self.probes.clone(),
            shift: self.shift,
            info: self.info.clone(),
            verified: AtomicBool::new(self.verified.load(Ordering::Relaxed)),
        }
    }
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("coords", &self.coord_names())
            .field("nodes", &self.field.len())
            .field("c_delta", &self.c_delta)
            .field("class_scales", &self.class_scales)
            .finish()
    }
}

impl Kernel {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        name: &str,
        descriptor: &str,
        ops: HermitianBasis,
        classes: &[Vec<usize>],
        class_names: Vec<String>,
        class_scales: Vec<f64>,
        c_delta: f64,
        field: Field,
        eval_fn: EvalFn,
        table: Option<CoefficientTable>,
    ) -> Self {
        let mut class_of = vec![0; ops.len()];
        for (c, members) in classes.iter().enumerate() {
            for &i in members {
                class_of[i] = c;
            }
        }
        Self {
            name: name.to_string(),
            descriptor: descriptor.to_string(),
            ops: Arc::new(ops),
            class_of,
            class_names,
            class_scales,
            c_delta,
            field: Arc::new(field),
            eval_fn,
            table: table.map(Arc::new),
            probes: Vec::new(),
            shift: None,
            info: BTreeMap::new(),
            verified: AtomicBool::new(false),
        }
    }

    pub fn dim(&self) -> usize {
        self.ops.dim()
    }

    pub fn ops(&self) -> &HermitianBasis {
        &self.ops
    }

    pub fn coord_names(&self) -> Vec<String> {
        self.field.coord_names()
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn grid(&self) -> CoordGrid {
        self.field.grid()
    }

    pub fn node_count(&self) -> usize {
        self.field.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.field.total_mass()
    }

    pub fn c_delta(&self) -> f64 {
        self.c_delta
    }

    pub fn class_scales(&self) -> &[f64] {
        &self.class_scales
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_of(&self, op: usize) -> usize {
        self.class_of[op]
    }

    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.class_scales.len()];
        for (i, c) in self.class_of.iter().enumerate() {
            out[*c].push(i);
        }
        out
    }

    /// Scale factor of every basis operator.
    pub fn op_scales(&self) -> Vec<f64> {
        self.class_of.iter().map(|c| self.class_scales[*c]).collect()
    }

    pub fn table(&self) -> Option<&CoefficientTable> {
        self.table.as_deref()
    }

    pub fn info(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.info
    }

    pub fn probes(&self) -> &[CovarianceProbe] {
        &self.probes
    }

    pub fn shift(&self) -> Option<ShiftKind> {
        self.shift
    }

    pub fn is_verified(&self) -> bool {
        self.verified.load(Ordering::Relaxed)
    }

    pub(crate) fn set_verified(&self, v: bool) {
        self.verified.store(v, Ordering::Relaxed)
    }

    /// A copy with different constants; the copy is unverified.
    pub fn with_constants(&self, c_delta: f64, class_scales: Vec<f64>) -> Result<Kernel> {
        if class_scales.len() != self.class_scales.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} class scales, got {}",
                self.class_scales.len(),
                class_scales.len()
            )));
        }
        let k = Kernel {
            c_delta,
            class_scales,
            ..self.clone()
        };
        k.set_verified(false);
        Ok(k)
    }

    /// Unscaled `F_i(ξ)` at arbitrary coordinates.
    pub fn functions_at(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let n = self.field.coord_names().len();
        if xi.len() != n {
            return Err(Error::InvalidCoordinates {
                expected: n,
                got: xi.len(),
            });
        }
        Ok((self.eval_fn)(xi))
    }

    fn assemble(&self, f: &[f64]) -> ComplexMatrix {
        let mut m = identity(self.dim()) * Complex64::new(self.c_delta, 0.0);
        for (i, fi) in f.iter().enumerate() {
            let c = self.class_scales[self.class_of[i]] * fi;
            if c != 0.0 {
                m += self.ops.element(i) * Complex64::new(c, 0.0);
            }
        }
        m
    }

    /// `Δ(ξ)`.
    pub fn eval(&self, xi: &[f64]) -> Result<ComplexMatrix> {
        Ok(self.assemble(&self.functions_at(xi)?))
    }

    /// `Δ` at quadrature node `k`.
    pub fn eval_node(&self, k: usize) -> ComplexMatrix {
        let f: Vec<f64> = (0..self.ops.len()).map(|i| self.field.value(i, k)).collect();
        self.assemble(&f)
    }

    /// `r_i = Tr[ρ O_i]`.
    pub(crate) fn op_expectations(&self, rho: &ComplexMatrix) -> Result<Vec<f64>> {
        if rho.nrows() != self.dim() || rho.ncols() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "state of dimension {} does not match kernel dimension {}",
                rho.nrows(),
                self.dim()
            )));
        }
        Ok(self
            .ops
            .elements()
            .iter()
            .map(|o| crate::operator::trace_product(rho, o).re)
            .collect())
    }

    /// `W` at every node for an arbitrary (not necessarily physical) matrix.
    pub(crate) fn wigner_values(&self, rho: &ComplexMatrix) -> Result<Vec<f64>> {
        let r = self.op_expectations(rho)?;
        let tr = rho.trace().re;
        let coeffs: Vec<f64> = r.iter().zip(self.op_scales()).map(|(ri, s)| ri * s).collect();
        let mut w = self.field.combine(&coeffs);
        let c = self.c_delta * tr;
        w.iter_mut().for_each(|x| *x += c);
        Ok(w)
    }

    /// `W_ρ(ξ)` at arbitrary coordinates.
    pub fn wigner_at(&self, rho: &DensityMatrix, xi: &[f64]) -> Result<f64> {
        let r = self.op_expectations(rho.matrix())?;
        let f = self.functions_at(xi)?;
        let s = self.op_scales();
        Ok(self.c_delta + r.iter().zip(&f).zip(&s).map(|((a, b), c)| a * b * c).sum::<f64>())
    }

    /// `∫ h Δ` for node values `h`.
    pub(crate) fn integrate_against(&self, h: &[f64]) -> ComplexMatrix {
        let total: f64 = self.field.weights().iter().zip(h).map(|(w, x)| w * x).sum();
        let mom = self.field.moments(h);
        let coeffs: Vec<f64> = mom.iter().zip(self.op_scales()).map(|(m, s)| m * s).collect();
        self.ops.reconstruct(self.c_delta * total, &coeffs)
    }
}

/// Wigner function values over a kernel's quadrature nodes.
#[derive(Debug, Clone)]
pub struct WignerFunction<'a> {
    pub kernel: &'a Kernel,
    pub values: Vec<f64>,
}

impl WignerFunction<'_> {
    /// Quadrature sum `∫ W dξ`.
    pub fn integral(&self) -> f64 {
        self.kernel
            .field
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, x)| w * x)
            .sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `W_ρ(ξ) = Tr[ρ Δ(ξ)]` at every node.
pub fn wigner<'a>(rho: &DensityMatrix, kernel: &'a Kernel) -> Result<WignerFunction<'a>> {
    Ok(WignerFunction {
        kernel,
        values: kernel.wigner_values(rho.matrix())?,
    })
}

/// `ρ = ∫ W(ξ) Δ(ξ) dξ`. Refused unless the kernel has passed `verify_sw`.
pub fn reconstruct(w: &WignerFunction<'_>) -> Result<DensityMatrix> {
    if !w.kernel.is_verified() {
        return Err(Error::Unverified);
    }
    if w.values.len() != w.kernel.node_count() {
        return Err(Error::InvalidInput(format!(
            "{} values for a kernel with {} nodes",
            w.values.len(),
            w.kernel.node_count()
        )));
    }
    let m = w.kernel.integrate_against(&w.values);
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(DensityMatrix::from_channel_output(m))
}
