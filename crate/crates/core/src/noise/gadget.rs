//! Ancilla gadget for weak entangling noise.
//!
//! Each nearest-neighbour link `k` of an `n`-qubit line gets a Bell pair
//! `(a_k, b_k)` of ancilla qubits. Qubit order in the extended register is
//! `0..n` (computational) followed by `a_0, b_0, a_1, b_1, ...`.
//!
//! The extended Kraus operator is `L_φ (I + i√2 Σ_k θ_k G_k) L_η` with
//! `G_k = H_{a_k} CNOT_{k→a_k} CNOT_{b_k→k+1}`. Post-selecting every pair on
//! `|++⟩` leaves `2^{-(n-1)/2} L_φ (I + i Σ_k θ_k CNOT_{k,k+1}) L_η`, which
//! agrees with the exact unitary to first order in the link angles.

use num_complex::Complex64;
use serde::Serialize;

use super::{Distribution, NoiseModel};
use crate::error::{Error, Result};
use crate::operator::{identity, kron, kron_all, partial_trace, trace_distance, ComplexMatrix, DensityMatrix, ONE, ZERO};

/// Gap constants `TD/θ²` above this are reported as outside the small-angle regime.
pub const SMALL_ANGLE_REGIME: f64 = 0.2;

fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

fn hadamard() -> ComplexMatrix {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    ComplexMatrix::from_row_slice(2, 2, &[s, s, s, -s])
}

fn rotation(gen: &ComplexMatrix, angle: f64) -> ComplexMatrix {
    // e^{-i angle P} for a Pauli P
    identity(2) * Complex64::new(angle.cos(), 0.0) - gen * Complex64::new(0.0, angle.sin())
}

fn on_qubit(op: &ComplexMatrix, q: usize, total: usize) -> ComplexMatrix {
    let id = identity(2);
    let mats: Vec<&ComplexMatrix> = (0..total).map(|i| if i == q { op } else { &id }).collect();
    kron_all(mats)
}

fn on_all(op: &ComplexMatrix, n: usize) -> ComplexMatrix {
    kron_all(std::iter::repeat_n(op, n))
}

/// Permutation matrix of `CNOT_{c→t}` on `total` qubits (qubit 0 most significant).
fn cnot(c: usize, t: usize, total: usize) -> ComplexMatrix {
    let dim = 1usize << total;
    let bit = |q: usize| 1usize << (total - 1 - q);
    let mut m = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        let j = if i & bit(c) != 0 { i ^ bit(t) } else { i };
        m[(j, i)] = ONE;
    }
    m
}

fn bell_pair() -> ComplexMatrix {
    let h = Complex64::new(0.5, 0.0);
    let mut m = ComplexMatrix::zeros(4, 4);
    for (r, c) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        m[(r, c)] = h;
    }
    m
}

fn plus_plus() -> ComplexMatrix {
    ComplexMatrix::from_element(4, 4, Complex64::new(0.25, 0.0))
}

fn qubit_count(dim: usize) -> Result<usize> {
    if dim < 4 || !dim.is_power_of_two() {
        return Err(Error::InvalidDimension(format!(
            "the gadget needs at least two qubits, got dimension {dim}"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// A computational state and observable embedded with `n - 1` Bell pairs.
#[derive(Debug, Clone)]
pub struct GadgetState {
    pub n: usize,
    /// `ρ ⊗ |Φ⁺⟩⟨Φ⁺|^{⊗(n-1)}`, possibly after noise.
    pub rho: ComplexMatrix,
    /// `O ⊗ |++⟩⟨++|^{⊗(n-1)}`.
    pub obs: ComplexMatrix,
}

impl GadgetState {
    pub fn total_qubits(&self) -> usize {
        3 * self.n - 2
    }

    /// `I ⊗ |++⟩⟨++|^{⊗(n-1)}`.
    pub fn post_selection(&self) -> ComplexMatrix {
        let pp = plus_plus();
        let mut m = identity(1 << self.n);
        for _ in 1..self.n {
            m = kron(&m, &pp);
        }
        m
    }

    /// Probability of the `|++⟩` outcome on every pair.
    pub fn success_weight(&self) -> f64 {
        crate::operator::trace_product(&self.post_selection(), &self.rho).re
    }

    /// Post-selected, renormalized computational state.
    pub fn effective_state(&self) -> Result<DensityMatrix> {
        let p = self.post_selection();
        let projected = &p * &self.rho * &p;
        let w = projected.trace().re;
        if w <= 1e-14 {
            return Err(Error::Domain("post-selection has zero weight".into()));
        }
        let dims = vec![2; self.total_qubits()];
        let keep: Vec<usize> = (0..self.n).collect();
        let reduced = partial_trace(&projected, &dims, &keep) / Complex64::new(w, 0.0);
        Ok(DensityMatrix::from_channel_output(reduced))
    }
}

/// Embeds `ρ` and `O` into the extended register.
pub fn gadget_extend(rho: &DensityMatrix, obs: &ComplexMatrix) -> Result<GadgetState> {
    let n = qubit_count(rho.dim())?;
    if obs.nrows() != rho.dim() || obs.ncols() != rho.dim() {
        return Err(Error::InvalidInput("observable and state dimensions differ".into()));
    }
    let (bell, pp) = (bell_pair(), plus_plus());
    let mut r = rho.matrix().clone();
    let mut o = obs.clone();
    for _ in 1..n {
        r = kron(&r, &bell);
        o = kron(&o, &pp);
    }
    Ok(GadgetState { n, rho: r, obs: o })
}

/// `Tr[O'ρ'] / Tr[(I⊗Π)ρ']`.
pub fn gadget_expectation(g: &GadgetState) -> Result<f64> {
    let w = g.success_weight();
    if w <= 1e-14 {
        return Err(Error::Domain("post-selection has zero weight".into()));
    }
    Ok(crate::operator::trace_product(&g.obs, &g.rho).re / w)
}

struct Weak<'a> {
    n: usize,
    links: &'a [Distribution],
    eta: &'a Distribution,
    phi: &'a Distribution,
}

fn weak_parts(model: &NoiseModel) -> Result<Weak<'_>> {
    model.validate()?;
    match model {
        NoiseModel::WeakEntangling { n, links, eta, phi } => Ok(Weak { n: *n, links, eta, phi }),
        other => Err(Error::UnsupportedNoise(format!(
            "{} is not weak entangling noise",
            other.kind_name()
        ))),
    }
}

/// Joint quadrature over `(η, φ, θ_1, ...)`: angle lists with product weights.
fn joint_nodes(w: &Weak) -> Vec<(f64, f64, Vec<f64>, f64)> {
    let mut out = vec![(0.0, 0.0, Vec::new(), 1.0)];
    let mut expand = |dist: &Distribution, slot: usize| {
        let mut next = Vec::with_capacity(out.len() * dist.len());
        for (e, p, t, wt) in &out {
            for (x, wx) in dist.nodes.iter().zip(&dist.weights) {
                if *wx == 0.0 {
                    continue;
                }
                let (mut e2, mut p2, mut t2) = (*e, *p, t.clone());
                match slot {
                    0 => e2 = *x,
                    1 => p2 = *x,
                    _ => t2.push(*x),
                }
                next.push((e2, p2, t2, wt * wx));
            }
        }
        out = next;
    };
    expand(w.eta, 0);
    expand(w.phi, 1);
    for l in w.links {
        expand(l, 2);
    }
    out
}

/// `L_φ Π_k e^{iθ_k CNOT_{k,k+1}} L_η` on `n` qubits.
pub fn exact_weak_entangling_unitary(n: usize, eta: f64, phi: f64, thetas: &[f64]) -> ComplexMatrix {
    let l_eta = on_all(&rotation(&pauli_z(), eta), n);
    let l_phi = on_all(&rotation(&pauli_x(), phi), n);
    let mut u = l_eta;
    for (k, t) in thetas.iter().enumerate() {
        // CNOT² = I, so e^{iθC} = cos θ + i sin θ C
        let e = identity(1 << n) * Complex64::new(t.cos(), 0.0) + cnot(k, k + 1, n) * Complex64::new(0.0, t.sin());
        u = e * u;
    }
    l_phi * u
}

pub(crate) fn weak_entangling_unitaries(model: &NoiseModel) -> Result<Vec<(ComplexMatrix, f64)>> {
    let w = weak_parts(model)?;
    Ok(joint_nodes(&w)
        .into_iter()
        .map(|(e, p, t, wt)| (exact_weak_entangling_unitary(w.n, e, p, &t), wt))
        .collect())
}

fn extended_kraus(n: usize, eta: f64, phi: f64, thetas: &[f64]) -> ComplexMatrix {
    let total = 3 * n - 2;
    let anc = 1usize << (total - n);
    let l_eta = kron(&on_all(&rotation(&pauli_z(), eta), n), &identity(anc));
    let l_phi = kron(&on_all(&rotation(&pauli_x(), phi), n), &identity(anc));
    let mut mid = identity(1 << total);
    let s2 = std::f64::consts::SQRT_2;
    for (k, t) in thetas.iter().enumerate() {
        if *t == 0.0 {
            continue;
        }
        let (a, b) = (n + 2 * k, n + 2 * k + 1);
        let g = on_qubit(&hadamard(), a, total) * cnot(k, a, total) * cnot(b, k + 1, total);
        mid += g * Complex64::new(0.0, s2 * t);
    }
    l_phi * mid * l_eta
}

/// Applies the extended Kraus mixture to a gadget state; the result is
/// renormalized to unit trace.
pub fn weak_entangling_channel(g: &GadgetState, model: &NoiseModel) -> Result<GadgetState> {
    let w = weak_parts(model)?;
    if w.n != g.n {
        return Err(Error::InvalidInput(format!(
            "model acts on {} qubits, gadget holds {}",
            w.n, g.n
        )));
    }
    let dim = g.rho.nrows();
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for (e, p, t, wt) in joint_nodes(&w) {
        let k = extended_kraus(w.n, e, p, &t);
        acc += &k * &g.rho * k.adjoint() * Complex64::new(wt, 0.0);
    }
    let tr = acc.trace().re;
    acc /= Complex64::new(tr, 0.0);
    Ok(GadgetState {
        n: g.n,
        rho: (&acc + acc.adjoint()) * Complex64::new(0.5, 0.0),
        obs: g.obs.clone(),
    })
}

/// Gadget versus exact weak entangling noise on one input state.
#[derive(Debug, Clone, Serialize)]
pub struct WeakEntanglingReport {
    pub n: usize,
    pub theta_max: f64,
    pub success_weight: f64,
    pub trace_distance: f64,
    /// `trace_distance / theta_max²`.
    pub gap_constant: f64,
    pub regime_warning: bool,
}

pub fn weak_entangling_report(rho: &DensityMatrix, model: &NoiseModel) -> Result<WeakEntanglingReport> {
    let w = weak_parts(model)?;
    let g = gadget_extend(rho, &identity(rho.dim()))?;
    if g.n != w.n {
        return Err(Error::InvalidInput(format!(
            "model acts on {} qubits, state holds {}",
            w.n, g.n
        )));
    }
    let noisy = weak_entangling_channel(&g, model)?;
    let eff = noisy.effective_state()?;
    let exact = super::apply_channel(rho, model)?;
    let theta_max = w.links.iter().map(|d| d.max_abs()).fold(0.0, f64::max);
    let td = trace_distance(eff.matrix(), exact.matrix());
    let gap_constant = if theta_max > 0.0 { td / (theta_max * theta_max) } else { 0.0 };
    Ok(WeakEntanglingReport {
        n: w.n,
        theta_max,
        success_weight: noisy.success_weight(),
        trace_distance: td,
        gap_constant,
        regime_warning: gap_constant > SMALL_ANGLE_REGIME,
    })
}

/// Deterministic gate teleportation of `CNOT_{k→k+1}` through one Bell pair:
/// CNOT onto `a`, Z-measure `a` (fix with `X_b`), CNOT from `b`, X-measure `b`
/// (fix with `Z_k`), discard the pair. All branches are summed.
pub fn teleported_cnot(rho: &DensityMatrix, k: usize) -> Result<DensityMatrix> {
    let n = qubit_count(rho.dim())?;
    if k + 1 >= n {
        return Err(Error::InvalidInput(format!("no link {k} on {n} qubits")));
    }
    let total = n + 2;
    let (a, b) = (n, n + 1);
    let mut r = kron(rho.matrix(), &bell_pair());
    let u1 = cnot(k, a, total);
    r = &u1 * r * u1.adjoint();

    let p0 = ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
    let p1 = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE]);
    let xb = on_qubit(&pauli_x(), b, total);
    let (m0, m1) = (on_qubit(&p0, a, total), on_qubit(&p1, a, total));
    let fix1 = &xb * &m1;
    r = &m0 * &r * &m0 + &fix1 * &r * fix1.adjoint();

    let u3 = cnot(b, k + 1, total);
    r = &u3 * r * u3.adjoint();

    let h = Complex64::new(0.5, 0.0);
    let plus = ComplexMatrix::from_element(2, 2, h);
    let minus = ComplexMatrix::from_row_slice(2, 2, &[h, -h, -h, h]);
    let (q0, q1) = (on_qubit(&plus, b, total), on_qubit(&minus, b, total));
    let fix2 = on_qubit(&pauli_z(), k, total) * &q1;
    r = &q0 * &r * &q0 + &fix2 * &r * fix2.adjoint();

    let keep: Vec<usize> = (0..n).collect();
    Ok(DensityMatrix::from_channel_output(partial_trace(&r, &vec![2; total], &keep)))
}

/// `CNOT_{k→k+1}` on `n` qubits.
pub fn cnot_gate(n: usize, k: usize) -> ComplexMatrix {
    cnot(k, k + 1, n)
}
