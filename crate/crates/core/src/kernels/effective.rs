//! Noise-restricted (effective) kernels.
//!
//! Coordinates split into noise coordinates, along which the noise acts as a
//! shift, and one residual circle coordinate `η` with uniform measure. Every
//! operator class gets its own residual function, `sin(ω η)` or `cos(k η)`,
//! which keeps different classes orthogonal; within a class the noise-coordinate
//! functions `g_i = ½⟨ξ|O_i|ξ⟩` have to be orthogonal themselves. Operators that
//! commute with the whole noise family use `g_i = 1`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::build::{assemble, Assembly};
use super::{CovarianceProbe, Field, GroupElement, Kernel, ShiftKind};
use crate::coherent::{
    dephasing_family, exchange_family, exchange_phase_points, exchange_theta_rule, zz_family, CoefficientTable,
    CoherentFamily, ExchangeLayout, EXCHANGE_THETA_NODES,
};
use crate::error::{Error, Result};
use crate::harmonics::{EvalFn, FunctionBasis, ModeKey, Orthonormalizer};
use crate::operator::{
    expectation, gellmann_basis, identity, BasisLabel, ComplexMatrix, HermitianBasis, StateVector, ONE, ZERO,
};
use crate::quadrature::{periodic_trapezoid, CoordGrid};

/// Trapezoid points on the noise circle of the dephasing and ZZ kernels.
pub const CIRCLE_POINTS: usize = 16;

/// Residual-coordinate labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Residual {
    Sin(usize),
    Cos(usize),
}

impl Residual {
    fn eval(self, eta: f64) -> f64 {
        match self {
            Residual::Sin(w) => (w as f64 * eta).sin(),
            Residual::Cos(k) => (k as f64 * eta).cos(),
        }
    }

    fn frequency(self) -> usize {
        match self {
            Residual::Sin(w) | Residual::Cos(w) => w,
        }
    }
}

impl std::fmt::Display for Residual {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Residual::Sin(w) => write!(f, "sin({w}η)"),
            Residual::Cos(k) => write!(f, "cos({k}η)"),
        }
    }
}

struct EffClass {
    members: Vec<usize>,
    name: String,
    residual: Residual,
}

/// Index map for residual frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffectiveIndices {
    /// `ω_{k,j}` for invariant operator `j` (1-based) of block `k`.
    pub omega: BTreeMap<(usize, usize), usize>,
    /// `Ω` for each transition `(k, l, k', l')`.
    pub big_omega: BTreeMap<(usize, usize, usize, usize), usize>,
    /// `Σ_k (dim B_k² − 1)`.
    pub offset: usize,
}

impl EffectiveIndices {
    pub fn all(&self) -> Vec<usize> {
        self.omega.values().chain(self.big_omega.values()).copied().collect()
    }
}

/// `ω_{k,j}` is the 1-based lexicographic position of `(k, j)`; `Ω` continues
/// after the last `ω` in lexicographic order of the transitions.
pub fn effective_kernel_indices(
    block_dims_b: &[usize],
    transitions: &[(usize, usize, usize, usize)],
) -> EffectiveIndices {
    let mut omega = BTreeMap::new();
    let mut next = 1;
    for (k, d) in block_dims_b.iter().enumerate() {
        for j in 1..d * d {
            omega.insert((k, j), next);
            next += 1;
        }
    }
    let offset = next - 1;
    let mut sorted = transitions.to_vec();
    sorted.sort();
    sorted.dedup();
    let big_omega = sorted
        .into_iter()
        .enumerate()
        .map(|(pos, t)| (t, offset + pos + 1))
        .collect();
    EffectiveIndices { omega, big_omega, offset }
}

fn ones_like(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

/// Builds a separable kernel. `g_direct[i]` holds `½⟨ξ|O_i|ξ⟩` at the noise nodes.
#[allow(clippy::too_many_arguments)]
fn separable_kernel(
    name: &str,
    descriptor: &str,
    ops: HermitianBasis,
    basis: &FunctionBasis,
    g_direct: &[Vec<f64>],
    invariant: &[bool],
    classes: Vec<EffClass>,
) -> Result<Kernel> {
    let nodes = basis.grid().len();
    let samples: Vec<Vec<f64>> = g_direct
        .iter()
        .zip(invariant)
        .map(|(g, inv)| if *inv { ones_like(nodes) } else { g.clone() })
        .collect();
    let rows: Vec<Vec<f64>> = samples.iter().map(|s| basis.coefficients(s)).collect();
    for (i, (row, s)) in rows.iter().zip(&samples).enumerate() {
        let back = basis.synthesize(row);
        let err = back.iter().zip(s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if err > 1e-9 {
            return Err(Error::DegenerateGrid(format!(
                "noise-coordinate functions do not resolve operator {} (synthesis error {err:.2e})",
                ops.labels()[i]
            )));
        }
    }
    let labels: Vec<String> = ops.labels().iter().map(|l| l.to_string()).collect();
    let table = CoefficientTable::new(
        basis.keys().to_vec(),
        labels,
        rows.clone(),
        classes.iter().map(|c| c.members.clone()).collect(),
    )?;
    let mut residual_of = vec![Residual::Cos(0); ops.len()];
    for c in &classes {
        for &i in &c.members {
            residual_of[i] = c.residual;
        }
    }
    let max_f = classes.iter().map(|c| c.residual.frequency()).max().unwrap_or(1);
    let eta = CoordGrid::from_rule("eta", &periodic_trapezoid(2 * max_f + 3, 0.0));
    let g: Vec<Vec<f64>> = rows.iter().map(|r| basis.synthesize(r)).collect();
    let r: Vec<Vec<f64>> = residual_of
        .iter()
        .map(|res| eta.nodes.iter().map(|x| res.eval(x[0])).collect())
        .collect();
    let split = basis.grid().ncoords();
    let eval = basis.eval_fn();
    let eval_rows = rows;
    let eval_res = residual_of.clone();
    let eval_fn: EvalFn = Arc::new(move |xi: &[f64]| {
        let y = eval(&xi[..split]);
        let e = xi[split];
        eval_rows
            .iter()
            .zip(&eval_res)
            .map(|(row, res)| row.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() * res.eval(e))
            .collect()
    });
    let field = Field::Separable {
        noise: basis.grid().clone(),
        residual: eta,
        g,
        r,
    };
    let mut k = assemble(Assembly {
        name: name.into(),
        descriptor: descriptor.into(),
        ops,
        classes: classes.iter().map(|c| c.members.clone()).collect(),
        class_names: classes.iter().map(|c| c.name.clone()).collect(),
        field,
        eval_fn,
        table: Some(table),
        allow_incomplete: false,
    })?;
    let residuals: BTreeMap<String, String> = classes
        .iter()
        .map(|c| (c.name.clone(), c.residual.to_string()))
        .collect();
    k.info.insert("residuals".into(), serde_json::to_value(residuals)?);
    Ok(k)
}

fn g_values(family: &CoherentFamily, ops: &HermitianBasis) -> Vec<Vec<f64>> {
    let states = family.states();
    ops.elements()
        .iter()
        .map(|o| states.iter().map(|v| 0.5 * expectation(v, o)).collect())
        .collect()
}

fn diag_unitary(phases: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&StateVector::from_iterator(
        phases.len(),
        phases.iter().map(|p| Complex64::from_polar(1.0, *p)),
    ))
}

fn shift_probe(name: &str, phases: Vec<f64>) -> CovarianceProbe {
    // U = diag(e^{i α p_k}) maps the noise coordinate θ to θ + α
    CovarianceProbe {
        name: name.into(),
        gated: true,
        sampler: Arc::new(move |rng: &mut ChaCha8Rng| {
            let alpha = rng.random_range(0.0..2.0 * PI);
            let p: Vec<f64> = phases.iter().map(|x| x * alpha).collect();
            GroupElement {
                unitary: diag_unitary(&p),
                action: Box::new(move |xi: &[f64]| {
                    let mut out = xi.to_vec();
                    out[0] += alpha;
                    out
                }),
            }
        }),
    }
}

/// Qubit dephasing kernel over `(θ, η)`: `σz` carries `cos η`, the pair
/// `{σx, σy}` carries `sin 3η` with `g = ½(cos 2θ, sin 2θ)`.
pub fn dephasing_kernel() -> Result<Kernel> {
    let family = dephasing_family(CIRCLE_POINTS);
    let basis = FunctionBasis::circle("theta", 4, CIRCLE_POINTS);
    let ops = gellmann_basis(2)?;
    let g = g_values(&family, &ops);
    let classes = vec![
        EffClass {
            members: vec![0, 1],
            name: "c".into(),
            residual: Residual::Sin(3),
        },
        EffClass {
            members: vec![2],
            name: "d2".into(),
            residual: Residual::Cos(1),
        },
    ];
    let mut k = separable_kernel(
        "dephasing",
        "circle(theta) x circle(eta)",
        ops,
        &basis,
        &g,
        &[false, false, true],
        classes,
    )?;
    k.probes.push(shift_probe("dephasing", vec![-1.0, 1.0]));
    k.shift = Some(ShiftKind::Dephasing);
    Ok(k)
}

/// Operators of the ZZ kernel.
#[derive(Debug, Clone)]
pub struct ZzOperators {
    pub basis: HermitianBasis,
    /// `b_{k,j}` indices, `k` = parity block (0 even, 1 odd), `j = 1..3`.
    pub b: Vec<((usize, usize), usize)>,
    /// `(m, n, c1, c2)`: even state `m`, odd state `n`, indices of the pair.
    pub c: Vec<(usize, usize, usize, usize)>,
    pub d: usize,
}

fn basis_ket(dim: usize, i: usize) -> StateVector {
    let mut v = StateVector::from_element(dim, ZERO);
    v[i] = ONE;
    v
}

/// `b_{k,j}`: `Z⊗I`, `X⊗X`, `Y⊗X` restricted to the `Z⊗Z = ±1` subspaces;
/// `c⁽¹⁾ = |m⟩⟨n| + h.c.`, `c⁽²⁾ = i|m⟩⟨n| − i|n⟩⟨m|` between an even state `m`
/// and an odd state `n`, so that `e^{iθZ⊗Z} c⁽¹⁾ e^{-iθZ⊗Z} = cos 2θ c⁽¹⁾ + sin 2θ c⁽²⁾`;
/// `d₂ = Z⊗Z`.
pub fn zz_operators() -> Result<ZzOperators> {
    let x = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let y = ComplexMatrix::from_row_slice(2, 2, &[ZERO, -crate::operator::I, crate::operator::I, ZERO]);
    let z = ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    let i2 = identity(2);
    let kr = crate::operator::kron;
    let zz = kr(&z, &z);
    let mut elements = Vec::new();
    let mut labels = Vec::new();
    let mut b = Vec::new();
    for k in 0..2 {
        let sign = if k == 0 { 1.0 } else { -1.0 };
        let pa = (identity(4) + &zz * Complex64::new(sign, 0.0)) * Complex64::new(0.5, 0.0);
        for (j, op) in [kr(&z, &i2), kr(&x, &x), kr(&y, &x)].into_iter().enumerate() {
            b.push(((k, j + 1), elements.len()));
            elements.push(op * &pa);
            labels.push(BasisLabel::Named(format!("b{}{}", k, j + 1)));
        }
    }
    let mut c = Vec::new();
    for m in [0usize, 3] {
        for n in [1usize, 2] {
            let (em, en) = (basis_ket(4, m), basis_ket(4, n));
            let mn = &em * en.adjoint();
            let c1 = &mn + mn.adjoint();
            let c2 = (&mn - mn.adjoint()) * crate::operator::I;
            let i1 = elements.len();
            elements.push(c1);
            labels.push(BasisLabel::Named(format!("c1[{m},{n}]")));
            elements.push(c2);
            labels.push(BasisLabel::Named(format!("c2[{m},{n}]")));
            c.push((m, n, i1, i1 + 1));
        }
    }
    let d = elements.len();
    elements.push(zz);
    labels.push(BasisLabel::Named("d2".into()));
    Ok(ZzOperators {
        basis: HermitianBasis::from_elements(4, elements, labels)?,
        b,
        c,
        d,
    })
}

/// Two-qubit kernel for `e^{-iθ Z⊗Z}` noise over `(θ, η)`.
pub fn zz_kernel() -> Result<Kernel> {
    let zo = zz_operators()?;
    let family = zz_family(CIRCLE_POINTS);
    let basis = FunctionBasis::circle("theta", 4, CIRCLE_POINTS);
    let g = g_values(&family, &zo.basis);
    let transitions: Vec<(usize, usize, usize, usize)> = zo.c.iter().map(|(m, n, _, _)| (0, *m, 1, *n)).collect();
    let idx = effective_kernel_indices(&[2, 2], &transitions);
    let mut invariant = vec![false; zo.basis.len()];
    let mut classes = Vec::new();
    for ((k, j), i) in &zo.b {
        invariant[*i] = true;
        classes.push(EffClass {
            members: vec![*i],
            name: format!("b{k}{j}"),
            residual: Residual::Sin(idx.omega[&(*k, *j)]),
        });
    }
    for (t, (m, n, c1, c2)) in transitions.iter().zip(&zo.c) {
        classes.push(EffClass {
            members: vec![*c1, *c2],
            name: format!("c[{m},{n}]"),
            residual: Residual::Sin(idx.big_omega[t]),
        });
    }
    invariant[zo.d] = true;
    classes.push(EffClass {
        members: vec![zo.d],
        name: "d2".into(),
        residual: Residual::Cos(1),
    });
    let mut k = separable_kernel(
        "zz",
        "circle(theta) x circle(eta)",
        zo.basis,
        &basis,
        &g,
        &invariant,
        classes,
    )?;
    k.probes.push(shift_probe("zz", vec![-1.0, 1.0, 1.0, -1.0]));
    k.shift = Some(ShiftKind::Zz);
    Ok(k)
}

/// What an exchange basis operator is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExchangeOpKind {
    /// `|a⟩⟨b| + h.c.` for global indices `a < b`.
    X(usize, usize),
    /// `-i|a⟩⟨b| + i|b⟩⟨a|`.
    Y(usize, usize),
    /// Diagonal of rank `r` inside block `J`.
    BlockDiag(usize, usize),
    /// Block-level diagonal, commutes with every charge-conserving unitary.
    Charge(usize),
}

#[derive(Debug, Clone)]
pub struct ExchangeOperators {
    pub layout: ExchangeLayout,
    pub basis: HermitianBasis,
    pub kinds: Vec<ExchangeOpKind>,
}

impl ExchangeOperators {
    pub fn index_of(&self, kind: ExchangeOpKind) -> Option<usize> {
        self.kinds.iter().position(|k| *k == kind)
    }
}

/// Transition pairs, within-block diagonals and block-level diagonals.
pub fn exchange_operator_basis(d1: usize, d2: usize) -> Result<ExchangeOperators> {
    let layout = ExchangeLayout::new(d1, d2)?;
    let dim = layout.dim();
    let mut elements = Vec::new();
    let mut labels = Vec::new();
    let mut kinds = Vec::new();
    let mut pairs = Vec::new();
    for a in 0..dim {
        for b in a + 1..dim {
            pairs.push((a, b));
        }
    }
    for &(a, b) in &pairs {
        let ab = basis_ket(dim, a) * basis_ket(dim, b).adjoint();
        elements.push(&ab + ab.adjoint());
        labels.push(BasisLabel::Symmetric { row: a, col: b });
        kinds.push(ExchangeOpKind::X(a, b));
    }
    for &(a, b) in &pairs {
        let ab = basis_ket(dim, a) * basis_ket(dim, b).adjoint();
        elements.push((ab.adjoint() - &ab) * crate::operator::I);
        labels.push(BasisLabel::Antisymmetric { row: a, col: b });
        kinds.push(ExchangeOpKind::Y(a, b));
    }
    for blk in &layout.blocks {
        for r in 1..blk.dim() {
            let mut m = ComplexMatrix::zeros(dim, dim);
            for s in &blk.states[..r] {
                m[(*s, *s)] = ONE;
            }
            m[(blk.states[r], blk.states[r])] = Complex64::new(-(r as f64), 0.0);
            elements.push(m);
            labels.push(BasisLabel::Named(format!("J{}D{r}", blk.charge)));
            kinds.push(ExchangeOpKind::BlockDiag(blk.charge, r));
        }
    }
    // block projectors orthogonalized against I and each other
    let mut accepted: Vec<ComplexMatrix> = vec![identity(dim)];
    let hs = |a: &ComplexMatrix, b: &ComplexMatrix| crate::operator::trace_product(a, b).re;
    let mut k = 0;
    for blk in &layout.blocks {
        let mut p = ComplexMatrix::zeros(dim, dim);
        for s in &blk.states {
            p[(*s, *s)] = ONE;
        }
        for q in &accepted {
            let c = hs(&p, q) / hs(q, q);
            p -= q * Complex64::new(c, 0.0);
        }
        if hs(&p, &p) > 1e-10 && accepted.len() < layout.blocks.len() {
            k += 1;
            accepted.push(p.clone());
            elements.push(p);
            labels.push(BasisLabel::Named(format!("d{k}")));
            kinds.push(ExchangeOpKind::Charge(k));
        }
    }
    let dim = layout.dim();
    Ok(ExchangeOperators {
        layout,
        basis: HermitianBasis::from_elements(dim, elements, labels)?,
        kinds,
    })
}

/// Orthonormal functions on the exchange grid: circle harmonics in `φ1`
/// (up to `d1`) and `φ2` (up to `d2`) times an orthonormalized span of
/// `cos^a θ sin^b θ`, `a + b ≤ 2 D_max − 2`.
fn exchange_mode_basis(layout: &ExchangeLayout) -> Result<FunctionBasis> {
    let (d1, d2) = (layout.d1, layout.d2);
    let m = exchange_phase_points(d1, d2);
    let c1 = FunctionBasis::circle("phi1", d1, m);
    let c2 = FunctionBasis::circle("phi2", d2, m);
    let rule = exchange_theta_rule(EXCHANGE_THETA_NODES);
    let dmax = layout.blocks.iter().map(|b| b.dim()).max().unwrap_or(1);
    let deg = 2 * dmax - 2;
    let mut exps = Vec::new();
    for total in 0..=deg {
        for a in (0..=total).rev() {
            exps.push((a as i32, (total - a) as i32));
        }
    }
    let cand = |t: f64, (a, b): (i32, i32)| t.cos().powi(a) * t.sin().powi(b);
    let mut ortho = Orthonormalizer::new(&rule.weights, exps.len());
    for (i, e) in exps.iter().enumerate() {
        let samples: Vec<f64> = rule.nodes.iter().map(|t| cand(*t, *e)).collect();
        ortho.try_add(i, &samples, 1e-8);
    }
    let coefs = Arc::new(ortho.coefs.clone());
    let keys = (0..ortho.values.len()).map(|k| ModeKey::single(k, 1)).collect();
    let exps = Arc::new(exps);
    let eval: EvalFn = Arc::new(move |c: &[f64]| {
        let raw: Vec<f64> = exps.iter().map(|e| cand(c[0], *e)).collect();
        coefs
            .iter()
            .map(|cf| cf.iter().zip(&raw).map(|(a, b)| a * b).sum())
            .collect()
    });
    let theta = FunctionBasis::new(CoordGrid::from_rule("theta", &rule), keys, ortho.values, eval);
    Ok(FunctionBasis::product(&FunctionBasis::product(&c1, &c2), &theta))
}

/// Coefficients of `½⟨ξ|O_i|ξ⟩` over the exchange mode basis for all basis
/// operators, validated against caller-declared classes.
pub fn exchange_table(d1: usize, d2: usize, classes: Vec<Vec<usize>>) -> Result<CoefficientTable> {
    let eo = exchange_operator_basis(d1, d2)?;
    let family = exchange_family(d1, d2)?;
    let basis = exchange_mode_basis(&eo.layout)?;
    let g = g_values(&family, &eo.basis);
    let rows = g.iter().map(|s| basis.coefficients(s)).collect();
    let labels = eo.basis.labels().iter().map(|l| l.to_string()).collect();
    CoefficientTable::new(basis.keys().to_vec(), labels, rows, classes)
}

fn gram_is_scalar(t: &CoefficientTable, members: &[usize]) -> bool {
    let diag: Vec<f64> = members.iter().map(|i| t.row_dot(*i, *i)).collect();
    let mean = diag.iter().sum::<f64>() / diag.len() as f64;
    if mean <= 1e-14 {
        return false;
    }
    if diag.iter().any(|d| (d - mean).abs() > 1e-9 * mean) {
        return false;
    }
    members.iter().enumerate().all(|(x, a)| {
        members[x + 1..]
            .iter()
            .all(|b| t.row_dot(*a, *b).abs() <= 1e-9 * mean)
    })
}

/// Charge-conserving exchange kernel over `(φ1, φ2, θ, η)`.
pub fn exchange_kernel(d1: usize, d2: usize) -> Result<Kernel> {
    let eo = exchange_operator_basis(d1, d2)?;
    let dim = eo.layout.dim();
    if dim > 16 {
        return Err(Error::InvalidDimension(format!(
            "exchange kernel supports total dimension up to 16, got {dim}"
        )));
    }
    let family = exchange_family(d1, d2)?;
    let basis = exchange_mode_basis(&eo.layout)?;
    let g = g_values(&family, &eo.basis);
    let n_ops = eo.basis.len();
    let invariant: Vec<bool> = eo.kinds.iter().map(|k| matches!(k, ExchangeOpKind::Charge(_))).collect();
    // candidate classes, checked with an unconstrained table
    let probe = CoefficientTable::new(
        basis.keys().to_vec(),
        vec![String::new(); n_ops],
        g.iter().map(|s| basis.coefficients(s)).collect(),
        crate::coherent::singleton_classes(n_ops),
    )?;
    let block_of = |s: usize| eo.layout.locate(s);
    let mut keyed: Vec<((usize, usize, usize, usize), Vec<usize>, String)> = Vec::new();
    for blk in &eo.layout.blocks {
        if blk.dim() < 2 {
            continue;
        }
        let j = blk.charge;
        let mut members = Vec::new();
        let mut pair_classes = Vec::new();
        for (i, kind) in eo.kinds.iter().enumerate() {
            if let ExchangeOpKind::X(a, b) = kind {
                if block_of(*a).0 == j && block_of(*b).0 == j {
                    let y = eo.index_of(ExchangeOpKind::Y(*a, *b)).expect("pair");
                    members.extend([i, y]);
                    let (ma, mb) = (block_of(*a).1, block_of(*b).1);
                    pair_classes.push(((j, ma.min(mb), j, ma.max(mb)), vec![i, y], format!("J{j}[{a},{b}]")));
                }
            }
        }
        let diags: Vec<usize> = (1..blk.dim())
            .map(|r| eo.index_of(ExchangeOpKind::BlockDiag(j, r)).expect("diag"))
            .collect();
        members.extend(&diags);
        if gram_is_scalar(&probe, &members) {
            keyed.push(((j, 0, j, 0), members, format!("J{j}")));
        } else {
            keyed.extend(pair_classes);
            for (r, i) in diags.iter().enumerate() {
                keyed.push(((j, r + 1, j, r + 1), vec![*i], format!("J{j}D{}", r + 1)));
            }
        }
    }
    for (i, kind) in eo.kinds.iter().enumerate() {
        if let ExchangeOpKind::X(a, b) = kind {
            let ((ja, ma), (jb, mb)) = (block_of(*a), block_of(*b));
            if ja != jb {
                let y = eo.index_of(ExchangeOpKind::Y(*a, *b)).expect("pair");
                let (first, second) = if ja < jb { ((ja, ma), (jb, mb)) } else { ((jb, mb), (ja, ma)) };
                keyed.push(((first.0, first.1, second.0, second.1), vec![i, y], format!("x[{a},{b}]")));
            }
        }
    }
    let transitions: Vec<_> = keyed.iter().map(|k| k.0).collect();
    let blocks_b = vec![1; eo.layout.blocks.len()];
    let idx = effective_kernel_indices(&blocks_b, &transitions);
    let mut classes: Vec<EffClass> = keyed
        .into_iter()
        .map(|(t, members, name)| EffClass {
            members,
            name,
            residual: Residual::Sin(idx.big_omega[&t]),
        })
        .collect();
    for (i, kind) in eo.kinds.iter().enumerate() {
        if let ExchangeOpKind::Charge(k) = kind {
            classes.push(EffClass {
                members: vec![i],
                name: format!("d{k}"),
                residual: Residual::Cos(*k),
            });
        }
    }
    let descriptor = format!("exchange({d1},{d2}): phi1 x phi2 x theta[0,pi/2] x circle(eta)");
    let mut k = separable_kernel("exchange", &descriptor, eo.basis.clone(), &basis, &g, &invariant, classes)?;
    k.info.insert("d1".into(), d1.into());
    k.info.insert("d2".into(), d2.into());
    k.info.insert(
        "block_dims".into(),
        eo.layout.blocks.iter().map(|b| b.dim()).collect::<Vec<_>>().into(),
    );
    let occ: Vec<(f64, f64)> = (0..dim)
        .map(|i| {
            let (a, b) = eo.layout.occupation(i);
            (a as f64, b as f64)
        })
        .collect();
    k.probes.push(CovarianceProbe {
        name: "phases".into(),
        gated: true,
        sampler: Arc::new(move |rng: &mut ChaCha8Rng| {
            let a1 = rng.random_range(0.0..2.0 * PI);
            let a2 = rng.random_range(0.0..2.0 * PI);
            let p: Vec<f64> = occ.iter().map(|(n1, n2)| a1 * n1 + a2 * n2).collect();
            GroupElement {
                unitary: diag_unitary(&p),
                action: Box::new(move |xi: &[f64]| {
                    let mut out = xi.to_vec();
                    out[0] += a1;
                    out[1] += a2;
                    out
                }),
            }
        }),
    });
    let t = crate::noise::exchange_generator(d1, d2)?;
    k.probes.push(CovarianceProbe {
        name: "exchange-angle".into(),
        gated: false,
        sampler: Arc::new(move |rng: &mut ChaCha8Rng| {
            let th = rng.random_range(-0.5..0.5);
            GroupElement {
                unitary: crate::noise::unitary_exp(&t, th),
                action: Box::new(move |xi: &[f64]| {
                    let mut out = xi.to_vec();
                    out[2] += th;
                    out
                }),
            }
        }),
    });
    Ok(k)
}

/// One entry of the transition-pair overlap scan on the exchange family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionOverlap {
    pub first: (usize, usize),
    pub second: (usize, usize),
    /// `∫ g_X g_X'`, `∫ g_X g_Y'`, `∫ g_Y g_X'`, `∫ g_Y g_Y'`.
    pub xx: f64,
    pub xy: f64,
    pub yx: f64,
    pub yy: f64,
    /// Occupation differences `(Δn1, Δn2)` of both transitions.
    pub shift_first: (i64, i64),
    pub shift_second: (i64, i64),
    /// `(Δn1, Δn2) = ±(Δn1', Δn2')` with one common sign.
    pub rule: bool,
}

/// Integrals of products of transition-operator expectations over the exchange
/// family, for every ordered pair of transitions.
pub fn transition_overlaps(d1: usize, d2: usize) -> Result<Vec<TransitionOverlap>> {
    let eo = exchange_operator_basis(d1, d2)?;
    let family = exchange_family(d1, d2)?;
    let g = g_values(&family, &eo.basis);
    let w = &family.grid.weights;
    let dot = |a: &[f64], b: &[f64]| -> f64 { w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum() };
    let pairs: Vec<(usize, usize, usize, usize)> = eo
        .kinds
        .iter()
        .enumerate()
        .filter_map(|(i, k)| match k {
            ExchangeOpKind::X(a, b) => Some((*a, *b, i, eo.index_of(ExchangeOpKind::Y(*a, *b)).unwrap())),
            _ => None,
        })
        .collect();
    let shift = |a: usize, b: usize| {
        let (oa, ob) = (eo.layout.occupation(a), eo.layout.occupation(b));
        (ob.0 as i64 - oa.0 as i64, ob.1 as i64 - oa.1 as i64)
    };
    let mut out = Vec::new();
    for &(a, b, xi, yi) in &pairs {
        for &(c, d, xj, yj) in &pairs {
            let (s1, s2) = (shift(a, b), shift(c, d));
            out.push(TransitionOverlap {
                first: (a, b),
                second: (c, d),
                xx: dot(&g[xi], &g[xj]),
                xy: dot(&g[xi], &g[yj]),
                yx: dot(&g[yi], &g[xj]),
                yy: dot(&g[yi], &g[yj]),
                shift_first: s1,
                shift_second: s2,
                rule: s1 == s2 || s1 == (-s2.0, -s2.1),
            });
        }
    }
    Ok(out)
}
