//! Kernel assembly and the coset-based constructions.
//!
//! Solving the constants: with the measure rescaled to total mass `N`, taking
//! `C = 1/N` gives normalization and the trace rule as soon as every `F_i`
//! integrates to zero. Traciality then reduces to
//! `s_i s_j ∫F_i F_j = ½ δ_ij`, so the Gram matrix of the `F_i` has to be
//! diagonal, constant on each class, and `s = (2 G_ii)^{-1/2}`. Anything else is
//! rejected with a normalization failure naming the offending operators.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::{CovarianceProbe, Field, GroupElement, Kernel};
use crate::coherent::{
    all_in_one_class, bloch_point, coefficient_table, coset_basis, default_sun_family,
    displacement_operators, hypersphere_point, sphere_family, sun_angles, table_from_functions,
    CoefficientTable, CoherentFamily,
};
use crate::error::{Error, Result};
use crate::harmonics::{build_harmonics, grid_for_bandwidth, sphere_angles, EvalFn, FunctionBasis};
use crate::operator::{expectation, gellmann_basis, random_unitary, tensor_basis, ComplexMatrix, HermitianBasis};

const SOLVE_TOL: f64 = 1e-9;

/// Inputs for [`assemble`].
pub(crate) struct Assembly {
    pub name: String,
    pub descriptor: String,
    pub ops: HermitianBasis,
    pub classes: Vec<Vec<usize>>,
    pub class_names: Vec<String>,
    pub field: Field,
    pub eval_fn: EvalFn,
    pub table: Option<CoefficientTable>,
    /// Give zero scale to classes whose functions vanish instead of failing.
    pub allow_incomplete: bool,
}

pub(crate) fn assemble(a: Assembly) -> Result<Kernel> {
    let n = a.ops.dim() as f64;
    if a.field.n_ops() != a.ops.len() {
        return Err(Error::InvalidInput(format!(
            "{} functions for {} basis operators",
            a.field.n_ops(),
            a.ops.len()
        )));
    }
    let field = a.field.with_mass(n);
    let means = field.integrals();
    let gram = field.gram();
    let label = |i: usize| a.ops.labels()[i].to_string();

    for (i, m) in means.iter().enumerate() {
        if m.abs() > SOLVE_TOL * (gram[(i, i)] * n).sqrt() + 1e-13 {
            return Err(Error::NormalizationFailure(format!(
                "function of operator {} has nonzero mean {m:.3e}; the kernel would not be normalizable",
                label(i)
            )));
        }
    }
    for i in 0..a.ops.len() {
        for j in i + 1..a.ops.len() {
            let g = gram[(i, j)];
            if g.abs() > SOLVE_TOL * (gram[(i, i)] * gram[(j, j)]).sqrt() + 1e-13 {
                return Err(Error::NormalizationFailure(format!(
                    "functions of operators {} and {} overlap ({g:.3e}); no class scales satisfy traciality",
                    label(i),
                    label(j)
                )));
            }
        }
    }
    let mut scales = Vec::with_capacity(a.classes.len());
    for (c, members) in a.classes.iter().enumerate() {
        let diag: Vec<f64> = members.iter().map(|i| gram[(*i, *i)]).collect();
        let mean = diag.iter().sum::<f64>() / diag.len() as f64;
        if mean <= 1e-14 {
            if a.allow_incomplete {
                scales.push(0.0);
                continue;
            }
            return Err(Error::NormalizationFailure(format!(
                "class {} ({}) has vanishing functions; the table is not informationally complete",
                a.class_names[c],
                members.iter().map(|i| label(*i)).collect::<Vec<_>>().join(",")
            )));
        }
        if let Some((k, d)) = diag
            .iter()
            .enumerate()
            .find(|(_, d)| (*d - mean).abs() > SOLVE_TOL * mean)
        {
            return Err(Error::NormalizationFailure(format!(
                "class {}: operator {} has squared norm {d:.6e}, class mean {mean:.6e}; one scale cannot serve the class",
                a.class_names[c],
                label(members[k])
            )));
        }
        scales.push(1.0 / (2.0 * mean).sqrt());
    }
    Ok(Kernel::from_parts(
        &a.name,
        &a.descriptor,
        a.ops,
        &a.classes,
        a.class_names,
        scales,
        1.0 / n,
        field,
        a.eval_fn,
        a.table,
    ))
}

fn default_class_names(n: usize) -> Vec<String> {
    (0..n).map(|c| format!("class{c}")).collect()
}

fn synthesized(basis: &FunctionBasis, table: &CoefficientTable) -> (Field, EvalFn) {
    let values: Vec<Vec<f64>> = table.rows.iter().map(|r| basis.synthesize(r)).collect();
    let rows = table.rows.clone();
    let eval = basis.eval_fn();
    let eval_fn: EvalFn = Arc::new(move |xi: &[f64]| {
        let y = eval(xi);
        rows.iter()
            .map(|r| r.iter().zip(&y).map(|(a, b)| a * b).sum())
            .collect()
    });
    (
        Field::Dense {
            grid: basis.grid().clone(),
            values,
        },
        eval_fn,
    )
}

fn check_table(basis: &FunctionBasis, table: &CoefficientTable, ops: &HermitianBasis) -> Result<()> {
    if table.rows.len() != ops.len() {
        return Err(Error::InvalidInput(format!(
            "table has {} rows for {} basis operators",
            table.rows.len(),
            ops.len()
        )));
    }
    if table.keys != basis.keys() {
        return Err(Error::InvalidInput("table keys do not match the function basis".into()));
    }
    Ok(())
}

/// General kernel from an orthonormal function basis, a coefficient table over
/// it and the operator basis the table rows refer to. Classes come from the table.
pub fn build_general_kernel(basis: &FunctionBasis, table: CoefficientTable, ops: HermitianBasis) -> Result<Kernel> {
    general("general", "user-supplied", basis, table, ops, false)
}

fn general(
    name: &str,
    descriptor: &str,
    basis: &FunctionBasis,
    table: CoefficientTable,
    ops: HermitianBasis,
    allow_incomplete: bool,
) -> Result<Kernel> {
    check_table(basis, &table, &ops)?;
    let (field, eval_fn) = synthesized(basis, &table);
    assemble(Assembly {
        name: name.into(),
        descriptor: descriptor.into(),
        ops,
        classes: table.classes.clone(),
        class_names: default_class_names(table.classes.len()),
        field,
        eval_fn,
        table: Some(table),
        allow_incomplete,
    })
}

/// `√((N+1) N (N-1) / 2)`.
pub fn parity_normalization(dim: usize) -> f64 {
    let n = dim as f64;
    ((n + 1.0) * n * (n - 1.0) / 2.0).sqrt()
}

fn su_n_probe(dim: usize, to_coords: Arc<dyn Fn(&crate::operator::StateVector) -> Vec<f64> + Send + Sync>, family: &CoherentFamily) -> CovarianceProbe {
    let state = family.state_fn();
    CovarianceProbe {
        name: format!("su{dim}"),
        gated: true,
        sampler: Arc::new(move |rng: &mut ChaCha8Rng| {
            let u = random_unitary(dim, rng);
            let (s, u2, back) = (state.clone(), u.clone(), to_coords.clone());
            GroupElement {
                unitary: u,
                action: Box::new(move |xi: &[f64]| back(&(&u2 * s(xi)))),
            }
        }),
    }
}

/// Displaced parity kernel `Δ(ξ) = A·I + B·|ξ⟩⟨ξ|` over the SU(N) coset, with
/// `A = (1 - √(N+1))/N`, `B = √(N+1)` coming out of the scale solve.
pub fn displaced_parity_kernel(dim: usize) -> Result<Kernel> {
    let family = default_sun_family(dim)?;
    let basis = coset_basis(&family)?;
    let ops = gellmann_basis(dim)?;
    let ds = displacement_operators(&family, &basis)?;
    let table = coefficient_table(&ds, &ops, all_in_one_class(ops.len()))?;
    let mut k = general("displaced-parity", &family.descriptor, &basis, table, ops, false)?;
    let b = k.class_scales()[0];
    k.info.insert("parity_normalization".into(), parity_normalization(dim).into());
    k.info.insert("A".into(), (k.c_delta() - b / dim as f64).into());
    k.info.insert("B".into(), b.into());
    k.probes.push(su_n_probe(dim, Arc::new(sun_angles), &family));
    Ok(k)
}

/// Harmonic-weighted coherent-state kernel: the Bloch sphere for `dim = 2`,
/// S^{2N-1} otherwise. `n_max = 0` yields the normalization-only kernel `I/N`.
pub fn brif_mann_kernel(dim: usize, n_max: usize) -> Result<Kernel> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("kernel needs dim >= 2, got {dim}")));
    }
    let bandwidth = if dim == 2 { 1 } else { 2 };
    if n_max > 0 && n_max < bandwidth {
        return Err(Error::Bandwidth(format!(
            "n_max = {n_max} is below the bandwidth {bandwidth} of the coherent-state expectation functions"
        )));
    }
    let p = if dim == 2 { 3 } else { 2 * dim };
    let grid = grid_for_bandwidth(p, n_max.max(bandwidth))?;
    let family = sphere_family(dim, &grid)?;
    let htable = build_harmonics(&grid, n_max)?;
    let basis = htable.function_basis();
    let ops = gellmann_basis(dim)?;
    let ds = displacement_operators(&family, &basis)?;
    let table = coefficient_table(&ds, &ops, all_in_one_class(ops.len()))?;
    let mut k = general("brif-mann", &family.descriptor, &basis, table, ops, n_max == 0)?;
    k.info.insert("n_max".into(), n_max.into());
    k.info.insert("sphere_p".into(), p.into());
    let to_coords: Arc<dyn Fn(&crate::operator::StateVector) -> Vec<f64> + Send + Sync> = if dim == 2 {
        Arc::new(|v| sphere_angles(&bloch_point(v)))
    } else {
        Arc::new(|v| sphere_angles(&hypersphere_point(v)))
    };
    k.probes.push(su_n_probe(dim, to_coords, &family));
    Ok(k)
}

/// Product of per-factor coset kernels. Every tensor basis operator gets the
/// product of its factors' expectation functions; operators are grouped into
/// classes by support, each with its own scale.
pub fn tensor_product_kernel(dims: &[usize]) -> Result<Kernel> {
    if dims.is_empty() {
        return Err(Error::InvalidInput("tensor product needs at least one factor".into()));
    }
    let families: Vec<CoherentFamily> = dims.iter().map(|d| default_sun_family(*d)).collect::<Result<_>>()?;
    let gms: Vec<HermitianBasis> = dims.iter().map(|d| gellmann_basis(*d)).collect::<Result<_>>()?;
    let mut bases = Vec::with_capacity(dims.len());
    for (k, f) in families.iter().enumerate() {
        let b = coset_basis(f)?;
        let names = f.grid.names.iter().map(|n| format!("{n}.{}", k + 1)).collect();
        bases.push(b.renamed(names));
    }
    let product = bases[1..]
        .iter()
        .fold(bases[0].clone(), |acc, b| FunctionBasis::product(&acc, b));
    // h[k][op][node]: ½⟨ξ_k|O|ξ_k⟩ on factor k's grid
    let h: Vec<Vec<Vec<f64>>> = families
        .iter()
        .zip(&gms)
        .map(|(f, g)| {
            let states = f.states();
            g.elements()
                .iter()
                .map(|o| states.iter().map(|v| 0.5 * expectation(v, o)).collect())
                .collect()
        })
        .collect();
    let sizes: Vec<usize> = families.iter().map(|f| f.grid.len()).collect();
    let total: usize = sizes.iter().product();
    let ops = tensor_basis(&gms)?;
    let slots_of = |i: usize| -> Vec<Option<usize>> {
        match &ops.labels()[i] {
            crate::operator::BasisLabel::Tensor(s) => s.clone(),
            _ => vec![Some(i)],
        }
    };
    let samples: Vec<Vec<f64>> = (0..ops.len())
        .map(|i| {
            let slots = slots_of(i);
            (0..total)
                .map(|mut node| {
                    let mut v = 1.0;
                    for k in (0..dims.len()).rev() {
                        let a = node % sizes[k];
                        node /= sizes[k];
                        if let Some(e) = slots[k] {
                            v *= h[k][e][a];
                        }
                    }
                    v
                })
                .collect()
        })
        .collect();
    let mut patterns: Vec<Vec<usize>> = Vec::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..ops.len() {
        let s = ops.support(i);
        match patterns.iter().position(|p| *p == s) {
            Some(c) => classes[c].push(i),
            None => {
                patterns.push(s);
                classes.push(vec![i]);
            }
        }
    }
    let labels = ops.labels().iter().map(|l| l.to_string()).collect();
    let table = table_from_functions(&product, &samples, labels, classes)?;
    let descriptor = dims.iter().map(|d| format!("su{d}-coset")).collect::<Vec<_>>().join(" x ");
    let mut k = general("tensor-product", &descriptor, &product, table, ops, false)?;
    k.class_names = patterns
        .iter()
        .map(|p| format!("support[{}]", p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    k.info.insert("dims".into(), dims.to_vec().into());

    let fam_states: Vec<_> = families.iter().map(|f| f.state_fn()).collect();
    let dims_v = dims.to_vec();
    k.probes.push(CovarianceProbe {
        name: "local-unitaries".into(),
        gated: true,
        sampler: Arc::new(move |rng: &mut ChaCha8Rng| {
            let us: Vec<ComplexMatrix> = dims_v.iter().map(|d| random_unitary(*d, rng)).collect();
            let unitary = crate::operator::kron_all(us.iter());
            let (states, dims) = (fam_states.clone(), dims_v.clone());
            GroupElement {
                unitary,
                action: Box::new(move |xi: &[f64]| {
                    let mut out = Vec::with_capacity(xi.len());
                    let mut off = 0;
                    for ((d, s), u) in dims.iter().zip(&states).zip(&us) {
                        let n = 2 * (d - 1);
                        out.extend(sun_angles(&(u * s(&xi[off..off + n]))));
                        off += n;
                    }
                    out
                }),
            }
        }),
    });
    Ok(k)
}
