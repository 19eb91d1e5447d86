//! Convolution on S^{p-1}: `(f ∗ g)(x) = ∫ f(R⁻¹x) g(R e0) dR`, with the
//! rotation measure normalized to the sphere's area so that zonal `f`
//! reduces to `∫ f(⟨x,u⟩) g(u) du`. The reference point `e0` is the first axis.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{
    expand, harmonic_count, sphere_area, HarmonicBasisTable, HarmonicExpansion,
};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, periodic_trapezoid};

/// Rotations (row-major `p×p`) with weights summing to the area of S^{p-1}.
#[derive(Debug, Clone)]
pub struct RotationQuadrature {
    pub p: usize,
    pub rotations: Vec<(Vec<f64>, f64)>,
}

impl RotationQuadrature {
    /// `m` equally spaced rotations of the circle.
    pub fn circle(m: usize) -> Self {
        let rule = periodic_trapezoid(m, 0.0);
        let rotations = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(a, w)| {
                let (s, c) = a.sin_cos();
                (vec![c, -s, s, c], *w)
            })
            .collect();
        Self { p: 2, rotations }
    }

    /// Euler angles `R = A(α) B(β) A(γ)` where `A` turns the (x1,x2) plane and
    /// `B` the (x0,x1) plane. Gauss-Legendre in `cos β`, trapezoids in α and γ.
    pub fn euler(r: usize, m: usize) -> Self {
        let beta = gauss_legendre(r);
        let tr = periodic_trapezoid(m, 0.0);
        let mut rotations = Vec::with_capacity(r * m * m);
        for (cb, wb) in beta.nodes.iter().zip(&beta.weights) {
            let sb = (1.0 - cb * cb).max(0.0).sqrt();
            for (a, wa) in tr.nodes.iter().zip(&tr.weights) {
                for (g, wg) in tr.nodes.iter().zip(&tr.weights) {
                    let (sa, ca) = a.sin_cos();
                    let (sg, cg) = g.sin_cos();
                    let am = [1.0, 0.0, 0.0, 0.0, ca, -sa, 0.0, sa, ca];
                    let bm = [*cb, -sb, 0.0, sb, *cb, 0.0, 0.0, 0.0, 1.0];
                    let gm = [1.0, 0.0, 0.0, 0.0, cg, -sg, 0.0, sg, cg];
                    let r3 = matmul3(&matmul3(&am, &bm), &gm);
                    rotations.push((r3.to_vec(), wb * wa * wg / (2.0 * PI)));
                }
            }
        }
        Self { p: 3, rotations }
    }

    /// A rule exact for products of harmonics up to the given degrees.
    pub fn for_bandwidths(p: usize, n_f: usize, n_g: usize) -> Result<Self> {
        let d = n_f + n_g;
        match p {
            2 => Ok(Self::circle(d + 1)),
            3 => Ok(Self::euler(d / 2 + 1, d + 1)),
            _ => Err(Error::InvalidInput(format!(
                "rotation quadrature is implemented for p = 2, 3; got {p}"
            ))),
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.rotations.iter().map(|r| r.1).sum()
    }
}

fn matmul3(a: &[f64; 9], b: &[f64; 9]) -> [f64; 9] {
    let mut c = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            c[3 * i + j] = (0..3).map(|k| a[3 * i + k] * b[3 * k + j]).sum();
        }
    }
    c
}

fn apply(r: &[f64], x: &[f64], transpose: bool) -> Vec<f64> {
    let p = x.len();
    (0..p)
        .map(|i| {
            (0..p)
                .map(|k| if transpose { r[k * p + i] } else { r[i * p + k] } * x[k])
                .sum()
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Brute-force convolution by rotation quadrature, evaluated on the table's
/// grid and re-expanded. The table must cover both bandwidths.
pub fn convolve(
    f: &HarmonicExpansion,
    g: &HarmonicExpansion,
    table: &HarmonicBasisTable,
    rotations: &RotationQuadrature,
) -> Result<HarmonicExpansion> {
    let p = table.p();
    if f.p != p || g.p != p || rotations.p != p {
        return Err(Error::InvalidInput(format!(
            "sphere mismatch: f on S^{}, g on S^{}, table on S^{}, rotations for p = {}",
            f.p - 1,
            g.p - 1,
            p - 1,
            rotations.p
        )));
    }
    if f.n_max > table.n_max || g.n_max > table.n_max {
        return Err(Error::InvalidInput(format!(
            "table bandwidth {} is below input bandwidths {} / {}",
            table.n_max, f.n_max, g.n_max
        )));
    }
    let fc = padded(f, table)?;
    let gc = padded(g, table)?;
    let mut e0 = vec![0.0; p];
    e0[0] = 1.0;
    let g_at: Vec<f64> = rotations
        .rotations
        .par_iter()
        .map(|(r, _)| dot(&gc, &table.eval_point(&apply(r, &e0, false))))
        .collect();
    let h: Vec<f64> = table
        .grid
        .points
        .par_iter()
        .map(|x| {
            rotations
                .rotations
                .iter()
                .zip(&g_at)
                .map(|((r, w), gv)| {
                    if *gv == 0.0 {
                        0.0
                    } else {
                        w * gv * dot(&fc, &table.eval_point(&apply(r, x, true)))
                    }
                })
                .sum()
        })
        .collect();
    expand(&h, table)
}

fn padded(e: &HarmonicExpansion, table: &HarmonicBasisTable) -> Result<Vec<f64>> {
    let mut full = HarmonicExpansion::zeros(table.p(), table.n_max)?;
    for n in 0..=e.n_max {
        for j in 1..=e.coeffs[n].len() {
            full.set(n, j, e.get(n, j));
        }
    }
    Ok(full.flat())
}

/// Element-wise convolution theorem.
///
/// On the circle `f` may be arbitrary and the result is the Fourier product.
/// For `p ≥ 3` `f` must be zonal about `e0`; its coefficients are checked
/// against `a_n Ω/N(p,n) · Y_{n,j}(e0)` and the output is
/// `c_{n,j} = a_n Ω/N(p,n) · c^g_{n,j}` with `a_n` the degree-`n` part of `f` at `e0`.
pub fn zonal_convolve(
    f: &HarmonicExpansion,
    g: &HarmonicExpansion,
    table: &HarmonicBasisTable,
) -> Result<HarmonicExpansion> {
    let p = table.p();
    if f.p != p || g.p != p {
        return Err(Error::InvalidInput("f, g and the table must share a sphere".into()));
    }
    let n_out = f.n_max.min(g.n_max);
    let mut out = HarmonicExpansion::zeros(p, g.n_max)?;
    if p == 2 {
        let sp = PI.sqrt();
        out.set(0, 1, (2.0 * PI).sqrt() * f.get(0, 1) * g.get(0, 1));
        for n in 1..=n_out {
            let (af, bf) = (f.get(n, 1), f.get(n, 2));
            let (ag, bg) = (g.get(n, 1), g.get(n, 2));
            out.set(n, 1, sp * (af * ag - bf * bg));
            out.set(n, 2, sp * (af * bg + bf * ag));
        }
        return Ok(out);
    }
    if f.n_max > table.n_max {
        return Err(Error::InvalidInput("table bandwidth below f's bandwidth".into()));
    }
    let mut e0 = vec![0.0; p];
    e0[0] = 1.0;
    let y0 = table.eval_point(&e0);
    let omega = sphere_area(p);
    for n in 0..=f.n_max {
        let count = harmonic_count(p, n)?;
        let yn: Vec<f64> = (1..=count)
            .map(|j| y0[table.index_of(n, j).expect("table covers degree")])
            .collect();
        let a_n: f64 = (1..=count).map(|j| f.get(n, j) * yn[j - 1]).sum();
        let scale = a_n * omega / count as f64;
        for j in 1..=count {
            let expected = scale * yn[j - 1];
            let dev = (f.get(n, j) - expected).abs();
            if dev > 1e-10 {
                return Err(Error::SymmetryViolation(format!(
                    "f is not zonal: coefficient ({n},{j}) deviates by {dev:.3e}"
                )));
            }
            if n <= n_out {
                out.set(n, j, scale * g.get(n, j));
            }
        }
    }
    Ok(out)
}
