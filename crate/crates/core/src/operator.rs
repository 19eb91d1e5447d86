//! Dense complex matrix algebra, Hermitian operator bases and density matrices.
//!
//! Every basis produced here is normalized so that `Tr[A_i A_j] = 2 δ_ij`, the
//! Pauli convention. Coefficients in such a basis are therefore `½ Tr[op A_i]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type StateVector = DVector<Complex64>;

/// Tolerance used when validating Hermiticity of user-supplied operators.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues above `-PSD_TOL` count as nonnegative.
pub const PSD_TOL: f64 = 1e-10;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list of matrices, left to right.
pub fn kron_all<'a>(mats: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    mats.into_iter()
        .fold(identity(1), |acc, m| acc.kronecker(m))
}

/// `Tr[a b]` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Largest entry of `|m - m†|`.
pub fn hermiticity_residual(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn projector(v: &StateVector) -> ComplexMatrix {
    v * v.adjoint()
}

/// `⟨v|op|v⟩`, real part only (op assumed Hermitian).
pub fn expectation(v: &StateVector, op: &ComplexMatrix) -> f64 {
    (v.adjoint() * op * v)[(0, 0)].re
}

/// Conjugation `u m u†`.
pub fn conjugate(u: &ComplexMatrix, m: &ComplexMatrix) -> ComplexMatrix {
    u * m * u.adjoint()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Trace distance `½‖a − b‖₁` between Hermitian matrices.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b)).iter().map(|x| x.abs()).sum::<f64>()
}

/// Partial trace keeping the subsystems listed in `keep` (in their original order).
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> ComplexMatrix {
    let total: usize = dims.iter().product();
    assert_eq!(total, m.nrows(), "partial_trace: dims do not match matrix");
    let n = dims.len();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let kept_total: usize = kept_dims.iter().product();
    let mut out = ComplexMatrix::zeros(kept_total, kept_total);
    let digits = |mut idx: usize| {
        let mut d = vec![0usize; n];
        for k in (0..n).rev() {
            d[k] = idx % dims[k];
            idx /= dims[k];
        }
        d
    };
    let kept_index = |d: &[usize]| keep.iter().fold(0usize, |acc, &k| acc * dims[k] + d[k]);
    for r in 0..total {
        let dr = digits(r);
        for c in 0..total {
            let dc = digits(c);
            let traced_match = (0..n)
                .filter(|k| !keep.contains(k))
                .all(|k| dr[k] == dc[k]);
            if traced_match {
                out[(kept_index(&dr), kept_index(&dc))] += m[(r, c)];
            }
        }
    }
    out
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::InvalidDimension(format!(
                "density matrix must be square and nonempty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let herm = hermiticity_residual(&mat);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidOperator(format!(
                "density matrix not Hermitian (residual {herm:.2e})"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidOperator(format!(
                "density matrix trace {tr} is not 1"
            )));
        }
        let min = hermitian_eigenvalues(&mat)[0];
        if min < -PSD_TOL {
            return Err(Error::InvalidOperator(format!(
                "density matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self(mat))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(identity(dim) / Complex64::new(dim as f64, 0.0))
    }

    pub fn pure(v: &StateVector) -> Self {
        let n = v.norm();
        Self(projector(&(v / Complex64::new(n, 0.0))))
    }

    /// Convex mixture `p a + (1 - p) b`.
    pub fn mix(p: f64, a: &Self, b: &Self) -> Self {
        Self(&a.0 * Complex64::new(p, 0.0) + &b.0 * Complex64::new(1.0 - p, 0.0))
    }

    /// Wraps a matrix produced by a trace/positivity preserving map without re-validation.
    pub(crate) fn from_channel_output(mat: ComplexMatrix) -> Self {
        Self(mat)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.0)
    }
}

/// Where a basis element sits in its parent construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisLabel {
    /// `|r⟩⟨c| + |c⟩⟨r|`
    Symmetric { row: usize, col: usize },
    /// `-i|r⟩⟨c| + i|c⟩⟨r|`
    Antisymmetric { row: usize, col: usize },
    /// Diagonal element of rank `l` (1-based), supported on the first `l + 1` levels.
    Diagonal { rank: usize },
    /// Tensor product; `None` is an identity slot, `Some(k)` the k-th element of that factor.
    Tensor(Vec<Option<usize>>),
    /// Operator families built by the noise-adapted kernels.
    Named(String),
}

impl std::fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BasisLabel::Symmetric { row, col } => write!(f, "X{row}{col}"),
            BasisLabel::Antisymmetric { row, col } => write!(f, "Y{row}{col}"),
            BasisLabel::Diagonal { rank } => write!(f, "D{rank}"),
            BasisLabel::Tensor(slots) => {
                let parts: Vec<String> = slots
                    .iter()
                    .map(|s| s.map_or("I".to_string(), |k| k.to_string()))
                    .collect();
                write!(f, "[{}]", parts.join(","))
            }
            BasisLabel::Named(s) => write!(f, "{s}"),
        }
    }
}

/// Ordered traceless Hermitian basis with `Tr[A_i A_j] = 2 δ_ij`.
#[derive(Debug, Clone)]
pub struct HermitianBasis {
    dim: usize,
    elements: Vec<ComplexMatrix>,
    labels: Vec<BasisLabel>,
    factor_dims: Vec<usize>,
}

impl HermitianBasis {
    /// Assembles a basis from explicit operators, rescaling each to `Tr[A²] = 2`.
    ///
    /// Elements must be Hermitian, traceless and mutually orthogonal; the
    /// count must be `dim² − 1`.
    pub fn from_elements(
        dim: usize,
        elements: Vec<ComplexMatrix>,
        labels: Vec<BasisLabel>,
    ) -> Result<Self> {
        if elements.len() != labels.len() {
            return Err(Error::InvalidInput("label count mismatch".into()));
        }
        if elements.len() != dim * dim - 1 {
            return Err(Error::InvalidInput(format!(
                "basis on dimension {dim} needs {} elements, got {}",
                dim * dim - 1,
                elements.len()
            )));
        }
        let mut normalized = Vec::with_capacity(elements.len());
        for (k, e) in elements.into_iter().enumerate() {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::InvalidDimension(format!("element {k} has wrong shape")));
            }
            if hermiticity_residual(&e) > HERMITIAN_TOL {
                return Err(Error::InvalidOperator(format!("element {k} is not Hermitian")));
            }
            if e.trace().norm() > 1e-10 {
                return Err(Error::InvalidOperator(format!("element {k} is not traceless")));
            }
            let norm2 = trace_product(&e, &e).re;
            if norm2 < 1e-14 {
                return Err(Error::InvalidOperator(format!("element {k} vanishes")));
            }
            normalized.push(e * Complex64::new((2.0 / norm2).sqrt(), 0.0));
        }
        for a in 0..normalized.len() {
            for b in (a + 1)..normalized.len() {
                let ov = trace_product(&normalized[a], &normalized[b]).norm();
                if ov > 1e-10 {
                    return Err(Error::InvalidOperator(format!(
                        "elements {a} and {b} are not orthogonal (overlap {ov:.2e})"
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            elements: normalized,
            labels,
            factor_dims: vec![dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &ComplexMatrix {
        &self.elements[i]
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    /// Local dimensions for tensor bases; `[dim]` otherwise.
    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    /// Tensor factors on which element `i` acts nontrivially.
    pub fn support(&self, i: usize) -> Vec<usize> {
        match &self.labels[i] {
            BasisLabel::Tensor(slots) => slots
                .iter()
                .enumerate()
                .filter_map(|(k, s)| s.map(|_| k))
                .collect(),
            _ => (0..self.factor_dims.len()).collect(),
        }
    }

    /// `c₀ I + Σ c_i A_i`.
    pub fn reconstruct(&self, identity_coeff: f64, coeffs: &[f64]) -> ComplexMatrix {
        let mut m = identity(self.dim) * Complex64::new(identity_coeff, 0.0);
        for (c, e) in coeffs.iter().zip(&self.elements) {
            m += e * Complex64::new(*c, 0.0);
        }
        m
    }
}

/// Generalized Gell-Mann matrices in fixed order: symmetric pairs, antisymmetric
/// pairs (both lexicographic in `(row, col)`), then diagonals by increasing rank.
pub fn gellmann_basis(dim: usize) -> Result<HermitianBasis> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!(
            "Gell-Mann basis needs dim >= 2, got {dim}"
        )));
    }
    let mut elements = Vec::with_capacity(dim * dim - 1);
    let mut labels = Vec::with_capacity(dim * dim - 1);
    let pairs: Vec<(usize, usize)> = (0..dim)
        .flat_map(|r| ((r + 1)..dim).map(move |c| (r, c)))
        .collect();
    for &(row, col) in &pairs {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(row, col)] = ONE;
        m[(col, row)] = ONE;
        elements.push(m);
        labels.push(BasisLabel::Symmetric { row, col });
    }
    for &(row, col) in &pairs {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(row, col)] = -I;
        m[(col, row)] = I;
        elements.push(m);
        labels.push(BasisLabel::Antisymmetric { row, col });
    }
    for rank in 1..dim {
        let scale = (2.0 / (rank * (rank + 1)) as f64).sqrt();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for k in 0..rank {
            m[(k, k)] = Complex64::new(scale, 0.0);
        }
        m[(rank, rank)] = Complex64::new(-(rank as f64) * scale, 0.0);
        elements.push(m);
        labels.push(BasisLabel::Diagonal { rank });
    }
    Ok(HermitianBasis {
        dim,
        elements,
        labels,
        factor_dims: vec![dim],
    })
}

/// Tensor-product basis: every slot ranges over identity and the factor's
/// elements, excluding the all-identity product. Slots vary fastest on the
/// right; identity precedes the factor elements.
pub fn tensor_basis(factors: &[HermitianBasis]) -> Result<HermitianBasis> {
    if factors.is_empty() {
        return Err(Error::InvalidInput("tensor_basis needs at least one factor".into()));
    }
    if factors.len() == 1 {
        return Ok(factors[0].clone());
    }
    let factor_dims: Vec<usize> = factors.iter().map(|f| f.dim).collect();
    let dim: usize = factor_dims.iter().product();
    let radices: Vec<usize> = factors.iter().map(|f| f.len() + 1).collect();
    let total: usize = radices.iter().product();
    let mut elements = Vec::with_capacity(total - 1);
    let mut labels = Vec::with_capacity(total - 1);
    for flat in 1..total {
        let mut rem = flat;
        let mut slots = vec![None; factors.len()];
        for k in (0..factors.len()).rev() {
            let d = rem % radices[k];
            rem /= radices[k];
            slots[k] = if d == 0 { None } else { Some(d - 1) };
        }
        let mut norm2 = 1.0;
        let parts: Vec<ComplexMatrix> = slots
            .iter()
            .zip(factors)
            .map(|(s, f)| match s {
                None => {
                    norm2 *= f.dim as f64;
                    identity(f.dim)
                }
                Some(k) => {
                    norm2 *= 2.0;
                    f.elements[*k].clone()
                }
            })
            .collect();
        let m = kron_all(parts.iter()) * Complex64::new((2.0 / norm2).sqrt(), 0.0);
        elements.push(m);
        labels.push(BasisLabel::Tensor(slots));
    }
    Ok(HermitianBasis {
        dim,
        elements,
        labels,
        factor_dims,
    })
}

/// Expands a Hermitian operator as `c₀ I + Σ c_i A_i` with `c_i = ½ Tr[op A_i]`.
pub fn expand_in_basis(op: &ComplexMatrix, basis: &HermitianBasis) -> Result<(f64, Vec<f64>)> {
    if op.nrows() != basis.dim || op.ncols() != basis.dim {
        return Err(Error::InvalidDimension(format!(
            "operator is {}x{}, basis acts on {}",
            op.nrows(),
            op.ncols(),
            basis.dim
        )));
    }
    let herm = hermiticity_residual(op);
    if herm > HERMITIAN_TOL {
        return Err(Error::InvalidOperator(format!(
            "operator is not Hermitian (residual {herm:.2e})"
        )));
    }
    let c0 = op.trace().re / basis.dim as f64;
    let coeffs = basis
        .elements
        .iter()
        .map(|e| 0.5 * trace_product(op, e).re)
        .collect();
    Ok((c0, coeffs))
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_c<R: rand::Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

pub fn ginibre<R: rand::Rng>(dim: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |_, _| gaussian_c(rng))
}

/// Reproducible random density matrix `G G† / Tr[G G†]`.
pub fn random_density(dim: usize, seed: u64) -> DensityMatrix {
    let mut rng = seeded_rng(seed);
    random_density_with(dim, &mut rng)
}

pub fn random_density_with<R: rand::Rng>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(dim, rng);
    let m = &g * g.adjoint();
    let tr = m.trace();
    let mut m = m / tr;
    // symmetrize away rounding
    m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    DensityMatrix(m)
}

pub fn random_pure_state<R: rand::Rng>(dim: usize, rng: &mut R) -> StateVector {
    let v = StateVector::from_fn(dim, |_, _| gaussian_c(rng));
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: rand::Rng>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let qr = ginibre(dim, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_hermitian<R: rand::Rng>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, rng);
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Matrix interchange format: `{"dim": N, "re": [[..]], "im": [[..]]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let dim = m.nrows();
        Self {
            dim,
            re: (0..dim).map(|r| (0..dim).map(|c| m[(r, c)].re).collect()).collect(),
            im: (0..dim).map(|r| (0..dim).map(|c| m[(r, c)].im).collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let n = self.dim;
        let shape_ok = self.re.len() == n
            && self.im.len() == n
            && self.re.iter().chain(&self.im).all(|row| row.len() == n);
        if !shape_ok || n == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix JSON rows do not match dim {n}"
            )));
        }
        Ok(ComplexMatrix::from_fn(n, n, |r, c| {
            Complex64::new(self.re[r][c], self.im[r][c])
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli() -> [ComplexMatrix; 3] {
        let x = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let y = ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
        let z = ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
        [x, y, z]
    }

    fn assert_orthonormal(b: &HermitianBasis) {
        for i in 0..b.len() {
            assert!(b.element(i).trace().norm() < 1e-12);
            assert!(hermiticity_residual(b.element(i)) < 1e-14);
            for j in 0..b.len() {
                let t = 0.5 * trace_product(b.element(i), b.element(j));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((t.re - want).abs() < 1e-12 && t.im.abs() < 1e-12, "({i},{j}) -> {t}");
            }
        }
    }

    #[test]
    fn gellmann_two_is_pauli() {
        let b = gellmann_basis(2).unwrap();
        let p = pauli();
        assert_eq!(b.len(), 3);
        for k in 0..3 {
            assert!((b.element(k) - &p[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn gellmann_three_last_element() {
        let b = gellmann_basis(3).unwrap();
        assert_eq!(b.len(), 8);
        let s = 1.0 / 3f64.sqrt();
        let want = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-2.0 * s, 0.0),
        ]));
        assert!((b.element(7) - want).norm() < 1e-15);
    }

    #[test]
    fn gellmann_orthonormal_up_to_six() {
        for d in 2..=6 {
            let b = gellmann_basis(d).unwrap();
            assert_eq!(b.len(), d * d - 1);
            assert_orthonormal(&b);
        }
    }

    #[test]
    fn gellmann_rejects_small_dim() {
        assert!(matches!(gellmann_basis(1), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn tensor_basis_counts_and_orthogonality() {
        let g2 = gellmann_basis(2).unwrap();
        let g3 = gellmann_basis(3).unwrap();
        let b22 = tensor_basis(&[g2.clone(), g2.clone()]).unwrap();
        assert_eq!(b22.len(), 15);
        assert_orthonormal(&b22);
        let b23 = tensor_basis(&[g2.clone(), g3]).unwrap();
        assert_eq!(b23.len(), 35);
        assert_orthonormal(&b23);
        let single = tensor_basis(&[g2.clone()]).unwrap();
        for k in 0..3 {
            assert!((single.element(k) - g2.element(k)).norm() < 1e-15);
        }
        assert!(tensor_basis(&[]).is_err());
    }

    #[test]
    fn tensor_support_from_labels() {
        let g2 = gellmann_basis(2).unwrap();
        let b = tensor_basis(&[g2.clone(), g2]).unwrap();
        // slot ordering: [I, x] is the first element
        assert_eq!(b.labels()[0], BasisLabel::Tensor(vec![None, Some(0)]));
        assert_eq!(b.support(0), vec![1]);
        assert_eq!(b.support(3), vec![0]);
        assert_eq!(b.support(4), vec![0, 1]);
    }

    #[test]
    fn expand_pauli_and_identity() {
        let b = gellmann_basis(2).unwrap();
        let (c0, c) = expand_in_basis(&pauli()[0], &b).unwrap();
        assert_eq!(c0, 0.0);
        assert_eq!(c, vec![1.0, 0.0, 0.0]);
        let (c0, c) = expand_in_basis(&identity(2), &b).unwrap();
        assert_eq!(c0, 1.0);
        assert!(c.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn expand_rejects_non_hermitian() {
        let b = gellmann_basis(2).unwrap();
        let mut m = pauli()[0].clone();
        m[(0, 1)] = Complex64::new(2.0, 0.0);
        assert!(matches!(expand_in_basis(&m, &b), Err(Error::InvalidOperator(_))));
    }

    #[test]
    fn random_density_properties() {
        assert_eq!(random_density(2, 7), random_density(2, 7));
        let r = random_density(3, 1);
        let ev = r.eigenvalues();
        assert!(ev.iter().all(|&e| e >= 0.0));
        assert!((ev.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(hermiticity_residual(random_density(4, 2).matrix()) < 1e-12);
        assert!(DensityMatrix::new(random_density(4, 2).into_matrix()).is_ok());
    }

    #[test]
    fn partial_trace_of_product() {
        let a = random_density(2, 3);
        let b = random_density(3, 4);
        let ab = kron(a.matrix(), b.matrix());
        assert!((partial_trace(&ab, &[2, 3], &[0]) - a.matrix()).norm() < 1e-13);
        assert!((partial_trace(&ab, &[2, 3], &[1]) - b.matrix()).norm() < 1e-13);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = seeded_rng(5);
        let u = random_unitary(4, &mut rng);
        assert!((&u * u.adjoint() - identity(4)).norm() < 1e-12);
    }

    #[test]
    fn matrix_json_round_trip() {
        let m = random_density(3, 9).into_matrix();
        let j = MatrixJson::from_matrix(&m);
        let text = serde_json::to_string(&j).unwrap();
        let back: MatrixJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_matrix().unwrap(), m);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn expand_then_reconstruct_is_identity(dim in 2usize..6, seed in any::<u64>()) {
                let basis = gellmann_basis(dim).unwrap();
                let mut rng = seeded_rng(seed);
                let h = random_hermitian(dim, &mut rng);
                let (c0, c) = expand_in_basis(&h, &basis).unwrap();
                let back = basis.reconstruct(c0, &c);
                prop_assert!((back - h).norm() < 1e-12);
            }

            #[test]
            fn tensor_cardinality(d1 in 2usize..4, d2 in 2usize..4) {
                let b = tensor_basis(&[gellmann_basis(d1).unwrap(), gellmann_basis(d2).unwrap()]).unwrap();
                prop_assert_eq!(b.len(), d1 * d1 * d2 * d2 - 1);
            }
        }
    }
}
