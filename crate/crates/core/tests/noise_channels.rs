use num_complex::Complex64;
use proptest::prelude::*;

use spinwig::noise::{
    apply_channel, exchange_channel, exchange_generator, gadget_expectation, gadget_extend, teleported_cnot,
    toeplitz_eigenvalues, toeplitz_eigenvectors, weak_entangling_channel, weak_entangling_report, Distribution,
    NoiseModel,
};
use spinwig::noise::gadget::cnot_gate;
use spinwig::operator::{
    gellmann_basis, hermitian_eigenvalues, hermiticity_residual, identity, kron_all, partial_trace, random_density,
    random_hermitian, seeded_rng, tensor_basis, trace_distance, trace_product, ComplexMatrix, DensityMatrix,
};

/// exp(A) by scaling and squaring of a Taylor series.
fn expm(a: &ComplexMatrix) -> ComplexMatrix {
    let norm = a.norm();
    let s = (norm.log2().ceil().max(0.0) as i32) + 4;
    let scaled = a / Complex64::new(2f64.powi(s), 0.0);
    let n = a.nrows();
    let mut term = identity(n);
    let mut sum = identity(n);
    for k in 1..30 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

fn toeplitz(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |r, c| {
        if r.abs_diff(c) == 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn models(seed: u64) -> Vec<(NoiseModel, usize)> {
    let s = 0.1 + (seed % 5) as f64 * 0.1;
    vec![
        (NoiseModel::GlobalDepolarizing { p: s }, 3),
        (
            NoiseModel::LocalDepolarizing {
                dims: vec![2, 3],
                p: vec![s, 0.5 * s],
            },
            6,
        ),
        (
            NoiseModel::Dephasing {
                dist: Distribution::wrapped_gaussian(0.0, s, 24).unwrap(),
            },
            2,
        ),
        (
            NoiseModel::Zz {
                dist: Distribution::wrapped_gaussian(0.1, s, 24).unwrap(),
            },
            4,
        ),
        (
            NoiseModel::Exchange {
                d1: 1,
                d2: 2,
                dist: Distribution::wrapped_gaussian(0.0, s, 24).unwrap(),
            },
            6,
        ),
        (
            NoiseModel::WeakEntangling {
                n: 2,
                links: vec![Distribution::wrapped_gaussian(0.0, 0.05, 8).unwrap()],
                eta: Distribution::delta(s),
                phi: Distribution::delta(0.0),
            },
            4,
        ),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn channels_preserve_states(seed in 0u64..1000) {
        for (model, dim) in models(seed) {
            let rho = random_density(dim, seed);
            let out = apply_channel(&rho, &model).unwrap();
            prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-12);
            prop_assert!(hermiticity_residual(out.matrix()) < 1e-14);
            prop_assert!(hermitian_eigenvalues(out.matrix()).iter().all(|l| *l > -1e-12));
        }
    }

    #[test]
    fn toeplitz_formula_matches_dense_exponential(d in 1usize..=6, theta in -3.0f64..3.0) {
        let u = expm(&(toeplitz(d) * Complex64::new(0.0, theta)));
        let v = toeplitz_eigenvectors(d).map(|x| Complex64::new(x, 0.0));
        let diag = v.transpose() * u * v;
        let lam = toeplitz_eigenvalues(d, theta);
        for r in 0..d {
            for c in 0..d {
                let want = if r == c { lam[r] } else { Complex64::new(0.0, 0.0) };
                prop_assert!((diag[(r, c)] - want).norm() < 1e-8);
            }
        }
    }
}

#[test]
fn toeplitz_two_and_one() {
    let t = 0.37;
    let l2 = toeplitz_eigenvalues(2, t);
    assert!((l2[0] - Complex64::from_polar(1.0, t)).norm() < 1e-15);
    assert!((l2[1] - Complex64::from_polar(1.0, -t)).norm() < 1e-15);
    assert!((toeplitz_eigenvalues(1, t)[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    let g = exchange_generator(2, 3).unwrap();
    assert!(hermiticity_residual(&g) < 1e-15);
}

#[test]
fn depolarizing_attenuation_is_exact() {
    let gm = [gellmann_basis(2).unwrap(), gellmann_basis(3).unwrap()];
    let basis = tensor_basis(&gm).unwrap();
    let p = [0.15, 0.35];
    let model = NoiseModel::LocalDepolarizing {
        dims: vec![2, 3],
        p: p.to_vec(),
    };
    let global = NoiseModel::GlobalDepolarizing { p: 0.25 };
    for seed in 0..5 {
        let rho = random_density(6, seed);
        let out = apply_channel(&rho, &model).unwrap();
        let out_g = apply_channel(&rho, &global).unwrap();
        for i in 0..basis.len() {
            let o = basis.element(i);
            let before = trace_product(o, rho.matrix()).re;
            let f: f64 = basis.support(i).iter().map(|k| 1.0 - p[*k]).product();
            assert!((trace_product(o, out.matrix()).re - f * before).abs() < 1e-10);
            assert!((trace_product(o, out_g.matrix()).re - 0.75 * before).abs() < 1e-10);
        }
    }
}

#[test]
fn exchange_rotates_single_excitation() {
    // |01⟩ sits at index 1, |10⟩ at index 2
    let mut psi = ComplexMatrix::zeros(4, 4);
    psi[(1, 1)] = Complex64::new(1.0, 0.0);
    let rho = DensityMatrix::new(psi).unwrap();
    let t = std::f64::consts::FRAC_PI_4;
    let out = exchange_channel(&rho, 1, 1, &Distribution::delta(t)).unwrap();
    // exp(iθσx) on span{|01⟩, |10⟩}
    let (c, s) = (t.cos(), t.sin());
    let amp = [Complex64::new(c, 0.0), Complex64::new(0.0, s)];
    for (a, ia) in [1usize, 2].iter().zip(0..) {
        for (b, ib) in [1usize, 2].iter().zip(0..) {
            let want = amp[ia] * amp[ib].conj();
            assert!((out.matrix()[(*a, *b)] - want).norm() < 1e-12);
        }
    }
    let same = exchange_channel(&rho, 1, 1, &Distribution::delta(0.0)).unwrap();
    assert!(trace_distance(same.matrix(), rho.matrix()) < 1e-15);
}

#[test]
fn uniform_exchange_kills_coherences() {
    let rho = random_density(4, 12);
    let out = exchange_channel(&rho, 1, 1, &Distribution::uniform(16).unwrap()).unwrap();
    let layout = spinwig::coherent::ExchangeLayout::new(1, 1).unwrap();
    let (lam, v) = spinwig::mitigation::circular_spectrum(&NoiseModel::Exchange {
        d1: 1,
        d2: 1,
        dist: Distribution::delta(0.0),
    })
    .unwrap();
    assert_eq!(layout.dim(), 4);
    let m = v.adjoint() * out.matrix() * &v;
    for r in 0..4 {
        for c in 0..4 {
            if (lam[r] - lam[c]).abs() > 1e-9 {
                assert!(m[(r, c)].norm() < 1e-12, "({r},{c}) = {}", m[(r, c)]);
            }
        }
    }
}

#[test]
fn dephasing_composes_by_convolution() {
    let (a, b) = (
        Distribution::wrapped_gaussian(0.0, 0.2, 16).unwrap(),
        Distribution::wrapped_gaussian(0.1, 0.3, 16).unwrap(),
    );
    let c = a.convolve(&b);
    let rho = random_density(2, 3);
    let two = apply_channel(
        &apply_channel(&rho, &NoiseModel::Dephasing { dist: a.clone() }).unwrap(),
        &NoiseModel::Dephasing { dist: b.clone() },
    )
    .unwrap();
    let one = apply_channel(&rho, &NoiseModel::Dephasing { dist: c.clone() }).unwrap();
    assert!((two.matrix() - one.matrix()).norm() < 1e-13);
    // Fourier coefficients multiply
    let (ea, eb, ec) = (a.circle_expansion(4), b.circle_expansion(4), c.circle_expansion(4));
    let sp = std::f64::consts::PI.sqrt();
    for n in 1..=4 {
        let (a1, a2, b1, b2) = (ea.get(n, 1), ea.get(n, 2), eb.get(n, 1), eb.get(n, 2));
        assert!((ec.get(n, 1) - sp * (a1 * b1 - a2 * b2)).abs() < 1e-13);
        assert!((ec.get(n, 2) - sp * (a1 * b2 + a2 * b1)).abs() < 1e-13);
    }
}

#[test]
fn gadget_expectation_identity() {
    let mut rng = seeded_rng(17);
    let mut ratios = Vec::new();
    for seed in 0..10 {
        let rho = random_density(4, seed);
        let o = random_hermitian(4, &mut rng);
        let g = gadget_extend(&rho, &o).unwrap();
        let direct = trace_product(&o, rho.matrix()).re;
        ratios.push(trace_product(&g.obs, &g.rho).re / direct);
        assert!((gadget_expectation(&g).unwrap() - direct).abs() < 1e-10);
    }
    assert!(ratios.iter().all(|r| (r - 0.5).abs() < 1e-10));

    let z = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(-1.0, 0.0),
    ]));
    let zii = kron_all([&z, &identity(2), &identity(2)]);
    let rho = random_density(8, 4);
    let g = gadget_extend(&rho, &zii).unwrap();
    assert!((gadget_expectation(&g).unwrap() - trace_product(&zii, rho.matrix()).re).abs() < 1e-10);
}

#[test]
fn teleported_cnot_equivalence() {
    for seed in 0..3 {
        let rho = random_density(8, seed);
        for k in 0..2 {
            let c = cnot_gate(3, k);
            let direct = &c * rho.matrix() * c.adjoint();
            let tele = teleported_cnot(&rho, k).unwrap();
            assert!((tele.matrix() - direct).norm() < 1e-10);
        }
    }
}

fn weak(n: usize, thetas: &[f64]) -> NoiseModel {
    NoiseModel::WeakEntangling {
        n,
        links: thetas.iter().map(|t| Distribution::delta(*t)).collect(),
        eta: Distribution::delta(0.0),
        phi: Distribution::delta(0.0),
    }
}

#[test]
fn weak_entangling_gap() {
    let rho = random_density(4, 2);
    let r = weak_entangling_report(&rho, &weak(2, &[0.05])).unwrap();
    assert!(r.trace_distance < 2.5e-3, "{r:?}");
    for theta in [0.02, 0.05, 0.1, 0.2] {
        for seed in 0..3 {
            let rho = random_density(4, seed);
            let r = weak_entangling_report(&rho, &weak(2, &[theta])).unwrap();
            assert!(r.gap_constant < 2.0, "{r:?}");
            assert!(r.trace_distance <= theta * theta * r.gap_constant + 1e-15);
        }
    }
    let noisy = NoiseModel::WeakEntangling {
        n: 2,
        links: vec![Distribution::wrapped_gaussian(0.0, 0.1, 8).unwrap()],
        eta: Distribution::wrapped_gaussian(0.0, 0.2, 6).unwrap(),
        phi: Distribution::delta(0.1),
    };
    let r = weak_entangling_report(&random_density(4, 9), &noisy).unwrap();
    assert!(r.gap_constant < 2.0, "{r:?}");
}

#[test]
fn gadget_noise_is_local() {
    // only link 0 active: qubit 2 and the second pair must be untouched
    let rho = random_density(8, 5);
    let g = gadget_extend(&rho, &identity(8)).unwrap();
    let out = weak_entangling_channel(&g, &weak(3, &[0.1, 0.0])).unwrap();
    let dims = vec![2; g.total_qubits()];
    let keep = [2, 5, 6];
    let before = partial_trace(&g.rho, &dims, &keep);
    let after = partial_trace(&out.rho, &dims, &keep);
    assert!((before - after).norm() < 1e-12);
    let touched = partial_trace(&out.rho, &dims, &[0, 1, 3, 4]);
    assert!((touched - partial_trace(&g.rho, &dims, &[0, 1, 3, 4])).norm() > 1e-3);
}
