use std::f64::consts::PI;

use proptest::prelude::*;
use spinwig::error::Error;
use spinwig::harmonics::HarmonicExpansion;
use spinwig::mitigation::{
    attenuation_profile, circular_basis, circular_reweight, frequency_profile, mitigate, mitigated_observable,
    mitigation_report, raw_expectations, ProfileOptions, DEFAULT_FLOOR,
};
use spinwig::noise::{adjoint_channel, apply_channel, Distribution, NoiseModel};
use spinwig::operator::{
    gellmann_basis, random_density, random_hermitian, seeded_rng, tensor_basis, trace_product, HermitianBasis,
};

fn gauss(sigma: f64) -> Distribution {
    Distribution::wrapped_gaussian(0.0, sigma, 48).unwrap()
}

fn basis_for(model: &NoiseModel, dim: usize) -> HermitianBasis {
    match model {
        NoiseModel::GlobalDepolarizing { .. } => gellmann_basis(dim).unwrap(),
        NoiseModel::LocalDepolarizing { dims, .. } => {
            tensor_basis(&dims.iter().map(|d| gellmann_basis(*d).unwrap()).collect::<Vec<_>>()).unwrap()
        }
        _ => circular_basis(model).unwrap(),
    }
}

fn cases() -> Vec<(NoiseModel, usize)> {
    let mut v = vec![
        (NoiseModel::GlobalDepolarizing { p: 0.3 }, 3),
        (
            NoiseModel::LocalDepolarizing {
                dims: vec![2, 3],
                p: vec![0.2, 0.4],
            },
            6,
        ),
        (NoiseModel::Zz { dist: gauss(0.3) }, 4),
        (
            NoiseModel::Exchange {
                d1: 1,
                d2: 2,
                dist: gauss(0.3),
            },
            6,
        ),
        (
            NoiseModel::Exchange {
                d1: 2,
                d2: 2,
                dist: gauss(0.2),
            },
            9,
        ),
    ];
    for s in [0.1, 0.3, 0.6] {
        v.push((NoiseModel::Dephasing { dist: gauss(s) }, 2));
    }
    v
}

#[test]
fn end_to_end_recovers_noiseless_values() {
    let mut rng = seeded_rng(8);
    for (model, dim) in cases() {
        let basis = basis_for(&model, dim);
        let profile = attenuation_profile(&model, Some(&basis), &ProfileOptions::default()).unwrap();
        for seed in 0..3 {
            let rho = random_density(dim, seed);
            let rep = mitigation_report(&rho, &model, &profile, DEFAULT_FLOOR).unwrap();
            assert!(rep.max_error.unwrap() < 1e-8, "{model:?}: {:e}", rep.max_error.unwrap());
            let o = random_hermitian(dim, &mut rng);
            let mit = mitigated_observable(&o, &profile, &rep.operators).unwrap();
            assert!((mit - trace_product(&o, rho.matrix()).re).abs() < 1e-8);
        }
    }
}

#[test]
fn uniform_dephasing_is_refused() {
    let model = NoiseModel::Dephasing {
        dist: Distribution::uniform(16).unwrap(),
    };
    let profile = attenuation_profile(&model, None, &ProfileOptions::default()).unwrap();
    let err = mitigation_report(&random_density(2, 0), &model, &profile, DEFAULT_FLOOR).unwrap_err();
    assert!(matches!(err, Error::IllConditioned { .. }), "{err:?}");
}

#[test]
fn asymmetric_distribution_is_refused() {
    let model = NoiseModel::Dephasing {
        dist: Distribution::wrapped_gaussian(0.2, 0.3, 32).unwrap(),
    };
    assert!(matches!(
        attenuation_profile(&model, None, &ProfileOptions::default()),
        Err(Error::NotInvertibleProfile(_))
    ));
    let lax = attenuation_profile(&model, None, &ProfileOptions { check_symmetry: false });
    assert!(lax.is_ok());
    let tab = Distribution::tabulated(vec![0.0, 0.5], vec![0.5, 0.5]).unwrap();
    let w = HarmonicExpansion::zeros(2, 2).unwrap();
    assert!(matches!(circular_reweight(&w, &tab, DEFAULT_FLOOR), Err(Error::NotInvertibleProfile(_))));
}

#[test]
fn heisenberg_and_schrodinger_agree() {
    let mut rng = seeded_rng(21);
    let models = cases();
    for t in 0..20 {
        let (model, dim) = &models[t % models.len()];
        let rho = random_density(*dim, 100 + t as u64);
        let o = random_hermitian(*dim, &mut rng);
        let s = trace_product(&o, apply_channel(&rho, model).unwrap().matrix()).re;
        let h = trace_product(&adjoint_channel(&o, model).unwrap(), rho.matrix()).re;
        assert!((s - h).abs() < 1e-10, "{model:?}");
    }
}

#[test]
fn gaussian_factor_matches_direct_integral() {
    let sigma = 0.3;
    let prof = frequency_profile(&gauss(sigma), 4);
    // midpoint rule on the wrapped density
    let m = 20000;
    let h = 2.0 * PI / m as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..m {
        let t = -PI + (i as f64 + 0.5) * h;
        let rho: f64 = (-6..=6)
            .map(|k| {
                let x = t + 2.0 * PI * k as f64;
                (-x * x / (2.0 * sigma * sigma)).exp()
            })
            .sum();
        num += rho * (2.0 * t).cos();
        den += rho;
    }
    assert!((prof.factors["2"] - num / den).abs() < 1e-10);
    assert!((prof.factors["2"] - (-2.0 * sigma * sigma).exp()).abs() < 1e-10);
    assert!((prof.factors["0"] - 1.0).abs() < 1e-14);
}

#[test]
fn reweight_round_trip() {
    let sigma: f64 = 0.4;
    let mut w = HarmonicExpansion::zeros(2, 3).unwrap();
    w.set(0, 1, 0.1);
    w.set(1, 1, 0.8 * (-sigma * sigma / 2.0).exp());
    w.set(2, 2, -0.5 * (-2.0 * sigma * sigma).exp());
    let r = circular_reweight(&w, &gauss(sigma), DEFAULT_FLOOR).unwrap();
    assert!((r.expansion.get(1, 1) - 0.8).abs() < 1e-10);
    assert!((r.expansion.get(2, 2) + 0.5).abs() < 1e-10);
    assert_eq!(r.expansion.get(0, 1), 0.1);
    assert!(r.truncated.is_empty());
    let wide = circular_reweight(&w, &Distribution::uniform(12).unwrap(), DEFAULT_FLOOR).unwrap();
    assert_eq!(wide.truncated, vec![1, 2, 3]);
}

#[test]
fn profile_rejects_foreign_basis() {
    let model = NoiseModel::Exchange {
        d1: 1,
        d2: 1,
        dist: gauss(0.2),
    };
    let gm = gellmann_basis(4).unwrap();
    assert!(matches!(
        attenuation_profile(&model, Some(&gm), &ProfileOptions::default()),
        Err(Error::InvalidInput(_))
    ));
    let global = NoiseModel::GlobalDepolarizing { p: 0.1 };
    let prof = attenuation_profile(&global, Some(&gm), &ProfileOptions::default()).unwrap();
    let raw = raw_expectations(&prof, &random_density(4, 1)).unwrap();
    assert_eq!(raw.len(), 15);
    assert!(mitigate(&raw, &prof, 0.95).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn amplification_grows_with_noise(s1 in 0.05f64..0.8, ds in 0.01f64..0.4, seed in 0u64..100) {
        let rho = random_density(2, seed);
        let amp = |s: f64| {
            let model = NoiseModel::Dephasing { dist: gauss(s) };
            let prof = attenuation_profile(&model, None, &ProfileOptions::default()).unwrap();
            let raw = raw_expectations(&prof, &apply_channel(&rho, &model).unwrap()).unwrap();
            let m = mitigate(&raw, &prof, DEFAULT_FLOOR).unwrap();
            m.values().map(|e| e.amplification).fold(0.0, f64::max)
        };
        prop_assert!(amp(s1 + ds) > amp(s1));
        prop_assert!(amp(s1) >= 1.0);
    }

    #[test]
    fn dephasing_mitigation_is_exact(sigma in 0.01f64..0.9, seed in 0u64..1000) {
        let model = NoiseModel::Dephasing { dist: gauss(sigma) };
        let prof = attenuation_profile(&model, None, &ProfileOptions::default()).unwrap();
        let rep = mitigation_report(&random_density(2, seed), &model, &prof, DEFAULT_FLOOR).unwrap();
        prop_assert!(rep.max_error.unwrap() < 1e-8);
    }
}
