use spinwig::error::Error;
use spinwig::kernels::{channel_as_convolution, dephasing_kernel, exchange_kernel, wigner, zz_kernel, Kernel};
use spinwig::noise::{Distribution, NoiseModel};
use spinwig::operator::random_density;

fn shift_models(kernel: &Kernel, dist: Distribution) -> NoiseModel {
    if kernel.dim() == 2 {
        NoiseModel::Dephasing { dist }
    } else {
        NoiseModel::Zz { dist }
    }
}

fn kernels() -> Vec<Kernel> {
    vec![dephasing_kernel().unwrap(), zz_kernel().unwrap()]
}

#[test]
fn delta_leaves_wigner_unchanged() {
    for k in kernels() {
        let rho = random_density(k.dim(), 1);
        let w = wigner(&rho, &k).unwrap().values;
        let c = channel_as_convolution(&k, &shift_models(&k, Distribution::delta(0.0)), &rho).unwrap();
        let err = c.predicted.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{}: {err:e}", k.name);
        assert!(c.max_abs_error < 1e-12);
    }
}

#[test]
fn uniform_shift_flattens_theta() {
    for k in kernels() {
        let rho = random_density(k.dim(), 2);
        let c = channel_as_convolution(&k, &shift_models(&k, Distribution::uniform(32).unwrap()), &rho).unwrap();
        assert!(c.max_abs_error < 1e-10);
        // nodes sharing η must carry one value
        let grid = k.grid();
        let mut by_eta: std::collections::BTreeMap<i64, Vec<f64>> = Default::default();
        for (node, v) in grid.nodes.iter().zip(&c.predicted) {
            by_eta.entry((node[1] * 1e9).round() as i64).or_default().push(*v);
        }
        for vals in by_eta.values() {
            let spread = vals.iter().fold(f64::MIN, |m, v| m.max(*v)) - vals.iter().fold(f64::MAX, |m, v| m.min(*v));
            assert!(spread < 1e-10, "{}: spread {spread:e}", k.name);
        }
    }
}

#[test]
fn gaussian_shift_is_convolution() {
    for k in kernels() {
        for seed in 0..3 {
            let rho = random_density(k.dim(), seed);
            let dist = Distribution::wrapped_gaussian(0.1, 0.3, 48).unwrap();
            let c = channel_as_convolution(&k, &shift_models(&k, dist), &rho).unwrap();
            assert!(c.max_abs_error < 1e-7, "{}: {:e}", k.name, c.max_abs_error);
        }
    }
}

#[test]
fn non_shift_noise_is_rejected() {
    let k = exchange_kernel(1, 1).unwrap();
    let rho = random_density(4, 0);
    let noise = NoiseModel::Exchange {
        d1: 1,
        d2: 1,
        dist: Distribution::wrapped_gaussian(0.0, 0.3, 16).unwrap(),
    };
    assert!(matches!(channel_as_convolution(&k, &noise, &rho), Err(Error::UnsupportedNoise(_))));
    let dk = dephasing_kernel().unwrap();
    let rho2 = random_density(2, 0);
    let wrong = NoiseModel::GlobalDepolarizing { p: 0.1 };
    assert!(matches!(channel_as_convolution(&dk, &wrong, &rho2), Err(Error::UnsupportedNoise(_))));
}
