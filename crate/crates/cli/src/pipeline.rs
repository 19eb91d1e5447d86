//! `spinwig pipeline`: state → noise → raw expectations → profile → mitigation.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use spinwig::formats::{KernelParams, NoiseSpec};
use spinwig::kernels::{channel_as_convolution, verify_sw, wigner, VerifyOptions};
use spinwig::mitigation::{
    attenuation_profile, circular_basis, frequency_profile, mitigate, mitigated_observable, raw_expectations,
    AttenuationProfile, MitigatedEstimate, ProfileOptions, DEFAULT_FLOOR,
};
use spinwig::noise::{apply_channel, NoiseModel};
use spinwig::operator::{
    gellmann_basis, random_density, tensor_basis, trace_product, DensityMatrix, HermitianBasis, MatrixJson,
};

use crate::{config_hash, ensure_dir, read_json, write_json, CliResult, Failure, PipelineArgs};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum StateSource {
    Random {
        dim: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    File(String),
    Matrix(MatrixJson),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Observable {
    name: String,
    matrix: MatrixJson,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineConfig {
    state: StateSource,
    noise: NoiseSpec,
    #[serde(default)]
    kernel: Option<KernelParams>,
    #[serde(default)]
    observables: Vec<Observable>,
    #[serde(default)]
    floor: Option<f64>,
    #[serde(default)]
    check_symmetry: Option<bool>,
}

#[derive(Serialize)]
struct ObservableResult {
    name: String,
    exact: f64,
    noisy: f64,
    mitigated: f64,
    error: f64,
}

#[derive(Serialize)]
struct KernelCheck {
    name: String,
    sw_pass: bool,
    /// Max |convolution prediction − W of the noisy state|, for shift noise.
    #[serde(skip_serializing_if = "Option::is_none")]
    convolution_error: Option<f64>,
    wigner_csv: String,
}

#[derive(Serialize)]
struct PipelineReport {
    version: String,
    config_hash: String,
    seed: u64,
    noise: NoiseSpec,
    dim: usize,
    floor: f64,
    /// Per-operator `{raw, factor, mitigated, amplification}`.
    operators: BTreeMap<String, MitigatedEstimate>,
    exact: BTreeMap<String, f64>,
    max_error: f64,
    /// `E[cos nθ]` by frequency, for circular models.
    #[serde(skip_serializing_if = "Option::is_none")]
    frequency_factors: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    observables: Vec<ObservableResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel: Option<KernelCheck>,
}

fn load_state(src: &StateSource, base: &Path, seed: u64) -> CliResult<DensityMatrix> {
    let m = match src {
        StateSource::Random { dim, seed: s } => {
            if *dim < 2 {
                return Err(Failure::new(2, "state dimension must be at least 2"));
            }
            return Ok(random_density(*dim, s.unwrap_or(seed)));
        }
        StateSource::File(p) => {
            let v = read_json(&base.join(p))?;
            serde_json::from_value::<MatrixJson>(v).map_err(|e| Failure::new(2, format!("state file: {e}")))?
        }
        StateSource::Matrix(m) => m.clone(),
    };
    Ok(DensityMatrix::new(m.to_matrix()?)?)
}

fn profile_basis(model: &NoiseModel, dim: usize) -> CliResult<Option<HermitianBasis>> {
    Ok(match model {
        NoiseModel::GlobalDepolarizing { .. } => Some(gellmann_basis(dim)?),
        NoiseModel::LocalDepolarizing { dims, .. } => {
            let factors = dims.iter().map(|d| gellmann_basis(*d)).collect::<Result<Vec<_>, _>>()?;
            Some(tensor_basis(&factors)?)
        }
        NoiseModel::Dephasing { .. } | NoiseModel::Zz { .. } | NoiseModel::Exchange { .. } => {
            Some(circular_basis(model)?)
        }
        NoiseModel::WeakEntangling { .. } => {
            return Err(Failure::new(
                4,
                "weak entangling noise has no element-wise attenuation profile",
            ))
        }
    })
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Failure::new(2, format!("cannot write {}: {e}", path.display())))
}

pub(crate) fn run(a: &PipelineArgs) -> CliResult<()> {
    if !a.config.is_file() {
        return Err(Failure::new(2, format!("config {} not found", a.config.display())));
    }
    let raw_cfg = read_json(&a.config)?;
    let cfg: PipelineConfig =
        serde_json::from_value(raw_cfg.clone()).map_err(|e| Failure::new(2, format!("invalid pipeline config: {e}")))?;
    let hash = config_hash("pipeline", a, Some(&raw_cfg));
    let base = a.config.parent().unwrap_or(Path::new("."));
    let rho = load_state(&cfg.state, base, a.seed)?;
    let model = cfg.noise.to_model()?;
    let dim = rho.dim();
    if let Some(nd) = model.dim() {
        if nd != dim {
            return Err(Failure::new(
                4,
                format!("{} noise acts on dimension {nd}, state has dimension {dim}", model.kind_name()),
            ));
        }
    }
    let floor = cfg.floor.unwrap_or(DEFAULT_FLOOR);
    let opts = ProfileOptions {
        check_symmetry: cfg.check_symmetry.unwrap_or(true),
    };
    let basis = profile_basis(&model, dim)?;
    let profile: AttenuationProfile = attenuation_profile(&model, basis.as_ref(), &opts)?;
    let noisy = apply_channel(&rho, &model)?;
    let raw = raw_expectations(&profile, &noisy)?;
    let exact = raw_expectations(&profile, &rho)?;
    let operators = mitigate(&raw, &profile, floor)?;
    let max_error = operators
        .iter()
        .map(|(k, e)| (e.mitigated - exact[k]).abs())
        .fold(0.0, f64::max);

    let frequency_factors = match &model {
        NoiseModel::Dephasing { dist } | NoiseModel::Zz { dist } | NoiseModel::Exchange { dist, .. } => {
            Some(frequency_profile(dist, 4).factors)
        }
        _ => None,
    };

    let mut observables = Vec::new();
    for o in &cfg.observables {
        let m = o.matrix.to_matrix()?;
        if m.nrows() != dim {
            return Err(Failure::new(2, format!("observable {} has dimension {}", o.name, m.nrows())));
        }
        let ex = trace_product(&m, rho.matrix()).re;
        let mit = mitigated_observable(&m, &profile, &operators)?;
        observables.push(ObservableResult {
            name: o.name.clone(),
            exact: ex,
            noisy: trace_product(&m, noisy.matrix()).re,
            mitigated: mit,
            error: (mit - ex).abs(),
        });
    }

    ensure_dir(&a.out)?;
    let mut lines = String::from("operator,raw\n");
    for (k, v) in &raw {
        lines.push_str(&format!("{k},{v:e}\n"));
    }
    write_text(&a.out.join("noisy_expectations.csv"), &lines)?;
    write_json(&a.out.join("profile.json"), &profile)?;

    let kernel = match &cfg.kernel {
        None => None,
        Some(params) => {
            let k = params.build()?;
            if k.dim() != dim {
                return Err(Failure::new(
                    4,
                    format!(
                        "kernel {} has dimension {}, incompatible with {} noise on dimension {dim}",
                        k.name,
                        k.dim(),
                        model.kind_name()
                    ),
                ));
            }
            let report = verify_sw(
                &k,
                &VerifyOptions {
                    seed: a.seed,
                    tol: a.tol,
                    covariance: false,
                    ..Default::default()
                },
            );
            let convolution_error = match k.shift() {
                Some(_) => match channel_as_convolution(&k, &model, &rho) {
                    Ok(c) => Some(c.max_abs_error),
                    Err(spinwig::error::Error::UnsupportedNoise(_)) => None,
                    Err(e) => return Err(e.into()),
                },
                None => None,
            };
            let grid = k.grid();
            let w0 = wigner(&rho, &k)?.values;
            let w1 = wigner(&noisy, &k)?.values;
            let mut text = grid.names.join(",");
            text.push_str(",weight,w_exact,w_noisy\n");
            for (i, node) in grid.nodes.iter().enumerate() {
                for x in node {
                    text.push_str(&format!("{x:e},"));
                }
                text.push_str(&format!("{:e},{:e},{:e}\n", grid.weights[i], w0[i], w1[i]));
            }
            write_text(&a.out.join("wigner.csv"), &text)?;
            Some(KernelCheck {
                name: k.name.clone(),
                sw_pass: report.pass,
                convolution_error,
                wigner_csv: "wigner.csv".into(),
            })
        }
    };

    let report = PipelineReport {
        version: spinwig::VERSION.into(),
        config_hash: hash,
        seed: a.seed,
        noise: NoiseSpec::from_model(&model),
        dim,
        floor,
        operators,
        exact,
        max_error,
        frequency_factors,
        observables,
        kernel,
    };
    write_json(&a.out.join("mitigation_report.json"), &report)?;
    println!(
        "{} noise on dimension {dim}: {} operators mitigated, max error {:.2e}",
        model.kind_name(),
        report.operators.len(),
        report.max_error
    );
    Ok(())
}
