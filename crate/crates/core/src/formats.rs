//! On-disk formats: kernel manifests, coefficient CSV, grid JSON and noise specs.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::kernels::{
    brif_mann_kernel, dephasing_kernel, displaced_parity_kernel, exchange_kernel, tensor_product_kernel, zz_kernel,
    Kernel,
};
use crate::noise::{Distribution, DistributionKind, NoiseModel};
use crate::quadrature::CoordGrid;

pub const CONSTRUCTORS: [&str; 6] = ["parity", "brif", "tensor", "dephasing", "zz", "exchange"];

/// Constructor name plus the parameters it reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    pub constructor: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

impl KernelParams {
    pub fn new(constructor: &str) -> Self {
        Self {
            constructor: constructor.to_string(),
            dim: None,
            dims: None,
            d1: None,
            d2: None,
            n_max: None,
        }
    }

    fn need<T: Copy>(v: Option<T>, name: &str, ctor: &str) -> Result<T> {
        v.ok_or_else(|| Error::InvalidInput(format!("constructor {ctor} needs --{name}")))
    }

    pub fn build(&self) -> Result<Kernel> {
        let c = self.constructor.as_str();
        match c {
            "parity" => displaced_parity_kernel(Self::need(self.dim, "dim", c)?),
            "brif" => {
                let dim = Self::need(self.dim, "dim", c)?;
                brif_mann_kernel(dim, self.n_max.unwrap_or(if dim == 2 { 1 } else { 2 }))
            }
            "tensor" => {
                let dims = self
                    .dims
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput("constructor tensor needs --dims".into()))?;
                tensor_product_kernel(dims)
            }
            "dephasing" => dephasing_kernel(),
            "zz" => zz_kernel(),
            "exchange" => exchange_kernel(Self::need(self.d1, "d1", c)?, Self::need(self.d2, "d2", c)?),
            other => Err(Error::InvalidInput(format!(
                "unknown constructor {other:?}; expected one of {}",
                CONSTRUCTORS.join(", ")
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSummary {
    pub coordinates: Vec<String>,
    pub nodes: usize,
    pub total_mass: f64,
    /// Relative path of the grid JSON, if written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelManifest {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub params: KernelParams,
    pub name: String,
    pub dim: usize,
    pub descriptor: String,
    pub c_delta: f64,
    pub class_names: Vec<String>,
    pub class_scales: Vec<f64>,
    pub info: BTreeMap<String, Value>,
    pub grid: GridSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients_csv: Option<String>,
}

impl KernelManifest {
    pub fn from_kernel(kernel: &Kernel, params: &KernelParams, config_hash: &str, seed: u64) -> Self {
        Self {
            version: crate::VERSION.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            params: params.clone(),
            name: kernel.name.clone(),
            dim: kernel.dim(),
            descriptor: kernel.descriptor.clone(),
            c_delta: kernel.c_delta(),
            class_names: kernel.class_names().to_vec(),
            class_scales: kernel.class_scales().to_vec(),
            info: kernel.info().clone(),
            grid: GridSummary {
                coordinates: kernel.coord_names(),
                nodes: kernel.node_count(),
                total_mass: kernel.total_mass(),
                file: None,
            },
            coefficients_csv: None,
        }
    }

    /// Rebuilds the kernel and imposes the stored constants. The result is unverified.
    pub fn load_kernel(&self) -> Result<Kernel> {
        let k = self.params.build()?;
        if k.class_names() != self.class_names.as_slice() {
            return Err(Error::InvalidInput(format!(
                "manifest classes {:?} do not match the rebuilt kernel {:?}",
                self.class_names,
                k.class_names()
            )));
        }
        k.with_constants(self.c_delta, self.class_scales.clone())
    }
}

/// `class,i,n,j,value` rows of the kernel's coefficient table.
pub fn write_coefficients_csv<W: Write>(kernel: &Kernel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class", "i", "n", "j", "value"])?;
    if let Some(t) = kernel.table() {
        let names = kernel.class_names();
        for (i, row) in t.rows.iter().enumerate() {
            let class = &names[kernel.class_of(i)];
            for (key, v) in t.keys.iter().zip(row) {
                if v.abs() < 1e-14 {
                    continue;
                }
                w.write_record([class.clone(), i.to_string(), key.n_label(), key.j_label(), format!("{v:e}")])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientRow {
    pub class: String,
    pub i: usize,
    pub n: String,
    pub j: String,
    pub value: f64,
}

pub fn read_coefficients_csv<R: std::io::Read>(input: R) -> Result<Vec<CoefficientRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Grid JSON: `{"p": .., "coordinates": [..], "nodes": [[..]], "weights": [..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridJson {
    /// Number of coordinates per node.
    pub p: usize,
    pub coordinates: Vec<String>,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl GridJson {
    pub fn from_grid(g: &CoordGrid) -> Self {
        Self {
            p: g.ncoords(),
            coordinates: g.names.clone(),
            nodes: g.nodes.clone(),
            weights: g.weights.clone(),
        }
    }
}

/// `{"kind": .., "params": {..}, "distribution": {"name": .., ..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionKind>,
}

fn param<'a>(spec: &'a NoiseSpec, key: &str) -> Result<&'a Value> {
    spec.params
        .get(key)
        .ok_or_else(|| Error::InvalidModel(format!("{} noise needs params.{key}", spec.kind)))
}

fn as_usize(v: &Value, key: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::InvalidModel(format!("params.{key} must be a nonnegative integer")))
}

fn as_f64(v: &Value, key: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::InvalidModel(format!("params.{key} must be a number")))
}

fn as_vec<T>(v: &Value, key: &str, f: fn(&Value, &str) -> Result<T>) -> Result<Vec<T>> {
    v.as_array()
        .ok_or_else(|| Error::InvalidModel(format!("params.{key} must be an array")))?
        .iter()
        .map(|x| f(x, key))
        .collect()
}

fn dist_param(spec: &NoiseSpec, key: &str) -> Result<Distribution> {
    match spec.params.get(key) {
        None => Ok(Distribution::delta(0.0)),
        Some(v) => Distribution::from_kind(serde_json::from_value(v.clone())?),
    }
}

impl NoiseSpec {
    pub fn to_model(&self) -> Result<NoiseModel> {
        let allowed: &[&str] = match self.kind.as_str() {
            "global_depolarizing" => &["p"],
            "local_depolarizing" => &["dims", "p"],
            "dephasing" | "zz_rotation" => &[],
            "exchange" => &["d1", "d2"],
            "weak_entangling" => &["n", "eta", "phi"],
            other => return Err(Error::InvalidModel(format!("unknown noise kind {other:?}"))),
        };
        if let Some(k) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::InvalidModel(format!("{} noise does not take params.{k}", self.kind)));
        }
        let dist = || -> Result<Distribution> {
            let kind = self
                .distribution
                .clone()
                .ok_or_else(|| Error::InvalidModel(format!("{} noise needs a distribution", self.kind)))?;
            Distribution::from_kind(kind)
        };
        let model = match self.kind.as_str() {
            "global_depolarizing" => NoiseModel::GlobalDepolarizing {
                p: as_f64(param(self, "p")?, "p")?,
            },
            "local_depolarizing" => NoiseModel::LocalDepolarizing {
                dims: as_vec(param(self, "dims")?, "dims", as_usize)?,
                p: as_vec(param(self, "p")?, "p", as_f64)?,
            },
            "dephasing" => NoiseModel::Dephasing { dist: dist()? },
            "zz_rotation" => NoiseModel::Zz { dist: dist()? },
            "exchange" => NoiseModel::Exchange {
                d1: as_usize(param(self, "d1")?, "d1")?,
                d2: as_usize(param(self, "d2")?, "d2")?,
                dist: dist()?,
            },
            _ => {
                let n = as_usize(param(self, "n")?, "n")?;
                let link = dist()?;
                NoiseModel::WeakEntangling {
                    n,
                    links: vec![link; n.saturating_sub(1)],
                    eta: dist_param(self, "eta")?,
                    phi: dist_param(self, "phi")?,
                }
            }
        };
        model.validate()?;
        Ok(model)
    }

    pub fn from_model(model: &NoiseModel) -> Self {
        let mut params = BTreeMap::new();
        let mut distribution = None;
        match model {
            NoiseModel::GlobalDepolarizing { p } => {
                params.insert("p".into(), (*p).into());
            }
            NoiseModel::LocalDepolarizing { dims, p } => {
                params.insert("dims".into(), dims.clone().into());
                params.insert("p".into(), p.clone().into());
            }
            NoiseModel::Dephasing { dist } | NoiseModel::Zz { dist } => distribution = Some(dist.kind.clone()),
            NoiseModel::Exchange { d1, d2, dist } => {
                params.insert("d1".into(), (*d1).into());
                params.insert("d2".into(), (*d2).into());
                distribution = Some(dist.kind.clone());
            }
            NoiseModel::WeakEntangling { n, links, eta, phi } => {
                params.insert("n".into(), (*n).into());
                params.insert("eta".into(), serde_json::to_value(&eta.kind).expect("serializable"));
                params.insert("phi".into(), serde_json::to_value(&phi.kind).expect("serializable"));
                distribution = links.first().map(|d| d.kind.clone());
            }
        }
        Self {
            kind: model.kind_name().to_string(),
            params,
            distribution,
        }
    }
}
