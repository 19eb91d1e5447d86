//! `spinwig` command-line front end.
//!
//! Exit codes: 0 ok, 1 verification failed, 2 bad input, 3 construction
//! failed, 4 incompatible noise/kernel/state combination.

mod pipeline;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use spinwig::error::Error;
use spinwig::formats::{write_coefficients_csv, GridJson, KernelManifest, KernelParams};
use spinwig::kernels::{verify_sw, SWReport, VerifyOptions};

#[derive(Parser)]
#[command(name = "spinwig", version, about = "Spin Wigner kernels, verification and noise mitigation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel construction.
    Kernel {
        #[command(subcommand)]
        action: KernelAction,
    },
    /// Check a kernel manifest against the Stratonovich-Weyl conditions.
    Verify(VerifyArgs),
    /// Noise, raw expectations and mitigation for one state.
    Pipeline(PipelineArgs),
}

#[derive(Subcommand)]
enum KernelAction {
    Build(BuildArgs),
}

#[derive(Args, Serialize)]
struct BuildArgs {
    /// parity, brif, tensor, dephasing, zz or exchange.
    #[arg(long = "type")]
    kind: String,
    #[arg(long)]
    dim: Option<usize>,
    /// Tensor factors, e.g. `2,3`.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    d1: Option<usize>,
    #[arg(long)]
    d2: Option<usize>,
    /// Harmonic cutoff for `brif`.
    #[arg(long)]
    nmax: Option<usize>,
    /// Also write the quadrature grid as JSON.
    #[arg(long)]
    grid: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[serde(skip)]
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    // hashed by content, not location
    #[serde(skip)]
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[serde(skip)]
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct PipelineArgs {
    /// Pipeline JSON (state, noise, optional kernel and observables).
    #[serde(skip)]
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[serde(skip)]
    #[arg(long)]
    out: PathBuf,
}

pub(crate) struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Unverified => 1,
            Error::InvalidDimension(_)
            | Error::InvalidInput(_)
            | Error::InvalidCoordinates { .. }
            | Error::InvalidModel(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => 2,
            Error::UnsupportedNoise(_) | Error::NotInvertibleProfile(_) | Error::IllConditioned { .. } => 4,
            _ => 3,
        };
        Failure::new(code, e.to_string())
    }
}

pub(crate) type CliResult<T> = std::result::Result<T, Failure>;

pub(crate) fn config_hash(command: &str, args: &impl Serialize, extra: Option<&Value>) -> String {
    // serde_json maps are ordered, so this text is canonical
    let doc = json!({ "command": command, "args": args, "input": extra });
    hex::encode(Sha256::digest(doc.to_string().as_bytes()))
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::new(2, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::new(2, format!("cannot write {}: {e}", path.display())))
}

pub(crate) fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| Failure::new(2, format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))
}

pub(crate) fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::new(2, format!("cannot create {}: {e}", dir.display())))
}

fn cmd_build(a: &BuildArgs) -> CliResult<()> {
    let params = KernelParams {
        constructor: a.kind.clone(),
        dim: a.dim,
        dims: a.dims.clone(),
        d1: a.d1,
        d2: a.d2,
        n_max: a.nmax,
    };
    if !spinwig::formats::CONSTRUCTORS.contains(&a.kind.as_str()) {
        return Err(Failure::new(2, format!("unknown kernel type {:?}", a.kind)));
    }
    let hash = config_hash("kernel build", a, None);
    let kernel = params.build().map_err(Failure::from)?;
    ensure_dir(&a.out)?;
    let mut manifest = KernelManifest::from_kernel(&kernel, &params, &hash, a.seed);
    let csv_path = a.out.join("coefficients.csv");
    let file = fs::File::create(&csv_path).map_err(|e| Failure::new(2, format!("cannot write {}: {e}", csv_path.display())))?;
    write_coefficients_csv(&kernel, file)?;
    manifest.coefficients_csv = Some("coefficients.csv".into());
    if a.grid {
        write_json(&a.out.join("grid.json"), &GridJson::from_grid(&kernel.grid()))?;
        manifest.grid.file = Some("grid.json".into());
    }
    write_json(&a.out.join("manifest.json"), &manifest)?;
    println!("kernel {} (dim {}) written to {}", kernel.name, kernel.dim(), a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    version: &'a str,
    config_hash: String,
    seed: u64,
    manifest_hash: &'a str,
    report: &'a SWReport,
}

fn cmd_verify(a: &VerifyArgs) -> CliResult<()> {
    if !a.manifest.is_file() {
        return Err(Failure::new(2, format!("manifest {} not found", a.manifest.display())));
    }
    let raw = read_json(&a.manifest)?;
    let manifest: KernelManifest =
        serde_json::from_value(raw.clone()).map_err(|e| Failure::new(2, format!("invalid manifest: {e}")))?;
    let hash = config_hash("verify", a, Some(&raw));
    let kernel = manifest.load_kernel().map_err(Failure::from)?;
    let opts = VerifyOptions {
        samples: a.samples,
        seed: a.seed,
        tol: a.tol,
        ..Default::default()
    };
    let report = verify_sw(&kernel, &opts);
    ensure_dir(&a.out)?;
    write_json(
        &a.out.join("sw_report.json"),
        &VerifyOutput {
            version: spinwig::VERSION,
            config_hash: hash,
            seed: a.seed,
            manifest_hash: &manifest.config_hash,
            report: &report,
        },
    )?;
    println!(
        "{}: hermiticity {:.2e}, normalization {:.2e}, trace {:.2e}, traciality {:.2e} -> {}",
        report.kernel,
        report.hermiticity,
        report.normalization,
        report.trace_rule,
        report.traciality,
        if report.pass { "pass" } else { "FAIL" }
    );
    if report.pass {
        Ok(())
    } else {
        Err(Failure::new(1, "Stratonovich-Weyl conditions not met"))
    }
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("SPINWIG_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Failure::new(2, format!("SPINWIG_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Failure::new(2, "SPINWIG_THREADS must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::new(2, e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Kernel {
            action: KernelAction::Build(a),
        } => cmd_build(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Pipeline(a) => pipeline::run(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
