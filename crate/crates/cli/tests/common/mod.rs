#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_spinwig")
}

/// Fresh scratch directory under the cargo target dir.
pub fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(args: &[&str]) -> Run {
    run_env(args, &[])
}

pub fn run_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(bin());
    cmd.args(args).env_remove("SPINWIG_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("spawn spinwig");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

pub fn dephasing_config() -> Value {
    json!({
        "state": {"random": {"dim": 2, "seed": 3}},
        "noise": {"kind": "dephasing", "distribution": {"name": "wrapped-gaussian", "sigma": 0.3}},
        "kernel": {"constructor": "dephasing"},
        "observables": [{"name": "sx", "matrix": {"dim": 2, "re": [[0, 1], [1, 0]], "im": [[0, 0], [0, 0]]}}]
    })
}

pub fn exchange_config() -> Value {
    json!({
        "state": {"random": {"dim": 6, "seed": 1}},
        "noise": {"kind": "exchange", "params": {"d1": 1, "d2": 2},
                  "distribution": {"name": "wrapped-gaussian", "sigma": 0.25}},
        "kernel": {"constructor": "exchange", "d1": 1, "d2": 2}
    })
}

pub fn local_config() -> Value {
    json!({
        "state": {"random": {"dim": 6}},
        "noise": {"kind": "local_depolarizing", "params": {"dims": [2, 3], "p": [0.1, 0.3]}},
        "kernel": {"constructor": "tensor", "dims": [2, 3]}
    })
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

/// Serves `$ref`s between schema files from the schemas directory.
struct SchemaFiles;

impl jsonschema::Retrieve for SchemaFiles {
    fn retrieve(
        &self,
        uri: &jsonschema::Uri<String>,
    ) -> Result<Value, Box<dyn std::error::Error + Send + Sync>> {
        let path = uri.path().as_str().to_string();
        let name = path.rsplit('/').next().unwrap_or_default();
        let text = fs::read_to_string(schema_dir().join(name))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Validation errors of `instance` against `schemas/<name>.schema.json`.
pub fn schema_errors(name: &str, instance: &Value) -> Vec<String> {
    let text = fs::read_to_string(schema_dir().join(format!("{name}.schema.json"))).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let validator = jsonschema::options()
        .with_retriever(SchemaFiles)
        .build(&schema)
        .unwrap_or_else(|e| panic!("schema {name}: {e}"));
    validator
        .iter_errors(instance)
        .map(|e| format!("{name}: {} at {}", e, e.instance_path()))
        .collect()
}

pub fn read(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Every file in `a` exists in `b` with identical bytes.
pub fn same_tree(a: &Path, b: &Path) -> Vec<String> {
    let mut diffs = Vec::new();
    let mut names: Vec<_> = fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    if names.is_empty() {
        diffs.push(format!("{} is empty", a.display()));
    }
    for n in names {
        let (x, y) = (fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)));
        match y {
            Ok(y) if y == x => {}
            _ => diffs.push(format!("{} differs", n.to_string_lossy())),
        }
    }
    diffs
}

/// Builds, verifies and runs pipelines twice (once single-threaded) and
/// compares outputs byte for byte.
pub fn determinism_failures(root: &Path) -> Vec<String> {
    let mut bad = Vec::new();
    let cfgs = [
        ("dephasing", dephasing_config()),
        ("exchange", exchange_config()),
        ("local", local_config()),
    ];
    for (name, cfg) in &cfgs {
        let path = write_config(root, &format!("{name}.json"), cfg);
        let (a, b) = (root.join(format!("{name}_a")), root.join(format!("{name}_b")));
        let ra = run(&["pipeline", "--config", p(&path), "--out", p(&a)]);
        let rb = run_env(&["pipeline", "--config", p(&path), "--out", p(&b)], &[("SPINWIG_THREADS", "1")]);
        if ra.code != 0 || rb.code != 0 {
            bad.push(format!("pipeline {name} exited {} / {}: {}", ra.code, rb.code, ra.stderr));
            continue;
        }
        bad.extend(same_tree(&a, &b));
    }
    for (kind, extra) in [("parity", vec!["--dim", "3"]), ("exchange", vec!["--d1", "1", "--d2", "1"])] {
        let (a, b) = (root.join(format!("k_{kind}_a")), root.join(format!("k_{kind}_b")));
        for (dir, threads) in [(&a, "4"), (&b, "1")] {
            let mut args = vec!["kernel", "build", "--type", kind, "--grid", "--out", p(dir)];
            args.extend(&extra);
            let r = run_env(&args, &[("SPINWIG_THREADS", threads)]);
            if r.code != 0 {
                bad.push(format!("build {kind}: {}", r.stderr));
            }
            let v = dir.join("verify");
            let r = run_env(
                &["verify", "--manifest", p(&dir.join("manifest.json")), "--out", p(&v)],
                &[("SPINWIG_THREADS", threads)],
            );
            if r.code != 0 {
                bad.push(format!("verify {kind}: {}", r.stderr));
            }
        }
        let _ = fs::rename(a.join("verify/sw_report.json"), a.join("sw_report.json"));
        let _ = fs::rename(b.join("verify/sw_report.json"), b.join("sw_report.json"));
        let _ = fs::remove_dir(a.join("verify"));
        let _ = fs::remove_dir(b.join("verify"));
        bad.extend(same_tree(&a, &b));
    }
    bad
}

/// Runs the exit-code cases; returns mismatches.
pub fn exit_code_failures(root: &Path) -> Vec<String> {
    let mut bad = Vec::new();
    let mut expect = |what: &str, want: i32, r: Run| {
        if r.code != want {
            bad.push(format!("{what}: expected {want}, got {} ({})", r.code, r.stderr.trim()));
        }
    };
    let k = root.join("kernel");
    expect("build parity", 0, run(&["kernel", "build", "--type", "parity", "--dim", "2", "--out", p(&k)]));
    let manifest = k.join("manifest.json");
    expect("verify", 0, run(&["verify", "--manifest", p(&manifest), "--out", p(&root.join("v"))]));

    let mut broken = read(&manifest);
    broken["c_delta"] = json!(0.6);
    let bm = write_config(root, "broken_manifest.json", &broken);
    expect("verify corrupted", 1, run(&["verify", "--manifest", p(&bm), "--out", p(&root.join("v1"))]));

    expect("unknown type", 2, run(&["kernel", "build", "--type", "foo", "--out", p(&k)]));
    expect("bad dimension", 2, run(&["kernel", "build", "--type", "parity", "--dim", "1", "--out", p(&k)]));
    expect("unknown flag", 2, run(&["kernel", "build", "--bogus"]));
    expect(
        "missing manifest",
        2,
        run(&["verify", "--manifest", p(&root.join("nope.json")), "--out", p(&root.join("v2"))]),
    );
    let junk = root.join("junk.json");
    fs::write(&junk, "{ not json").unwrap();
    expect("malformed config", 2, run(&["pipeline", "--config", p(&junk), "--out", p(&root.join("p0"))]));
    let unknown = write_config(
        root,
        "unknown_noise.json",
        &json!({"state": {"random": {"dim": 2}}, "noise": {"kind": "amplitude_damping"}}),
    );
    expect("unknown noise", 2, run(&["pipeline", "--config", p(&unknown), "--out", p(&root.join("p1"))]));
    expect(
        "bad thread count",
        2,
        run_env(&["kernel", "build", "--type", "parity", "--dim", "2", "--out", p(&k)], &[("SPINWIG_THREADS", "x")]),
    );

    expect(
        "brif below bandwidth",
        3,
        run(&["kernel", "build", "--type", "brif", "--dim", "3", "--nmax", "1", "--out", p(&root.join("k3"))]),
    );

    let pipe = |name: &str, cfg: Value| {
        let path = write_config(root, &format!("{name}.json"), &cfg);
        run(&["pipeline", "--config", p(&path), "--out", p(&root.join(name))])
    };
    expect(
        "asymmetric dephasing",
        4,
        pipe(
            "asym",
            json!({"state": {"random": {"dim": 2}},
                   "noise": {"kind": "dephasing", "distribution": {"name": "wrapped-gaussian", "mean": 0.2, "sigma": 0.3}}}),
        ),
    );
    expect(
        "uniform dephasing",
        4,
        pipe(
            "uniform",
            json!({"state": {"random": {"dim": 2}},
                   "noise": {"kind": "dephasing", "distribution": {"name": "uniform", "quadrature_points": 16}}}),
        ),
    );
    expect(
        "kernel/noise mismatch",
        4,
        pipe(
            "mismatch",
            json!({"state": {"random": {"dim": 2}},
                   "noise": {"kind": "dephasing", "distribution": {"name": "delta", "at": 0.1}},
                   "kernel": {"constructor": "parity", "dim": 3}}),
        ),
    );
    expect(
        "state/noise mismatch",
        4,
        pipe(
            "state_mismatch",
            json!({"state": {"random": {"dim": 2}},
                   "noise": {"kind": "zz_rotation", "distribution": {"name": "delta", "at": 0.1}}}),
        ),
    );
    expect(
        "weak entangling",
        4,
        pipe(
            "weak",
            json!({"state": {"random": {"dim": 4}},
                   "noise": {"kind": "weak_entangling", "params": {"n": 2},
                             "distribution": {"name": "wrapped-gaussian", "sigma": 0.05}}}),
        ),
    );
    expect("dephasing pipeline", 0, pipe("ok", dephasing_config()));
    bad
}

/// Emits every JSON artifact and validates it against its schema.
pub fn schema_failures(root: &Path) -> Vec<String> {
    let mut bad = Vec::new();
    let k = root.join("kernel");
    let r = run(&["kernel", "build", "--type", "zz", "--grid", "--out", p(&k)]);
    if r.code != 0 {
        return vec![format!("build failed: {}", r.stderr)];
    }
    bad.extend(schema_errors("manifest", &read(&k.join("manifest.json"))));
    bad.extend(schema_errors("grid", &read(&k.join("grid.json"))));
    let v = root.join("verify");
    run(&["verify", "--manifest", p(&k.join("manifest.json")), "--out", p(&v)]);
    bad.extend(schema_errors("sw_report", &read(&v.join("sw_report.json"))));
    for (name, cfg) in [
        ("dephasing", dephasing_config()),
        ("exchange", exchange_config()),
        ("local", local_config()),
    ] {
        let path = write_config(root, &format!("{name}.json"), &cfg);
        let out = root.join(name);
        let r = run(&["pipeline", "--config", p(&path), "--out", p(&out)]);
        if r.code != 0 {
            bad.push(format!("pipeline {name}: {}", r.stderr));
            continue;
        }
        bad.extend(schema_errors("mitigation_report", &read(&out.join("mitigation_report.json"))));
        bad.extend(schema_errors("profile", &read(&out.join("profile.json"))));
        bad.extend(schema_errors("noise_spec", &cfg["noise"]));
    }
    bad
}
