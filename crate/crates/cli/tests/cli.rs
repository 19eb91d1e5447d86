mod common;

use common::*;

#[test]
fn reruns_are_byte_identical() {
    let bad = determinism_failures(&scratch("determinism"));
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn exit_code_contract() {
    let bad = exit_code_failures(&scratch("exit_codes"));
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn emitted_json_matches_schemas() {
    let bad = schema_failures(&scratch("schemas"));
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn schemas_reject_bad_documents() {
    let root = scratch("schema_negative");
    let k = root.join("k");
    assert_eq!(run(&["kernel", "build", "--type", "parity", "--dim", "2", "--out", p(&k)]).code, 0);
    let mut m = read(&k.join("manifest.json"));
    m["params"]["constructor"] = "wigner".into();
    assert!(!schema_errors("manifest", &m).is_empty());
    let noise = serde_json::json!({"kind": "dephasing", "distribution": {"name": "wrapped-gaussian"}});
    assert!(!schema_errors("noise_spec", &noise).is_empty());
}

#[test]
fn pipeline_outputs() {
    let root = scratch("pipeline_outputs");
    let cfg = write_config(&root, "c.json", &dephasing_config());
    let out = root.join("out");
    let r = run(&["pipeline", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = read(&out.join("mitigation_report.json"));
    assert!(rep["max_error"].as_f64().unwrap() < 1e-8);
    assert!(rep["kernel"]["convolution_error"].as_f64().unwrap() < 1e-7);
    assert!(rep["kernel"]["sw_pass"].as_bool().unwrap());
    let f2 = rep["frequency_factors"]["2"].as_f64().unwrap();
    assert!((f2 - (-2.0f64 * 0.09).exp()).abs() < 1e-10);
    let obs = &rep["observables"][0];
    assert!(obs["error"].as_f64().unwrap() < 1e-8);
    let csv = std::fs::read_to_string(out.join("wigner.csv")).unwrap();
    assert!(csv.starts_with("theta,eta,weight,w_exact,w_noisy\n"));
    let raw = std::fs::read_to_string(out.join("noisy_expectations.csv")).unwrap();
    assert_eq!(raw.lines().count(), 4);
}

#[test]
fn build_writes_coefficients() {
    let root = scratch("build_outputs");
    let k = root.join("k");
    let r = run(&["kernel", "build", "--type", "tensor", "--dims", "2,2", "--out", p(&k)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv = std::fs::read_to_string(k.join("coefficients.csv")).unwrap();
    assert!(csv.starts_with("class,i,n,j,value\n"));
    assert!(!k.join("grid.json").exists());
    let m = read(&k.join("manifest.json"));
    assert_eq!(m["dim"], 4);
    assert!(m["grid"].get("file").is_none());
}
