use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn swlb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swlb"))
        .args(args)
        .env_remove("SWLB_THREADS")
        .output()
        .expect("run swlb")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", stderr(out)))
}

fn assert_schema(schema_file: &str, instance: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(schema_file);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_file}: {errors:?}");
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

/// 60 rows, probit-friendly: y depends on x with overlap.
fn probit_csv(dir: &Path) -> String {
    let mut s = String::from("y,x,w\n");
    for i in 0..60 {
        let x = (i as f64 - 30.0) / 10.0;
        let y = u8::from((i * 7) % 10 < 5 + (x * 2.0) as i32);
        s.push_str(&format!("{y},{x},{}\n", 1.0 + (i % 4) as f64));
    }
    write(dir, "probit.csv", &s)
}

#[test]
fn gaussian_pmle_on_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "x.csv", "x,w\n0,1\n2,1\n4,1\n");
    let out = swlb(&[
        "fit",
        "--input",
        &csv,
        "--weight-col",
        "w",
        "--covariates",
        "x",
        "--model",
        "gaussian-mean",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["parameters"][0]["estimate"], 2.0);
    assert_eq!(v["interval_method"], "wald");
    assert_schema("fit-report.schema.json", &v);
    for p in v["parameters"].as_array().unwrap() {
        assert!(p["lower"].as_f64().unwrap() <= p["upper"].as_f64().unwrap());
    }
}

#[test]
fn gaussian_reads_response_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "x.csv", "y,w\n1,2\n3,2\n5,4\n");
    let out = swlb(&[
        "fit",
        "--input",
        &csv,
        "--weight-col",
        "w",
        "--response-col",
        "y",
        "--model",
        "gaussian-mean",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(&out)["parameters"][0]["estimate"], 3.5);
}

#[test]
fn bootstrap_with_one_replicate_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let csv = probit_csv(dir.path());
    let out = swlb(&[
        "fit",
        "--input",
        &csv,
        "--weight-col",
        "w",
        "--response-col",
        "y",
        "--covariates",
        "x",
        "--model",
        "probit",
        "--method",
        "swlb",
        "--b",
        "1",
    ]);
    assert_eq!(code(&out), 2);
    let err: Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "input");
}

#[test]
fn bootstrap_fit_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let csv = probit_csv(dir.path());
    let args = |threads: &'static str| {
        swlb(&[
            "--threads",
            threads,
            "fit",
            "--input",
            &csv,
            "--weight-col",
            "w",
            "--response-col",
            "y",
            "--covariates",
            "x",
            "--model",
            "probit",
            "--method",
            "swlb",
            "--b",
            "300",
            "--seed",
            "11",
            "--with-pmle",
            "--max-failures",
            "0.2",
        ])
    };
    let a = args("1");
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let v = json(&a);
    assert_schema("fit-report.schema.json", &v);
    assert_eq!(v["interval_method"], "percentile");
    assert_eq!(v["diagnostics"]["seed"], 11);
    assert_eq!(v["parameters"][0]["name"], "(intercept)");
    assert_eq!(a.stdout, args("1").stdout);
    assert_eq!(a.stdout, args("4").stdout);
}

#[test]
fn separated_probit_exits_with_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "sep.csv", "y,x,w\n0,-2,1\n0,-1,1\n1,1,1\n1,2,1\n");
    let out = swlb(&[
        "fit",
        "--input",
        &csv,
        "--weight-col",
        "w",
        "--response-col",
        "y",
        "--covariates",
        "x",
        "--model",
        "probit",
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("numerical"));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "x.csv", "x,w\n0,1\n2,-1\n4,1\n");
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "fit",
            "--input",
            &csv,
            "--weight-col",
            "w",
            "--covariates",
            "x",
            "--model",
            "gaussian-mean",
        ],
        vec![
            "fit",
            "--input",
            &csv,
            "--weight-col",
            "nope",
            "--covariates",
            "x",
            "--model",
            "gaussian-mean",
        ],
        vec![
            "fit",
            "--input",
            "/nonexistent.csv",
            "--weight-col",
            "w",
            "--model",
            "gaussian-mean",
        ],
        vec!["fit", "--input", &csv, "--weight-col", "w", "--model", "bogus"],
    ];
    for args in cases {
        assert_eq!(code(&swlb(&args)), 2, "{args:?}");
    }
    let out = swlb(&[
        "fit",
        "--input",
        &csv,
        "--weight-col",
        "w",
        "--covariates",
        "x",
        "--model",
        "gaussian-mean",
    ]);
    assert!(stderr(&out).contains("row 2"), "{}", stderr(&out));
}

#[test]
fn check_weights_reports_both_conditions() {
    let out = swlb(&[
        "check-weights",
        "--weights",
        "0.5,1,1.5",
        "--draws",
        "100000",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    assert_schema("weight-diagnostics.schema.json", &v);
    assert_eq!(v["pass"], true);
    let c = &v["coordinates"][2]["unnormalized"];
    assert!((c["mean"].as_f64().unwrap() - 1.5).abs() < 0.02);
    assert!((c["variance"].as_f64().unwrap() - 2.25).abs() < 0.07);

    let out = swlb(&[
        "check-weights",
        "--weights",
        "0.5,1,1.5",
        "--draws",
        "100000",
        "--seed",
        "3",
        "--scheme",
        "dirichlet-centered",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["mean_condition"], true);
    assert_eq!(v["variance_condition"], false);
    assert_eq!(v["pass"], false);
}

#[test]
fn check_weights_rejects_bad_specs() {
    assert_eq!(
        code(&swlb(&["check-weights", "--weights", "0.5,1,1.5", "--draws", "10"])),
        2
    );
    assert_eq!(
        code(&swlb(&["check-weights", "--weights", "0.5,-1", "--draws", "1000"])),
        2
    );
    assert_eq!(
        code(&swlb(&[
            "check-weights",
            "--weights",
            "1,2,3",
            "--n",
            "2",
            "--draws",
            "1000"
        ])),
        2
    );
}

#[test]
fn check_weights_tiles_pattern() {
    let out = swlb(&["check-weights", "--weights", "1,3", "--n", "6", "--draws", "1000"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["n"], 6);
    assert_eq!(v["coordinates"][4]["scaled_weight"], 0.5);
    assert_eq!(v["coordinates"][5]["scaled_weight"], 1.5);
}

#[test]
fn scenarios_are_listed() {
    let out = swlb(&["scenarios"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.contains("sim2-informative-high"));
}

fn small_simulation(dir: &Path, name: &str, threads: &str) -> (Vec<u8>, String) {
    let json_path = dir.join(format!("{name}.json"));
    let out = swlb(&[
        "--threads",
        threads,
        "simulate",
        "--scenario",
        "sim2-informative-high",
        "--seed",
        "5",
        "--replications-override",
        "4",
        "--population-override",
        "4000",
        "--sample-size-override",
        "200",
        "--bootstrap-override",
        "60",
        "--output",
        json_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(json_path.with_extension("csv")).unwrap();
    (std::fs::read(json_path).unwrap(), csv)
}

#[test]
fn simulate_writes_valid_reproducible_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (a, csv) = small_simulation(dir.path(), "a", "1");
    let (b, csv_b) = small_simulation(dir.path(), "b", "3");
    assert_eq!(a, b);
    assert_eq!(csv, csv_b);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_schema("replication-report.schema.json", &v);
    assert_eq!(v["scenario"]["population_size"], 4000);
    assert_eq!(v["methods"].as_array().unwrap().len(), 4);
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("scenario,simulation,population_size,sample_size,b1,rho,"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn simulate_to_stdout_with_method_subset() {
    let out = swlb(&[
        "simulate",
        "--scenario",
        "sim1-representative",
        "--methods",
        "pmle,unweighted",
        "--replications-override",
        "3",
        "--population-override",
        "3000",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    assert_schema("replication-report.schema.json", &v);
    let methods: Vec<&str> = v["methods"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["method"].as_str().unwrap())
        .collect();
    assert_eq!(methods, ["pmle", "unweighted"]);
}

#[test]
fn simulate_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let base =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/sim1-representative.toml"))
            .unwrap();
    let unknown = write(dir.path(), "unknown.toml", &format!("{base}colour = \"blue\"\n"));
    let out = swlb(&["simulate", "--scenario", &unknown]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("colour"), "{}", stderr(&out));

    let zero = write(
        dir.path(),
        "zero.toml",
        &base.replace("replications = 100", "replications = 0"),
    );
    let out = swlb(&["simulate", "--scenario", &zero]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("replications"));

    assert_eq!(
        code(&swlb(&[
            "simulate",
            "--scenario",
            "sim1-representative",
            "--replications-override",
            "0"
        ])),
        2
    );
    assert_eq!(code(&swlb(&["simulate", "--scenario", "no-such-scenario"])), 2);
    assert_eq!(
        code(&swlb(&[
            "simulate",
            "--scenario",
            "sim1-representative",
            "--level",
            "1.2"
        ])),
        2
    );
}

#[test]
fn threads_env_fallback_is_accepted() {
    let out = Command::new(env!("CARGO_BIN_EXE_swlb"))
        .args(["check-weights", "--weights", "1,2", "--draws", "1000"])
        .env("SWLB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let bad = Command::new(env!("CARGO_BIN_EXE_swlb"))
        .args(["scenarios"])
        .env("SWLB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
