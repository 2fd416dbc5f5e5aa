use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use propfit::models::{
    ci_path_loss, los_probability, CiParams, Distance3D, Frequency, LosProbParams,
};

fn propfit(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_propfit"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("running propfit")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn write_spec(dir: &Path, body: &str) {
    std::fs::write(dir.join("spec.json"), body).unwrap();
}

const CI_SPEC: &str = r#"{"path_loss": {"model": "ci", "ple": 3.0},
    "frequencies": [2, 10, 18, 28], "distance_min_m": 10, "distance_max_m": 1000,
    "sigma_db": 6.7, "n_samples": 6000, "seed": 11}"#;

#[test]
fn fit_pathloss_recovers_ci_and_reports_empty_partition() {
    let tmp = tempfile::tempdir().unwrap();
    write_spec(tmp.path(), CI_SPEC);
    assert_eq!(
        code(&propfit(
            &["synth", "--spec", "spec.json", "--out-dir", "syn"],
            tmp.path()
        )),
        0
    );
    let out = propfit(
        &[
            "fit-pathloss",
            "--input",
            "syn/dataset.csv",
            "--out-dir",
            "fit",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let report = read_json(&tmp.path().join("fit/fit_report.json"));
    let parts = report["partitions"].as_array().unwrap();
    assert_eq!(parts[0]["partition"], "los");
    assert_eq!(parts[0]["n_samples"], 0);
    for entry in parts[0]["fits"].as_array().unwrap() {
        assert_eq!(entry["status"], "skipped");
        assert_eq!(entry["reason"], "partition is empty");
    }

    let fits = parts[1]["fits"].as_array().unwrap();
    assert_eq!(fits.len(), 5);
    let sigma = |name: &str| {
        let e = fits.iter().find(|e| e["model"] == name).unwrap();
        assert_eq!(e["status"], "ok");
        e["sigma_db"].as_f64().unwrap()
    };
    let ple = fits[0]["params"]["ple"].as_f64().unwrap();
    assert!((ple - 3.0).abs() < 0.03, "{ple}");
    assert!(sigma("abg") <= sigma("ci") + 1e-9);
    assert!(sigma("ci-dual") <= sigma("ci") + 1e-9);
    assert!(sigma("fi-dual") <= sigma("fi") + 1e-9);

    let curves = std::fs::read_to_string(tmp.path().join("fit/curves.csv")).unwrap();
    assert!(curves.starts_with("partition,model,freq_ghz,distance_m,path_loss_db\n"));
    let scatter = std::fs::read_to_string(tmp.path().join("fit/scatter.csv")).unwrap();
    assert_eq!(scatter.lines().count(), 6001);

    let manifest = read_json(&tmp.path().join("fit/run_manifest.json"));
    assert_eq!(manifest["command"], "fit-pathloss");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn models_flag_selects_families() {
    let tmp = tempfile::tempdir().unwrap();
    write_spec(tmp.path(), CI_SPEC);
    propfit(
        &["synth", "--spec", "spec.json", "--out-dir", "syn"],
        tmp.path(),
    );
    let out = propfit(
        &[
            "fit-pathloss",
            "--input",
            "syn/dataset.csv",
            "--out-dir",
            "fit",
            "--models",
            "ci,fi",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), 0);
    let report = read_json(&tmp.path().join("fit/fit_report.json"));
    let names: Vec<&str> = report["partitions"][1]["fits"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["model"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["ci", "fi"]);
    let bad = propfit(
        &[
            "fit-pathloss",
            "--input",
            "syn/dataset.csv",
            "--out-dir",
            "x",
            "--models",
            "ci,xyz",
        ],
        tmp.path(),
    );
    assert_eq!(code(&bad), 2);
}

#[test]
fn all_los_file_scores_uma_against_its_formula() {
    let tmp = tempfile::tempdir().unwrap();
    let mut csv = String::from("freq_ghz,distance_m,path_loss_db,los\n");
    for i in 0..300 {
        csv.push_str(&format!("28,{},{},los\n", 10.0 + i as f64 * 0.8, 100.0));
    }
    std::fs::write(tmp.path().join("los.csv"), csv).unwrap();
    let out = propfit(
        &["fit-losprob", "--input", "los.csv", "--out-dir", "out"],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let curves = std::fs::read_to_string(tmp.path().join("out/los_curves.csv")).unwrap();
    let mut lines = curves.lines();
    assert_eq!(
        lines.next().unwrap(),
        "distance_m,empirical,support,uma3gpp,d1d2,nyu,invexp"
    );
    let mut sq = Vec::new();
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[1], 1.0);
        let p = los_probability(cols[0], &LosProbParams::uma_3gpp()).unwrap();
        sq.push((1.0 - p) * (1.0 - p));
    }
    let expected = sq.iter().sum::<f64>() / sq.len() as f64;
    let fit = read_json(&tmp.path().join("out/los_fit.json"));
    let uma = fit["fits"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["kind"] == "uma3gpp")
        .unwrap();
    let mse = uma["mse"].as_f64().unwrap();
    assert!((mse - expected).abs() < 1e-12, "{mse} vs {expected}");
    assert_eq!(uma["d1"], 18.0);
    assert_eq!(uma["d2"], 63.0);
}

#[test]
fn synthetic_inv_exp_ranks_first() {
    let tmp = tempfile::tempdir().unwrap();
    write_spec(
        tmp.path(),
        r#"{"path_loss": {"model": "ci", "ple": 2.5},
            "los_model": {"kind": "invexp", "d1": 0.0054, "d2": 97.0},
            "frequencies": [28], "distance_min_m": 10, "distance_max_m": 500,
            "sampling": "uniform", "sigma_db": 4, "n_samples": 30000, "seed": 5}"#,
    );
    assert_eq!(
        code(&propfit(
            &["synth", "--spec", "spec.json", "--out-dir", "syn"],
            tmp.path()
        )),
        0
    );
    assert_eq!(
        code(&propfit(
            &[
                "fit-losprob",
                "--input",
                "syn/dataset.csv",
                "--out-dir",
                "out"
            ],
            tmp.path()
        )),
        0
    );
    let fit = read_json(&tmp.path().join("out/los_fit.json"));
    let rows = fit["fits"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["kind"], "invexp");
    assert_eq!(rows[0]["rank"], 1);
    let mses: Vec<f64> = rows.iter().map(|r| r["mse"].as_f64().unwrap()).collect();
    assert!(mses.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn missing_los_column_is_a_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("bad.csv"),
        "freq_ghz,distance_m,path_loss_db\n28,100,120\n",
    )
    .unwrap();
    let out = propfit(
        &["fit-losprob", "--input", "bad.csv", "--out-dir", "out"],
        tmp.path(),
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing required column 'los'"));
}

#[test]
fn shadow_on_exact_data_gives_zero_line() {
    let tmp = tempfile::tempdir().unwrap();
    let p = CiParams { ple: 2.1 };
    let mut csv = String::from("freq_ghz,distance_m,path_loss_db,los\n");
    for i in 0..200 {
        let d = 10.0 + i as f64 * 1.7;
        let pl = ci_path_loss(
            Frequency::ghz(28.0).unwrap(),
            Distance3D::meters(d).unwrap(),
            &p,
        );
        csv.push_str(&format!("28,{d},{pl},los\n"));
    }
    std::fs::write(tmp.path().join("exact.csv"), csv).unwrap();
    let out = propfit(
        &[
            "shadow",
            "--input",
            "exact.csv",
            "--out-dir",
            "sf",
            "--models",
            "ci",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let sf = read_json(&tmp.path().join("sf/sf_profile.json"));
    let los = &sf["profiles"][0];
    assert_eq!(los["status"], "ok");
    assert!(los["a_db_per_m"].as_f64().unwrap().abs() < 1e-9);
    assert!(los["b_db"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(sf["profiles"][1]["status"], "skipped");
    let bins = std::fs::read_to_string(tmp.path().join("sf/sf_bins.csv")).unwrap();
    assert!(bins.starts_with("partition,model,center_m,magnitude_db,count\n"));

    let bad = propfit(
        &[
            "shadow",
            "--input",
            "exact.csv",
            "--out-dir",
            "sf2",
            "--bin-width",
            "0",
        ],
        tmp.path(),
    );
    assert_eq!(code(&bad), 2);
    let bad = propfit(
        &[
            "shadow",
            "--input",
            "exact.csv",
            "--out-dir",
            "sf2",
            "--sf-stat",
            "median",
        ],
        tmp.path(),
    );
    assert_eq!(code(&bad), 2);
}

#[test]
fn eval_prints_golden_values() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let out = propfit(args, tmp.path());
        (code(&out), String::from_utf8(out.stdout).unwrap())
    };
    let (c, s) = run(&["eval", "--model", "fspl", "--freqs", "1,28"]);
    assert_eq!(c, 0);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("freq_ghz,fspl_db"));
    for (line, golden) in lines.zip([32.44778322188337, 61.39094384872776]) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - golden).abs() < 1e-9, "{line}");
    }

    let (c, s) = run(&[
        "eval",
        "--model",
        "abg",
        "--params",
        "alpha=3.5,beta=13.8,gamma=2.5",
        "--freqs",
        "28",
        "--distances",
        "100",
    ]);
    assert_eq!(c, 0);
    let v: f64 = s
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!((v - 119.97895078355548).abs() < 1e-10);

    let (c, s) = run(&[
        "eval",
        "--model",
        "invexp",
        "--params",
        "d1=0.0054,d2=97",
        "--distances",
        "97",
    ]);
    assert_eq!((c, s.as_str()), (0, "distance_m,los_probability\n97,0.5\n"));

    let (c, s) = run(&[
        "eval",
        "--model",
        "fi",
        "--params",
        "alpha=65.7,beta=1.9",
        "--distances",
        "1,10",
    ]);
    assert_eq!(
        (c, s.as_str()),
        (
            0,
            "distance_m,path_loss_db\n1,65.700000000000003\n10,84.700000000000003\n"
        )
    );

    let (c, _) = run(&[
        "eval",
        "--model",
        "ci",
        "--params",
        "n=3",
        "--freqs",
        "28",
        "--distances",
        "0.5",
    ]);
    assert_eq!(c, 2);
    let (c, _) = run(&[
        "eval",
        "--model",
        "ci",
        "--params",
        "q=3",
        "--freqs",
        "28",
        "--distances",
        "10",
    ]);
    assert_eq!(c, 2);
    let (c, _) = run(&["eval", "--model", "warp", "--distances", "10"]);
    assert_eq!(c, 2);
}

#[test]
fn synth_is_deterministic_and_exact_at_zero_sigma() {
    let tmp = tempfile::tempdir().unwrap();
    write_spec(
        tmp.path(),
        r#"{"path_loss": {"model": "ci", "ple": 3.0}, "frequencies": [28],
            "distance_min_m": 10, "distance_max_m": 100, "n_samples": 50, "seed": 1}"#,
    );
    for dir in ["a", "b"] {
        assert_eq!(
            code(&propfit(
                &["synth", "--spec", "spec.json", "--out-dir", dir],
                tmp.path()
            )),
            0
        );
    }
    for file in ["dataset.csv", "dataset.spec.json", "run_manifest.json"] {
        assert_eq!(
            std::fs::read(tmp.path().join("a").join(file)).unwrap(),
            std::fs::read(tmp.path().join("b").join(file)).unwrap(),
            "{file}"
        );
    }
    let csv = std::fs::read_to_string(tmp.path().join("a/dataset.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let d: f64 = cols[1].parse().unwrap();
        let pl: f64 = cols[2].parse().unwrap();
        let model = ci_path_loss(
            Frequency::ghz(28.0).unwrap(),
            Distance3D::meters(d).unwrap(),
            &CiParams { ple: 3.0 },
        );
        assert!((pl - model).abs() < 1e-12);
    }
    let sidecar = read_json(&tmp.path().join("a/dataset.spec.json"));
    assert!(sidecar["generator"]
        .as_str()
        .unwrap()
        .starts_with("chacha8"));
    assert_eq!(sidecar["n_records"], 50);
    assert_eq!(sidecar["spec"]["seed"], 1);

    assert_eq!(
        code(&propfit(
            &[
                "synth",
                "--spec",
                "spec.json",
                "--out-dir",
                "c",
                "--seed",
                "2"
            ],
            tmp.path()
        )),
        0
    );
    assert_ne!(
        std::fs::read(tmp.path().join("a/dataset.csv")).unwrap(),
        std::fs::read(tmp.path().join("c/dataset.csv")).unwrap()
    );
    write_spec(
        tmp.path(),
        r#"{"frequencies": [28], "distance_min_m": 10, "distance_max_m": 100, "n_samples": 5, "seed": 1}"#,
    );
    assert_eq!(
        code(&propfit(
            &["synth", "--spec", "spec.json", "--out-dir", "d"],
            tmp.path()
        )),
        2
    );
}

#[test]
fn validate_exit_codes_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let good = "freq_ghz,distance_m,path_loss_db,los\n28,100,120,los\n28,200,130,nlos\n";
    std::fs::write(tmp.path().join("good.csv"), good).unwrap();
    std::fs::write(
        tmp.path().join("partial.csv"),
        format!("{good}28,0.5,90,los\n"),
    )
    .unwrap();
    std::fs::write(
        tmp.path().join("allbad.csv"),
        "freq_ghz,distance_m,path_loss_db,los\n28,x,1,los\n",
    )
    .unwrap();
    std::fs::write(tmp.path().join("empty.csv"), "").unwrap();

    assert_eq!(
        code(&propfit(&["validate", "--input", "good.csv"], tmp.path())),
        0
    );
    let out = propfit(
        &["validate", "--input", "partial.csv", "--out-dir", "v"],
        tmp.path(),
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stdout).contains("line 4: distance below 1 m reference"));
    let report = read_json(&tmp.path().join("v/validation.json"));
    assert_eq!(report["valid_rows"], 2);
    assert_eq!(report["rejected"][0]["line"], 4);
    assert_eq!(
        code(&propfit(&["validate", "--input", "allbad.csv"], tmp.path())),
        2
    );
    assert_eq!(
        code(&propfit(&["validate", "--input", "empty.csv"], tmp.path())),
        2
    );
    assert_eq!(
        code(&propfit(
            &["validate", "--input", "missing.csv"],
            tmp.path()
        )),
        2
    );
}

#[test]
fn unwritable_output_is_an_internal_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("good.csv"),
        "freq_ghz,distance_m,path_loss_db,los\n28,100,120,los\n28,200,130,los\n",
    )
    .unwrap();
    // a regular file where the output directory should go
    std::fs::write(tmp.path().join("blocker"), "").unwrap();
    let out = propfit(
        &[
            "fit-pathloss",
            "--input",
            "good.csv",
            "--out-dir",
            "blocker/out",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), 1);
}
