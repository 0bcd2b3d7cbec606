use std::path::Path;
use std::process::Command;

use disperse_core::likelihood::log_likelihood;
use disperse_core::simulate::sample_observations;
use disperse_core::{DispersionFn, SeedRecord};
use disperse_harness::cli::run_with_output;
use disperse_harness::io::parse_observations_csv;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String) {
    let mut buf = Vec::new();
    let mut argv = vec!["disperse"];
    argv.extend_from_slice(args);
    let code = run_with_output(argv, &mut buf);
    (code, String::from_utf8(buf).unwrap())
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, stdout) = run(&[
        "simulate",
        "--out-dir",
        d,
        "--s0",
        "const:1",
        "--n",
        "16",
        "--seed",
        "7",
        "--out",
        "obs.csv",
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(dir.path().join("obs.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "i,t,x,y");
    assert_eq!(lines.len(), 18);
    assert!(lines[1].starts_with("0,0,0,"));
    let echo: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(echo["config"]["n"], 16);
    assert_eq!(json(&dir.path().join("obs.json")), echo);
}

#[test]
fn simulate_matches_library_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let args = [
        "simulate",
        "--out-dir",
        d,
        "--s0",
        "linear:1,1.5",
        "--n",
        "200",
        "--seed",
        "11",
        "--stream",
        "3",
    ];
    assert_eq!(run(&args).0, 0);
    let first = std::fs::read(dir.path().join("observations.csv")).unwrap();
    assert_eq!(run(&args).0, 0);
    assert_eq!(
        first,
        std::fs::read(dir.path().join("observations.csv")).unwrap()
    );

    let parsed =
        parse_observations_csv(std::str::from_utf8(&first).unwrap(), Path::new("x")).unwrap();
    let direct =
        sample_observations(&DispersionFn::linear(1.0, 1.5), 200, SeedRecord::new(11, 3)).unwrap();
    assert_eq!(parsed.values(), direct.values());
}

#[test]
fn loglik_round_trip_matches_in_memory() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(
        run(&["simulate", "--out-dir", d, "--n", "500", "--seed", "5"]).0,
        0
    );
    let obs_path = dir.path().join("observations.csv");
    let (code, stdout) = run(&[
        "loglik",
        "--out-dir",
        d,
        "--obs",
        obs_path.to_str().unwrap(),
        "--s",
        "const:1.2",
        "--s0",
        "linear:1,1.5",
        "--diagnostics",
        "diag.csv",
    ]);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&stdout).unwrap();
    let direct =
        sample_observations(&DispersionFn::linear(1.0, 1.5), 500, SeedRecord::new(5, 0)).unwrap();
    let expected = log_likelihood(&DispersionFn::constant(1.2), &direct).unwrap();
    let got = report["loglik"].as_f64().unwrap();
    assert!(
        (got - expected).abs() <= 1e-9 * expected.abs().max(1.0),
        "{got} vs {expected}"
    );
    let ratio = report["log_ratio"].as_f64().unwrap();
    let total = report["sn_total"].as_f64().unwrap();
    assert!((ratio / 500.0 - total).abs() < 1e-10);

    let diag = std::fs::read_to_string(dir.path().join("diag.csv")).unwrap();
    assert_eq!(diag.lines().next(), Some("i,z,f,w"));
    assert_eq!(diag.lines().count(), 501);
    let z_sum: f64 = diag
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((z_sum - ratio).abs() < 1e-8);
}

#[test]
fn unknown_flag_exits_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(run(&["simulate", "--out-dir", d, "--bogus", "1"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert!(files(dir.path()).is_empty());
}

#[test]
fn class_violation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    // slope 2 exceeds the Lipschitz bound
    assert_eq!(
        run(&["simulate", "--out-dir", d, "--s0", "linear:1,3"]).0,
        2
    );
    assert_eq!(run(&["simulate", "--out-dir", d, "--kappa", "3"]).0, 2);
    assert!(files(dir.path()).is_empty());
}

#[test]
fn missing_observations_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    assert_eq!(
        run(&[
            "loglik",
            "--obs",
            missing.to_str().unwrap(),
            "--s",
            "const:1"
        ])
        .0,
        1
    );
}

#[test]
fn sigma0_prints_constant() {
    let (code, stdout) = run(&["sigma0"]);
    assert_eq!(code, 0);
    let v: f64 = stdout.split_whitespace().last().unwrap().parse().unwrap();
    assert!((v - 55.0751068986353).abs() < 1e-9);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cfg = dir.path().join("sim.json");
    std::fs::write(&cfg, r#"{"n": 8, "seed": 3, "s0": "const:1.5"}"#).unwrap();
    let (code, stdout) = run(&[
        "simulate",
        "--out-dir",
        d,
        "--config",
        cfg.to_str().unwrap(),
        "--n",
        "12",
    ]);
    assert_eq!(code, 0);
    let echo: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(echo["config"]["n"], 12);
    assert_eq!(echo["config"]["seed"], 3);
    assert_eq!(echo["config"]["s0"], "const:1.5");

    std::fs::write(&cfg, r#"{"n": 8, "typo": 1}"#).unwrap();
    assert_eq!(
        run(&[
            "simulate",
            "--out-dir",
            d,
            "--config",
            cfg.to_str().unwrap()
        ])
        .0,
        2
    );
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_disperse"))
        .args(["simulate", "--n", "4"])
        .env("DISPERSE_OUT_DIR", dir.path())
        .current_dir(dir.path().parent().unwrap())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert_eq!(files(dir.path()), ["observations.csv", "observations.json"]);

    let bad = Command::new(env!("CARGO_BIN_EXE_disperse"))
        .arg("--nope")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn posterior_backends_write_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(
        run(&["simulate", "--out-dir", d, "--n", "100", "--seed", "9"]).0,
        0
    );
    let obs = dir.path().join("observations.csv");
    let obs = obs.to_str().unwrap();

    let net = [
        "posterior",
        "--out-dir",
        d,
        "--obs",
        obs,
        "--backend",
        "net",
        "--eps",
        "0.5",
        "--summary",
        "net.json",
        "--manifest",
        "manifest.json",
    ];
    assert_eq!(run(&net).0, 0);
    let s = json(&dir.path().join("net.json"));
    assert_eq!(s["backend"], "net");
    let outside: Vec<f64> = s["outside_mass"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(outside.len(), 4);
    assert!(outside.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert_eq!(s["mean_curve"]["values"].as_array().unwrap().len(), 21);
    assert_eq!(
        json(&dir.path().join("manifest.json"))["count"],
        s["support_size"]
    );

    let mcmc = [
        "posterior",
        "--out-dir",
        d,
        "--obs",
        obs,
        "--iters",
        "3000",
        "--summary",
        "mcmc.json",
        "--chain",
        "chain.csv",
    ];
    assert_eq!(run(&mcmc).0, 0);
    let first = std::fs::read(dir.path().join("mcmc.json")).unwrap();
    let s = json(&dir.path().join("mcmc.json"));
    assert_eq!(s["backend"], "mcmc");
    let rate = s["acceptance_rate"].as_f64().unwrap();
    assert!(rate > 0.0 && rate < 1.0);
    assert_eq!(s["config"]["iters"], 3000);
    let chain = std::fs::read_to_string(dir.path().join("chain.csv")).unwrap();
    assert!(chain.starts_with("iter,accepted,v_0"));

    assert_eq!(run(&mcmc).0, 0);
    assert_eq!(first, std::fs::read(dir.path().join("mcmc.json")).unwrap());
}

#[test]
fn small_bench_writes_csv_summary_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, stdout) = run(&[
        "bench-contraction",
        "--out-dir",
        d,
        "--n-grid",
        "100,200,400",
        "--replicates",
        "2",
        "--mcmc-sweeps",
        "200",
        "--quiet",
        "--plot",
        "plot.svg",
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("slope="));
    let csv = std::fs::read_to_string(dir.path().join("contraction.csv")).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("experiment,n,replicate,stat_name,value,stderr,seed")
    );
    assert!(std::fs::read_to_string(dir.path().join("plot.svg"))
        .unwrap()
        .starts_with("<svg"));
    assert!(json(&dir.path().join("contraction.json"))["slope_fit"].is_object());
}
