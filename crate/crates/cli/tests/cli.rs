use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use evflex_cli::output::RobustSummary;

fn evflex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evflex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const FOUR_VEHICLES: &str = r#"{
  "steps": 4,
  "power": 1.5,
  "population": [[0.7, 1.0], [2.7, 3.3], [3.8, 4.6], [5.0, 5.3]],
  "profile": [5.2, 4.2, 2.3, 0.5],
  "distribution": { "atoms": [[0.7, 1.0], [2.7, 3.3], [3.8, 4.6], [5.0, 5.3]] },
  "robust": { "n": 4, "epsilon": 0.2 },
  "harness": { "n": 4, "epsilons": [0.0, 0.2, 0.4], "trials": 200, "seed": 3 }
}"#;

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn member_on_lower_bound_emits_witness() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", FOUR_VEHICLES);
    let out = evflex(&["member", s.to_str().unwrap(), "--witness"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["member"], true);
    assert_eq!(v["certificate"]["kind"], "decomposition");
    assert_eq!(v["certificate"]["per_vehicle"].as_array().unwrap().len(), 4);
}

#[test]
fn member_outside_reports_cut() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", FOUR_VEHICLES);
    let out = evflex(&[
        "member",
        s.to_str().unwrap(),
        "--profile",
        "6,4.7,1.5,0",
        "--witness",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["member"], false);
    assert_eq!(v["certificate"]["steps"], serde_json::json!([1, 2]));
}

#[test]
fn aggregate_reports_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", FOUR_VEHICLES);
    let out = evflex(&["aggregate", s.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let lo: Vec<f64> = serde_json::from_value(v["nu_lo"].clone()).unwrap();
    assert_eq!(lo, vec![5.2, 4.2, 2.3, 0.5]);
    assert_eq!(v["vertices"].as_array().unwrap().len(), 5);
}

#[test]
fn radius_below_projection_cost_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", FOUR_VEHICLES);
    let out = evflex(&[
        "robust",
        s.to_str().unwrap(),
        "--n",
        "2",
        "--epsilon",
        "0.01",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("eps0 = 1.55"), "{err}");
}

#[test]
fn robust_summary_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", FOUR_VEHICLES);
    let target = dir.path().join("r.json");
    let out = evflex(&[
        "robust",
        s.to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&target).unwrap();
    let summary: RobustSummary = serde_json::from_str(&text).unwrap();
    assert!(!summary.empty);
    assert!(summary.distance_lo <= 0.2 + 1e-9 && summary.distance_hi <= 0.2 + 1e-9);
    assert_eq!(serde_json::to_string_pretty(&summary).unwrap() + "\n", text);
}

#[test]
fn input_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(
        evflex(&["aggregate", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let broken = write(dir.path(), "broken.json", "{\"steps\": ");
    assert_eq!(
        evflex(&["aggregate", broken.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"steps": 2, "distribution": {"atoms": [[0, 1], [1, 2]], "weights": [0.5, 0.4]}, "robust": {"n": 1, "epsilon": 1}}"#,
    );
    let out = evflex(&["robust", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("distribution.weights"));
    let no_pop = write(dir.path(), "empty.json", "{}");
    assert_eq!(
        evflex(&["aggregate", no_pop.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn montecarlo_is_seeded_and_refits() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", FOUR_VEHICLES);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, extra) in [(&a, None), (&b, Some("--sequential"))] {
        let mut args = vec![
            "montecarlo",
            s.to_str().unwrap(),
            "--out",
            path.to_str().unwrap(),
        ];
        args.extend(extra);
        assert_eq!(evflex(&args).status.code(), Some(0));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with(
        "# seed=3\nepsilon,epsilon_sq,N,T,trials,violations,beta_hat,ci_lo,ci_hi,degenerate\n"
    ));

    let out = evflex(&["montecarlo", s.to_str().unwrap(), "--seed", "11"]);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("# seed=11\n"));
}

#[test]
fn unseeded_runs_record_the_generated_seed() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", &FOUR_VEHICLES.replace(", \"seed\": 3", ""));
    let out = evflex(&["montecarlo", s.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let seed = stderr
        .lines()
        .find_map(|l| l.strip_prefix("seed="))
        .expect("seed reported");
    assert!(String::from_utf8_lossy(&out.stdout).starts_with(&format!("# seed={seed}\n")));
}

#[test]
fn fit_constants_recovers_synthetic_constants() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from(
        "# seed=1\nepsilon,epsilon_sq,N,T,trials,violations,beta_hat,ci_lo,ci_hi,degenerate\n",
    );
    for (k, eps) in [0.1f64, 0.2, 0.3, 0.4].iter().enumerate() {
        let beta = 2.0 * (-1.5 * 10.0 * eps * eps).exp();
        csv += &format!(
            "{eps:.16e},{:.16e},10,24,1000000,{},{beta:.16e},0,1,false\n",
            eps * eps,
            1000 + k
        );
    }
    let path = write(dir.path(), "rows.csv", &csv);
    let out = evflex(&["fit-constants", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["c1"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!((v["c2"].as_f64().unwrap() - 1.5).abs() < 1e-6);
}

#[test]
fn fit_constants_needs_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("mc.csv");
    std::fs::write(
        &csv,
        "# seed=1\nepsilon,epsilon_sq,N,T,trials,violations,beta_hat,ci_lo,ci_hi,degenerate\n\
         1e-1,1e-2,4,4,10,3,3e-1,0,1,false\n\
         2e-1,4e-2,4,4,10,0,0e0,0,1,false\n",
    )
    .unwrap();
    let out = evflex(&["fit-constants", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient data"));
}

#[test]
fn documented_examples_run() {
    let docs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples");
    let four_vehicles = docs.join("four_vehicles.json");
    for cmd in ["aggregate", "member", "robust"] {
        let out = evflex(&[cmd, four_vehicles.to_str().unwrap()]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{cmd}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let experiment = docs.join("experiment.json");
    let out = evflex(&["montecarlo", experiment.to_str().unwrap(), "--trials", "20"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 8);
}
