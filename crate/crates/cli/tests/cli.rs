use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_povm-coherence"))
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| {
        panic!("stderr is not JSON ({e}): {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<Option<f64>>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| if c.is_empty() { None } else { Some(c.parse().unwrap()) }).collect())
        .collect();
    (header, rows)
}

fn assert_json_close(a: &Value, b: &Value, tol: f64, at: &str) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= tol, "{at}: {x} vs {y}");
        }
        (Value::Array(x), Value::Array(y)) => {
            assert_eq!(x.len(), y.len(), "{at}");
            for (i, (u, v)) in x.iter().zip(y).enumerate() {
                assert_json_close(u, v, tol, &format!("{at}[{i}]"));
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            assert_eq!(x.keys().collect::<Vec<_>>(), y.keys().collect::<Vec<_>>(), "{at}");
            for (k, u) in x {
                assert_json_close(u, &y[k], tol, &format!("{at}.{k}"));
            }
        }
        _ => assert_eq!(a, b, "{at}"),
    }
}

fn assert_csv_close(actual: &str, expected: &str, tol: f64) {
    let (h1, r1) = csv_rows(actual);
    let (h2, r2) = csv_rows(expected);
    assert_eq!(h1, h2);
    assert_eq!(r1.len(), r2.len());
    for (a, b) in r1.iter().zip(&r2) {
        for (x, y) in a.iter().zip(b) {
            match (x, y) {
                (Some(x), Some(y)) => assert!((x - y).abs() <= tol, "{x} vs {y}"),
                _ => assert_eq!(x, y),
            }
        }
    }
}

#[test]
fn validate_reports_incoherent_measurement() {
    let out = run(&["validate", "--povm", &data("incoherent.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["valid"], true);
    assert_eq!(v["incoherent"], true);
    assert!(out.stderr.is_empty());
}

#[test]
fn validate_flags_incomplete_measurement() {
    let out = run(&["validate", "--povm", &data("incomplete.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["valid"], false);
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "validation");
    assert_eq!(err["error"]["code"], 1);
}

#[test]
fn validate_channel_reports_sio_structure() {
    let out = run(&["validate", "--channel", &data("bit_flip.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["sio"], true);
    assert_eq!(v["permutations"][0], serde_json::json!([1, 0]));
    let out = run(&["validate", "--channel", "amplitude-damping:0.3", "--dim", "3"]);
    assert_eq!(stdout_json(&out)["sio"], true);
}

#[test]
fn measurements_with_invalid_components_are_refused() {
    let out = run(&["monotone", "--povm", &data("incomplete.json"), "--which", "linf"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert_eq!(stderr_json(&out)["error"]["kind"], "validation");
}

#[test]
fn linf_of_equatorial_measurement_is_one() {
    let out = run(&["monotone", "--which", "linf", "--povm", &data("zpi2.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["value"], 1.0);
    assert_eq!(v["argmax_pair"], serde_json::json!([0, 1]));
    let l1 = stdout_json(&run(&["monotone", "--which", "l1", "--povm", &data("zpi2.json")]));
    assert_eq!(l1["value"], 2.0);
    assert_eq!(l1["half"], 1.0);
}

#[test]
fn relative_entropy_bracket_for_builtin() {
    let out = run(&["monotone", "--which", "cs", "--povm", "x", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let (lo, hi) = (v["bracket"][0].as_f64().unwrap(), v["bracket"][1].as_f64().unwrap());
    assert!(lo <= hi && hi - lo <= 1e-3 && (lo - 1.0).abs() < 1e-3);
    assert_eq!(v["witness"]["incoherent_povm"]["outcomes"], 2);
}

#[test]
fn bracket_iteration_cap_exits_with_convergence_code() {
    let out = run(&["monotone", "--which", "tv", "--povm", &data("qutrit_g0.json"), "--max-iter", "1", "--gap-tol", "1e-9"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["converged"], false);
    assert_eq!(stderr_json(&out)["error"]["kind"], "convergence");
}

#[test]
fn robustness_of_qutrit_example_lies_in_sandwich() {
    let out = run(&["robustness", "--povm", &data("qutrit_g0.json"), "--tol", "1e-7"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let value = v["value"].as_f64().unwrap();
    assert!((0.526..=0.662).contains(&value), "{value}");
    assert!(v["gap"].as_f64().unwrap() <= 1e-7);
    assert_eq!(v["status"], "optimal");
    assert!(v.get("witness").is_none());
}

#[test]
fn robustness_witnesses_are_consistent() {
    let out = run(&["robustness", "--povm", &data("qutrit_g0.json"), "--emit-witness"]);
    let v = stdout_json(&out);
    let w = &v["witness"];
    let sigma: Vec<f64> = serde_json::from_value(w["sigma"].clone()).unwrap();
    assert!((sigma.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(w["dual_matrices"].as_array().unwrap().len(), 2);
    assert_eq!(w["mixing_povm"]["dim"], 3);
    let pair_bound = w["pair"]["bound"].as_f64().unwrap();
    assert!((pair_bound - 0.526).abs() < 1e-12);
    assert!(pair_bound <= v["value"].as_f64().unwrap() + 1e-9);
}

#[test]
fn robustness_iteration_cap_exits_with_convergence_code() {
    let out = run(&["robustness", "--povm", "appendix-f-g", "--max-iter", "1", "--tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["status"], "max_iter");
    let err = stderr_json(&out);
    assert_eq!(err["error"]["code"], 2);
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        vec!["monotone", "--povm", "x"],
        vec!["monotone", "--povm", "x", "--which", "linf", "--bogus"],
        vec!["robustness", "--povm", "x", "--tol", "0"],
        vec!["simulate", "sweep", "--path", "p1", "--runs", "0"],
        vec!["monotone", "--povm", "no-such-builtin", "--which", "linf"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(64), "{args:?}");
        assert_eq!(stderr_json(&out)["error"]["kind"], "usage");
    }
    let out = run(&["validate", "--povm", &data("malformed.json")]);
    assert_eq!(out.status.code(), Some(64));
    assert!(stderr_json(&out)["error"]["message"].as_str().unwrap().contains("malformed"));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("simulate"));
}

#[test]
fn output_may_not_overwrite_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("p.json");
    fs::copy(data("zpi2.json"), &input).unwrap();
    let p = input.to_string_lossy();
    let out = run(&["monotone", "--povm", &p, "--which", "linf", "--out", &p]);
    assert_eq!(out.status.code(), Some(64));
    assert_eq!(fs::read_to_string(&input).unwrap(), fs::read_to_string(data("zpi2.json")).unwrap());
}

#[test]
fn channel_apply_matches_golden() {
    let out = run(&["channel", "apply", "--channel", "l1-counterexample", "--povm", "l1-counterexample"]);
    assert_eq!(out.status.code(), Some(0));
    let expected: Value = serde_json::from_str(&fs::read_to_string(golden("channel_apply_l1_counterexample.json")).unwrap()).unwrap();
    assert_json_close(&stdout_json(&out), &expected, 0.0, "$");
}

#[test]
fn selective_apply_is_labeled_and_reusable() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sel.json");
    let out = run(&[
        "channel", "apply", "--channel", "amplitude-damping:0.3", "--povm", "appendix-f-g", "--selective",
        "--out", &out_path.to_string_lossy(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["outcomes"], 6);
    assert_eq!(v["labels"][1], "0:1");
    assert_eq!(v["labels"][3], "1:0");
    // the written file is itself a measurement file
    let check = run(&["validate", "--povm", &out_path.to_string_lossy()]);
    assert_eq!(check.status.code(), Some(0));
    assert_eq!(stdout_json(&check)["valid"], true);
}

#[test]
fn sweep_counts_round_trip_through_reconstruction() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("sweep.csv");
    let counts = dir.path().join("counts");
    let out = run(&[
        "simulate", "sweep", "--path", "p2", "--shots", "2048", "--runs", "4", "--seed", "9",
        "--out", &csv_path.to_string_lossy(), "--counts-dir", &counts.to_string_lossy(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(&fs::read_to_string(&csv_path).unwrap());
    assert_eq!(header, ["parameter", "theory", "mean", "std", "ratio"]);
    assert_eq!(rows.len(), 17);
    for (i, row) in rows.iter().enumerate() {
        let file = counts.join(format!("p2_{i:03}.json"));
        let rec = run(&["tomo", "reconstruct", "--counts", &file.to_string_lossy()]);
        assert_eq!(rec.status.code(), Some(0));
        let v = stdout_json(&rec);
        assert_eq!(v["runs"], 4);
        let mean = v["c_linf"]["mean"].as_f64().unwrap();
        assert!((mean - row[2].unwrap()).abs() <= 1e-12, "direction {i}: {mean} vs {:?}", row[2]);
        let std = v["c_linf"]["std"].as_f64().unwrap();
        assert!((std - row[3].unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn reconstruction_reports_and_optionally_projects() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("c");
    run(&[
        "simulate", "sweep", "--path", "p3", "--shots", "64", "--runs", "2", "--seed", "2",
        "--counts-dir", &counts.to_string_lossy(), "--out", &dir.path().join("s.csv").to_string_lossy(),
    ]);
    let file = counts.join("p3_000.json").to_string_lossy().into_owned();
    let plain = stdout_json(&run(&["tomo", "reconstruct", "--counts", &file]));
    assert!(plain.get("projected_povm").is_none());
    assert!(plain["completeness_residual"].as_f64().unwrap() <= 1e-12);
    let projected = stdout_json(&run(&["tomo", "reconstruct", "--counts", &file, "--project-psd"]));
    assert_eq!(projected["post_processing"], "psd-projection");
    assert_eq!(projected["projected_povm"]["outcomes"], 2);
    assert_eq!(projected["povm"], plain["povm"]);
}

#[test]
fn malformed_counts_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"dim":2,"outcomes":2,"shots":10,"runs":1,"table":{"0,0":[[4,5]]}}"#).unwrap();
    let out = run(&["tomo", "reconstruct", "--counts", &path.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn sweep_is_deterministic_and_parallel_safe() {
    let args = ["simulate", "sweep", "--path", "p1", "--shots", "500", "--runs", "10", "--seed", "5"];
    let a = run(&args);
    let b = run(&args);
    let mut par = args.to_vec();
    par.extend(["--jobs", "4"]);
    let c = run(&par);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("parameter,theory,mean,std,ratio\n"));
    assert!(!text.contains('\r'));
    assert_csv_close(&text, &fs::read_to_string(golden("sweep_p1_500x10_seed5.csv")).unwrap(), 1e-12);
}

#[test]
fn exact_sweep_on_equator_is_flat() {
    let out = run(&["simulate", "sweep", "--path", "p1", "--exact"]);
    let (_, rows) = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 17);
    for r in rows {
        assert!((r[2].unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r[3], Some(0.0));
    }
}

#[test]
fn noisy_sweep_ratios_stay_below_one() {
    let out = run(&["simulate", "sweep", "--path", "p3", "--exact", "--noise", "amplitude-damping:0.1", "--format", "json"]);
    let v = stdout_json(&out);
    assert_eq!(v["schema"], "povm-coherence/v1");
    let rows = v["rows"].as_array().unwrap();
    let mut singular = 0;
    for r in rows {
        match r[4].as_f64() {
            Some(ratio) => assert!(ratio < 1.0 && ratio > 0.9),
            None => singular += 1,
        }
    }
    // theta = 0, pi, 2pi
    assert_eq!(singular, 3);
}

#[test]
fn fig2_table_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig2.csv");
    let out = run(&["simulate", "fig2", "--grid", "5", "--out", &path.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    let (header, rows) = csv_rows(&text);
    assert_eq!(header, ["gamma", "rc", "gap", "clinf", "cl1half"]);
    assert_eq!(rows.len(), 5);
    assert_csv_close(&text, &fs::read_to_string(golden("fig2_grid5.csv")).unwrap(), 1e-9);

    let json_path = dir.path().join("fig2.json");
    run(&["simulate", "fig2", "--grid", "3", "--out", &json_path.to_string_lossy()]);
    let v: Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(v["schema"], "povm-coherence/v1");
    assert_eq!(v["kind"], "fig2");
}

#[test]
fn linf_of_qutrit_example_matches_golden() {
    let out = run(&["monotone", "--which", "linf", "--povm", &data("qutrit_g0.json")]);
    let expected: Value =
        serde_json::from_str(&fs::read_to_string(golden("monotone_linf_qutrit.json")).unwrap()).unwrap();
    assert_json_close(&stdout_json(&out), &expected, 1e-15, "$");
}
