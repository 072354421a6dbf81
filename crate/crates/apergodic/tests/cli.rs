use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn apergodic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apergodic")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn constant_observable_has_zero_l2_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"seed": 4, "experiment": {"kind": "ergodic", "observable": "1", "t_values": [1, 10, 50], "replicas": 40}}"#,
    );
    let out = dir.path().join("report.csv");
    let o = apergodic(&["ergodic", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&out);
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r[1].parse::<f64>().unwrap(), 1.0);
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[3].parse::<f64>().unwrap(), 0.0);
    }
    assert!(dir.path().join("report.manifest.jsonl").exists());
    assert!(dir.path().join("report.summary.jsonl").exists());
}

#[test]
fn negative_dt_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"seed": 4, "experiment": {"kind": "ergodic", "observable": "1", "t_values": [1], "replicas": 1, "dt": -0.5}}"#,
    );
    let o = apergodic(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("experiment.dt"), "{}", stderr(&o));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unparseable_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"seed": 4, "experiment": "#);
    let o = apergodic(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "n.json",
        r#"{"seed": 4, "experiment": {"kind": "asymptotic-periodicity", "k_values": [0], "max_iter": 1}}"#,
    );
    let o = apergodic(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let cfg = write(
        dir.path(),
        "x.json",
        r#"{"seed": 4, "experiment": {"kind": "qsd", "particles": 4, "duration": 40, "dt": 20,
            "pair": {"h": "0.1", "g": "0.1", "gamma": 1}}}"#,
    );
    let o = apergodic(&["qsd", "--config", &cfg, "--out", dir.path().join("occ.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("reduce dt"));
}

#[test]
fn wrong_kind_for_subcommand_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "p.json",
        r#"{"seed": 1, "experiment": {"kind": "asymptotic-periodicity", "k_values": [0]}}"#,
    );
    let o = apergodic(&["ergodic", "--config", &cfg, "--out", dir.path().join("r.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("experiment.kind"));
}

#[test]
fn run_uses_config_output_and_thread_count_does_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_config");
    let text = format!(
        r#"{{"seed": 9, "output": "{}", "experiment": {{"kind": "survival", "t": 0.5, "k_list": [0, 3], "paths": 3000, "dt": 0.002}}}}"#,
        target.to_str().unwrap()
    );
    let cfg = write(dir.path(), "s.json", &text);
    let o = apergodic(&["run", "--config", &cfg, "--threads", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let single = fs::read(target.join("gaps.csv")).unwrap();
    let other = dir.path().join("four");
    let o = apergodic(&["run", "--config", &cfg, "--threads", "4", "--out", other.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(single, fs::read(other.join("gaps.csv")).unwrap());
    let header = String::from_utf8(single).unwrap();
    assert!(header.starts_with("k,gap,stderr,sandwich_prob\n"));
}

#[test]
fn survival_k_list_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"seed": 2, "experiment": {"kind": "survival", "t": 0.5, "k_list": [0], "paths": 500, "dt": 0.005}}"#,
    );
    let out = dir.path().join("gaps.csv");
    let o = apergodic(&["survival", "--config", &cfg, "--k-list", "0,2,4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ks: Vec<String> = read_csv(&out).into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(ks, ["0", "2", "4"]);
}

#[test]
fn identical_runs_are_byte_identical_and_golden_check_works() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "q.json",
        r#"{"seed": 21, "experiment": {"kind": "qsd", "particles": 50, "duration": 1, "dt": 0.005, "bins": 10}}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(apergodic(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    let o = apergodic(&["run", "--config", &cfg, "--out", b.to_str().unwrap(), "--golden", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["occ.csv", "empirical.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
    }
    let o = apergodic(&[
        "run",
        "--config",
        &cfg,
        "--seed",
        "22",
        "--out",
        b.to_str().unwrap(),
        "--golden",
        a.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("differs from the golden copy"));
}

#[test]
fn manifest_records_hash_seed_and_versions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "p.json",
        r#"{"seed": 77, "experiment": {"kind": "asymptotic-periodicity", "k_values": [0, 3]}}"#,
    );
    let out = dir.path().join("o");
    assert!(apergodic(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(out.join("manifest.jsonl")).unwrap();
    let m: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(m["seed"], 77);
    assert_eq!(m["kind"], "asymptotic-periodicity");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert!(m["versions"]["apergodic-core"].is_string());
    assert!(m["timestamp_unix"].is_u64());
    let names: Vec<&str> = m["artifacts"].as_array().unwrap().iter().map(|a| a["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["periodicity.csv", "invariant.csv", "skeleton.jsonl"]);
    let rows = read_csv(&out.join("periodicity.csv"));
    assert_eq!(rows.len(), 2);
    let tv0: f64 = rows[0][3].parse().unwrap();
    let tv3: f64 = rows[1][3].parse().unwrap();
    assert!(tv3 < tv0);
}

#[test]
fn default_ou_ergodic_mean_matches_limit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "e.json",
        r#"{"seed": 5, "experiment": {"kind": "ergodic", "observable": "x^2", "t_values": [50], "replicas": 400}}"#,
    );
    let out = dir.path().join("o");
    assert!(apergodic(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let summary: serde_json::Value =
        serde_json::from_str(fs::read_to_string(out.join("summary.jsonl")).unwrap().trim()).unwrap();
    let limit = summary["limit"].as_f64().unwrap();
    let row = &read_csv(&out.join("report.csv"))[0];
    let mean: f64 = row[1].parse().unwrap();
    let se: f64 = row[4].parse().unwrap();
    assert!((mean - limit).abs() <= 3.0 * se, "mean {mean}, limit {limit}, se {se}");
}
