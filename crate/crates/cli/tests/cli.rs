use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crosswalk_core::config::ParamsFile;
use crosswalk_core::{scenarios, ScenarioConfig};
use serde_json::Value;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn crosswalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crosswalk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn scenario_file(name: &str) -> String {
    repo().join("scenarios").join(format!("{name}.toml")).to_str().unwrap().to_string()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn shipped_scenario_files_match_builtins() {
    for cfg in scenarios::builtin() {
        let loaded = ScenarioConfig::load(Path::new(&scenario_file(&cfg.name)), &[]).unwrap();
        assert_eq!(loaded, cfg, "{}", cfg.name);
    }
}

#[test]
fn simulate_reports_crossing_order() {
    let dir = tempfile::tempdir().unwrap();
    for (name, order) in [("normal", "pedestrian_first"), ("unexpected_stop", "vehicle_first")] {
        let out_dir = dir.path().join(name);
        let out = crosswalk(&["simulate", "--config", &scenario_file(name), "--out", path_str(&out_dir)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let s = summary(&out_dir);
        assert_eq!(s["crossing_order"], order);
        assert_eq!(s["outcome"], "completed");
        assert!(s["min_separation"].as_f64().unwrap() > 0.0);
        let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
        assert!(trace.starts_with("t,d_veh"));
    }
}

#[test]
fn disabled_discount_on_probe_exits_with_timeout() {
    let dir = tempfile::tempdir().unwrap();
    let probe = scenario_file("deadlock_probe");
    let out = crosswalk(&["simulate", "--config", &probe, "--out", path_str(dir.path())]);
    assert_eq!(code(&out), 0);
    let out = crosswalk(&[
        "simulate",
        "--config",
        &probe,
        "--set",
        "decision.k_disc=0",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
    assert_eq!(summary(dir.path())["outcome"], "timeout");
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = path_str(dir.path());
    let cases: Vec<Vec<&str>> = vec![
        vec!["simulate", "--config", "/nonexistent/scenario.toml", "--out", out_dir],
        vec!["simulate", "--scenario", "normal", "--set", "decision.i_ped_l=0.9", "--out", out_dir],
        vec!["simulate", "--scenario", "normal", "--set", "not_a_pair", "--out", out_dir],
        vec!["simulate", "--scenario", "no_such_scenario", "--out", out_dir],
        vec!["simulate", "--out", out_dir],
        vec!["simulate", "--bogus-flag"],
        vec![],
    ];
    for args in cases {
        let out = crosswalk(&args);
        assert_eq!(code(&out), 1, "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn simulate_is_reproducible_and_accepts_params_and_model() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = crosswalk(&["simulate", "--scenario", "normal", "--model", "sfm", "--seed", "7", "--out", path_str(d)]);
        assert_eq!(code(&out), 0);
    }
    for f in ["trace.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }

    let params = dir.path().join("params.toml");
    let p = crosswalk_core::DecisionParams {
        v_veh_d: 7.0,
        ..Default::default()
    };
    fs::write(&params, ParamsFile::to_toml_string(&p)).unwrap();
    let c = dir.path().join("c");
    let out = crosswalk(&[
        "simulate",
        "--scenario",
        "unexpected_stop",
        "--params",
        path_str(&params),
        "--out",
        path_str(&c),
    ]);
    assert_eq!(code(&out), 0);
    let d = dir.path().join("d");
    crosswalk(&["simulate", "--scenario", "unexpected_stop", "--out", path_str(&d)]);
    let differs = fs::read(c.join("trace.csv")).unwrap() != fs::read(d.join("trace.csv")).unwrap();
    assert!(differs, "the parameter file had no effect");
}

fn history(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn smoke_tune_writes_two_designs_with_monotone_histories() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = crosswalk(&["tune", "--iterations", "5", "--swarm", "4", "--seed", "3", "--out", path_str(d)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for tag in ["sfm", "mdp"] {
        let params = ParamsFile::load(&a.join(format!("params_{tag}.toml"))).unwrap();
        params.validate().unwrap();
        let h = history(&a.join(format!("history_{tag}.csv")));
        assert_eq!(h.len(), 6);
        assert!(h.windows(2).all(|w| w[1] <= w[0]), "{tag}: {h:?}");
        let out = crosswalk(&[
            "simulate",
            "--scenario",
            "normal",
            "--params",
            path_str(&a.join(format!("params_{tag}.toml"))),
            "--out",
            path_str(&dir.path().join(tag)),
        ]);
        assert_ne!(code(&out), 1);
    }
    for f in ["params_sfm.toml", "params_mdp.toml", "history_sfm.csv", "history_mdp.csv", "comparison.csv", "tune_report.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let report: Value = serde_json::from_str(&fs::read_to_string(a.join("tune_report.json")).unwrap()).unwrap();
    assert_eq!(report["comparison"].as_array().unwrap().len(), 2);
}

#[test]
fn tune_rejects_inverted_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = crosswalk(&[
        "tune",
        "--config",
        path_str(&repo().join("scenarios/tuning.toml")),
        "--set",
        "pso.bounds.k_disc.low=2.0",
        "--iterations",
        "1",
        "--swarm",
        "2",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(code(&out), 1);
    assert!(!dir.path().join("params_sfm.toml").exists());
}

#[test]
fn calibrate_on_shipped_references_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    for tag in ["sfm", "mdp"] {
        let data = repo().join(format!("data/reference/{tag}_reference.csv"));
        let out_dir = dir.path().join(tag);
        let out = crosswalk(&["calibrate", "--config", path_str(&data), "--model", tag, "--out", path_str(&out_dir)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let report: Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("calibration_report.json")).unwrap()).unwrap();
        let per_sample = report[0]["rss_per_sample"].as_f64().unwrap();
        assert!(per_sample < 1e-6, "{tag}: {per_sample}");
        let fitted = fs::read_to_string(out_dir.join(format!("pedestrian_{tag}.toml"))).unwrap();
        assert!(fitted.contains(&format!("model = \"{tag}\"")));
    }
}

#[test]
fn calibrate_rejects_empty_and_missing_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "traj_id,t,d_ped,v_ped,label\n").unwrap();
    let blank = dir.path().join("blank.csv");
    fs::write(&blank, "").unwrap();
    for data in [&empty, &blank, &dir.path().join("missing.csv")] {
        let out = crosswalk(&["calibrate", "--config", path_str(data), "--out", path_str(dir.path())]);
        assert_eq!(code(&out), 1, "{}", data.display());
    }
}

#[test]
fn replay_emits_one_line_per_tick_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = crosswalk(&["simulate", "--scenario", "normal", "--set", "t_max=5.99", "--out", path_str(dir.path())]);
    assert_ne!(code(&out), 1);
    let trace = dir.path().join("trace.csv");
    assert_eq!(fs::read_to_string(&trace).unwrap().lines().count(), 601);

    let out = crosswalk(&["replay", path_str(&trace)]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let times: Vec<f64> = stdout
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["t"].as_f64().unwrap())
        .collect();
    assert_eq!(times.len(), 600);
    assert!(times.windows(2).all(|w| w[1] > w[0]));

    let out = crosswalk(&["replay", path_str(&trace), "--format", "csv"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    let file = fs::read_to_string(&trace).unwrap();
    assert_eq!(csv.lines().collect::<Vec<_>>(), file.lines().skip(1).collect::<Vec<_>>());

    assert_eq!(code(&crosswalk(&["replay", "/nonexistent/trace.csv"])), 1);
}
