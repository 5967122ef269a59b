use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gbp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbp"))
        .args(args)
        .current_dir(dir)
        .env_remove("GBP_SEED")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn gen_solve_check_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = gbp(
        &[
            "gen",
            "--family",
            "uniform",
            "--n",
            "15",
            "--groups",
            "4",
            "--seed",
            "3",
            "-o",
            "inst.json",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for algo in ["aptas", "balanced", "firstfit", "exact"] {
        let o = gbp(
            &[
                "solve",
                "-i",
                "inst.json",
                "-a",
                algo,
                "-o",
                "p.json",
                "--report",
                "r.json",
            ],
            d,
        );
        assert_eq!(
            code(&o),
            0,
            "{algo}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let o = gbp(&["check", "-i", "inst.json", "-p", "p.json"], d);
        assert_eq!(code(&o), 0);
        assert!(String::from_utf8_lossy(&o.stdout).contains("\"feasible\": true"));
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert!(report["extra_by_cause"].is_object());
}

#[test]
fn check_flags_conflicts_and_missing_items() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let inst = r#"{"n_groups": 2, "items": [
        {"id": 0, "size": "1/2", "group": 0},
        {"id": 1, "size": "1/4", "group": 0},
        {"id": 2, "size": "1/4", "group": 1}]}"#;
    fs::write(d.join("i.json"), inst).unwrap();
    fs::write(d.join("ok.json"), r#"{"bins": [[0, 2], [1]]}"#).unwrap();
    fs::write(d.join("clash.json"), r#"{"bins": [[0, 1], [2]]}"#).unwrap();
    fs::write(d.join("short.json"), r#"{"bins": [[0, 2]]}"#).unwrap();
    assert_eq!(
        code(&gbp(&["check", "-i", "i.json", "-p", "ok.json"], d)),
        0
    );
    let o = gbp(&["check", "-i", "i.json", "-p", "clash.json"], d);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("conflict"));
    assert_eq!(
        code(&gbp(&["check", "-i", "i.json", "-p", "short.json"], d)),
        1
    );
}

#[test]
fn parse_and_usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.json"), "{\"n_groups\": 1,\n \"items\": [").unwrap();
    let o = gbp(&["solve", "-i", "bad.json"], d);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert_eq!(code(&gbp(&["solve"], d)), 2);
    assert_eq!(code(&gbp(&["frobnicate"], d)), 2);
}

#[test]
fn gbp_seed_sets_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen = |out: &str, flag: Option<&str>, env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_gbp"));
        c.args(["gen", "--n", "12", "-o", out])
            .current_dir(d)
            .env_remove("GBP_SEED");
        if let Some(s) = flag {
            c.args(["--seed", s]);
        }
        if let Some(s) = env {
            c.env("GBP_SEED", s);
        }
        assert!(c.status().unwrap().success());
        fs::read_to_string(d.join(out)).unwrap()
    };
    let a = gen("a.json", Some("7"), None);
    assert_eq!(a, gen("b.json", Some("7"), None));
    assert_eq!(a, gen("c.json", None, Some("7")));
    assert_ne!(a, gen("d.json", None, Some("8")));
}

#[test]
fn gap_writes_both_packings() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = gbp(&["gap", "-e", "1/5", "--n-hat", "10", "-o", "out"], d);
    assert_eq!(code(&o), 0);
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["optimal_bins"], 10);
    assert_eq!(summary["greedy_bins"], 18);
    for p in ["optimal.json", "greedy.json"] {
        let o = gbp(
            &[
                "check",
                "-i",
                "out/instance.json",
                "-p",
                &format!("out/{p}"),
            ],
            d,
        );
        assert_eq!(code(&o), 0);
    }
    assert_eq!(code(&gbp(&["gap", "-e", "2/5", "--n-hat", "10"], d)), 2);
}

#[test]
fn bench_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("cfg.json"),
        r#"{"instances": [{"family": "equal_groups", "n": 3, "m": 4, "size": "1/4"}],
            "algorithms": [{"algorithm": "balanced"}, {"algorithm": "exact"}]}"#,
    )
    .unwrap();
    let o = gbp(
        &[
            "bench", "-c", "cfg.json", "--csv", "b.csv", "--json", "b.json",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(d.join("b.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().next().unwrap().ends_with("runtime_ms"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("b.json")).unwrap()).unwrap();
    assert_eq!(json["rows"][1]["bins"], 4);
}
