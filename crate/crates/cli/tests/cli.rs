use std::path::Path;
use std::process::{Command, Output};

use hbtree::analysis::{plan_parameters, PlanRequest, PlanResult};
use hbtree::sim::{SimConfig, CSV_HEADER};
use hbtree::{NoiseRate, ProtocolParams, RootSeed};

fn hbtree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hbtree"))
        .args(args)
        .output()
        .expect("spawn hbtree")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let p = ProtocolParams {
        eps: NoiseRate::Dyadic { k: 2 },
        k_x: 32,
        k_y: 64,
        r: 48,
        r_tr: 48,
        tau: 12,
        d: 2,
        beta: 8,
        s: 1,
        checked_noise: false,
    };
    let mut cfg = SimConfig::new(p, 40, 200, RootSeed::from_u64(5));
    cfg.impostor_fraction = 0.5;
    let path = dir.join("cfg.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

#[test]
fn plan_json_matches_library() {
    let out = stdout(&hbtree(&[
        "plan",
        "--n",
        "1000000",
        "--eps",
        "0.25",
        "--depth",
        "2",
        "--target-frr",
        "1e-4",
        "--target-far",
        "1e-8",
        "--format",
        "json",
    ]));
    let got: PlanResult = serde_json::from_str(&out).unwrap();
    let want = plan_parameters(&PlanRequest::new(
        1_000_000,
        1e-4,
        1e-8,
        NoiseRate::Dyadic { k: 2 },
        2,
    ))
    .unwrap();
    assert_eq!(got, want);
    assert_eq!(
        (got.params.beta, got.params.tau, got.params.r_tr),
        (1000, 63, 102)
    );
}

#[test]
fn curve_is_monotone() {
    let out = stdout(&hbtree(&[
        "curve",
        "--targets",
        "0.1,0.01",
        "--beta-max",
        "2000",
    ]));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("target,beta,r"));
    let rows: Vec<(f64, u64, u32)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(rows.len(), 2 * 1999);
    for t in [0.1, 0.01] {
        let rs: Vec<u32> = rows.iter().filter(|x| x.0 == t).map(|x| x.2).collect();
        assert!(rs.windows(2).all(|w| w[0] <= w[1]));
    }
    assert!(rows.iter().any(|x| x.0 == 0.1 && x.1 == 1000));
}

#[test]
fn analyze_emits_all_metrics() {
    let out = stdout(&hbtree(&["analyze", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    for key in [
        "p_false_branch",
        "frr_auth",
        "far_auth",
        "frr",
        "far",
        "comm_bits",
        "tag_mem_bits",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["tag_mem_bits"], 1070.0);
}

#[test]
fn sim_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("r.csv");
    stdout(&hbtree(&[
        "sim",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    assert!(text.contains("sim,frr,"));
}

#[test]
fn seed_and_trials_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let c = cfg.to_str().unwrap();
    let a = stdout(&hbtree(&[
        "sim", "--config", c, "--seed", "1", "--trials", "50",
    ]));
    let b = stdout(&hbtree(&[
        "sim", "--config", c, "--seed", "2", "--trials", "50",
    ]));
    assert_ne!(a, b);
    let row = a
        .lines()
        .find(|l| l.starts_with("sim,reader_matvec_per_trial,"))
        .unwrap();
    assert!(row.ends_with(",50"), "{row}");
}

#[test]
fn trace_dumps_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = stdout(&hbtree(&[
        "trace",
        "--config",
        cfg.to_str().unwrap(),
        "--tag",
        "3",
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["tag_id"], 3);
    assert_eq!(v["transcript"]["z_levels"].as_array().unwrap().len(), 2);
    assert!(v["outcome"]["accepted"].is_boolean());
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(
        hbtree(&["sim", "--config", "missing.json"]).status.code(),
        Some(2)
    );
    assert_eq!(hbtree(&["sim", "--bogus"]).status.code(), Some(2));
    assert_eq!(hbtree(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        hbtree(&[
            "plan",
            "--n",
            "10",
            "--eps",
            "0.3",
            "--target-frr",
            "1e-4",
            "--target-far",
            "1e-8"
        ])
        .status
        .code(),
        Some(2)
    );

    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let text = std::fs::read_to_string(&cfg)
        .unwrap()
        .replacen('{', "{\"unknown_key\": 1,", 1);
    std::fs::write(&cfg, text).unwrap();
    let o = hbtree(&["sim", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown_key"));
}

#[test]
fn help_exits_0() {
    let o = hbtree(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("plan"));
}
