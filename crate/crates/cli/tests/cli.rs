use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_banditlab"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn with_config(verb: &str, json: &str, extra: &[&str]) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, json).unwrap();
    let mut args = vec![verb, "--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn shipped_configs_validate() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let o = run(&["validate-config", "--config", path.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", path.display(), stderr(&o));
            seen += 1;
        }
    }
    assert!(seen >= 8);
}

#[test]
fn malformed_configs_rejected_with_targeted_messages() {
    let stair = r#""instance": {"means": [0, 1], "std_devs": [1, 2]}"#;
    let cases: Vec<(String, &str)> = vec![
        ("{ not json".into(), "invalid JSON"),
        (format!(r#"{{{stair}, "policy": "uniform", "horizon": 10, "lambda": 0.5, "hoirzon": 3}}"#), "unknown field `hoirzon`"),
        (r#"{"instance": {"means": [0, 1], "std_devs": [1, -2]}, "policy": "uniform", "horizon": 10, "lambda": 0.5}"#.into(), "std_dev of arm 1"),
        (r#"{"instance": {"means": [0, 1, 2], "std_devs": [1, 2]}, "policy": "uniform", "horizon": 10, "lambda": 0.5}"#.into(), "means has 3 entries"),
        (format!(r#"{{{stair}, "policy": "greedy", "horizon": 10, "lambda": 0.5}}"#), "unknown policy `greedy`"),
        (format!(r#"{{{stair}, "policy": "forcing-balance", "horizon": 10, "lambda": 0.5}}"#), "reserved"),
        (format!(r#"{{{stair}, "policy": "sarp", "horizon": 10, "lambda": 0.5, "estimator": "pcipw"}}"#), "balanced pilot"),
        (format!(r#"{{{stair}, "policy": "uniform", "horizon": 10, "lambda": 1.5}}"#), "lambda must lie in [0, 1]"),
        (format!(r#"{{{stair}, "horizon": 100, "sweep": [8, 5]}}"#), "strictly ascending"),
        (format!(r#"{{{stair}, "horizon": 100, "sweep": [7]}}"#), "multiple of K = 2"),
        (format!(r#"{{{stair}, "policy": "uniform", "horizon": 10, "lambda": 0.5, "reps": 0}}"#), "reps must be at least 1"),
        (r#"{"instance": {"means": [1, 1], "std_devs": [1, 2]}, "policy": "uniform", "horizon": 10, "lambda": 0.5}"#.into(), "optimal arm not unique"),
        (format!(r#"{{{stair}, "policy": {{"kind": "sarp", "m0": 3}}, "horizon": 10, "lambda": 0.5}}"#), "does not take parameter `m0`"),
    ];
    assert!(cases.len() >= 10);
    for (json, needle) in cases {
        let o = with_config("validate-config", &json, &[]);
        assert_eq!(o.status.code(), Some(2), "{json}");
        assert!(stderr(&o).contains(needle), "{json}\nexpected `{needle}` in: {}", stderr(&o));
    }
}

#[test]
fn thresholds_reference_table() {
    let cfg = configs().join("table1.json");
    let o = run(&["thresholds", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let expected = "\
K,sigma,N1_min,oracle_gain_pct,error
4,1;1;1;5,12,42.86,
4,3;3;3;4,260,1.74,
6,1;1;2;2;3;6,24,31.82,
6,1;1;1;3;3;3,42,20.00,
10,1;1;2;2;3;3;4;4;5;5,80,18.18,
10,1;1;1;1;1;1;1;1;1;10,30,66.88,
";
    assert_eq!(stdout(&o), expected);
}

#[test]
fn thresholds_row_errors() {
    let o = with_config("thresholds", r#"{"profiles": [[1], [2, 2, 2], [1, 5]]}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[1].contains("K must be >= 2"), "{out}");
    assert!(lines[2].starts_with("3,2;2;2,none,0.00,"), "{out}");
    assert!(lines[3].starts_with("2,1;5,"), "{out}");
}

#[test]
fn lambda_one_gives_sum_rmse() {
    let o = with_config(
        "joint-compare",
        r#"{"instance": {"means": [0, 1], "std_devs": [1, 2]}, "policy": "uniform", "horizon": 100, "reps": 50, "lambda": 1}"#,
        &["--raw"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], row[5], "{out}");
}

#[test]
fn overrides_seed_and_output_file() {
    let cfg = configs().join("table4.json");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t4.csv");
    let base = ["joint-compare", "--config", cfg.to_str().unwrap(), "--set", "reps=20", "--set", "horizon=200"];
    let mut a = base.to_vec();
    a.extend_from_slice(&["--output", out.to_str().unwrap()]);
    assert!(run(&a).status.success());
    let file = std::fs::read_to_string(&out).unwrap();
    assert!(file.starts_with("policy,sum_rmse,sum_rmse_se,avg_regret,avg_regret_se,joint_loss,joint_loss_se"));
    assert_eq!(file.lines().count(), 5);
    assert_eq!(stdout(&run(&base)), file);
    let mut b = base.to_vec();
    b.extend_from_slice(&["--seed", "99"]);
    assert_ne!(stdout(&run(&b)), file);
}

#[test]
fn joint_compare_sorted_by_joint_loss() {
    let cfg = configs().join("table4.json");
    let o = run(&["joint-compare", "--config", cfg.to_str().unwrap(), "--set", "reps=100"]);
    let out = stdout(&o);
    let losses: Vec<f64> = out.lines().skip(1).map(|l| l.split(',').nth(5).unwrap().parse().unwrap()).collect();
    assert!(losses.windows(2).all(|w| w[0] <= w[1]), "{out}");
}

#[test]
fn oracle_verb_reports_feasible_allocations() {
    let cfg = configs().join("oracle.json");
    let o = run(&["oracle", "--config", cfg.to_str().unwrap(), "--raw"]);
    assert!(o.status.success());
    for line in stdout(&o).lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let mass: f64 = cols[5].split(';').map(|x| x.parse::<f64>().unwrap()).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(cols[3].parse::<f64>().unwrap() < 1e-8);
    }
}

#[test]
fn rate_sweep_slope_block() {
    let o = with_config(
        "rate-sweep",
        r#"{"instance": {"means": [0, 0.5, 1, 1.5, 2, 2.5, 3, 3.5], "std_devs": [1, 1, 2, 2, 3, 3, 4, 4]},
            "policy": ["uniform"], "sweep": [500, 1000, 2000], "reps": 50, "lambda": 0.5}"#,
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let blocks: Vec<&str> = out.split("\n\n").collect();
    assert_eq!(blocks.len(), 2, "{out}");
    assert!(blocks[0].starts_with("policy,N,joint_loss,sum_rmse,avg_regret,se_joint"));
    let slope: Vec<&str> = blocks[1].lines().nth(1).unwrap().split(',').collect();
    assert!(slope[3].parse::<f64>().unwrap().abs() < 0.02, "{out}");
}

#[test]
fn six_arm_sarp_close_to_narp_at_large_horizon() {
    let cfg = configs().join("fig3a.json");
    let o = run(&[
        "rate-sweep", "--config", cfg.to_str().unwrap(), "--set", "sweep=[10000]", "--set", "reps=200",
        "--set", r#"policy=["narp","sarp"]"#,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let j: Vec<f64> = out.lines().skip(1).take(2).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!((j[0] - j[1]).abs() < 0.3, "{out}");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let o = run(&["thresholds", "--config", "/nonexistent/x.json"]);
    assert_eq!(o.status.code(), Some(2));
}
