use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn recosim(args: &[&str]) -> Output {
    recosim_env(args, &[])
}

fn recosim_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_recosim"));
    cmd.args(args).env_remove("RECOSIM_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let p = path(dir, "run.toml");
    fs::write(&p, text).unwrap();
    p
}

/// simulate -> train -> evaluate; returns the bytes of the log, blob and report.
fn pipeline(dir: &TempDir, threads: &str) -> (Vec<u8>, Vec<u8>, Vec<u8>) {
    let (log, blob, report) = (path(dir, "log.csv"), path(dir, "agent.json"), path(dir, "report.csv"));
    let out = recosim(&["simulate", "--seed", "4", "--users", "300", "--threads", threads, "--out", s(&log)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = recosim(&["train", "--agent", "combined", "--log", s(&log), "--out", s(&blob)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = recosim(&[
        "evaluate", "--seed", "4", "--agent-blob", s(&blob), "--users", "300", "--oracle", "--threads", threads,
        "--out", s(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    (fs::read(log).unwrap(), fs::read(blob).unwrap(), fs::read(report).unwrap())
}

#[test]
fn pipeline_is_deterministic_across_runs_and_threads() {
    let (a, b, c) = (TempDir::new().unwrap(), TempDir::new().unwrap(), TempDir::new().unwrap());
    let first = pipeline(&a, "1");
    assert_eq!(first, pipeline(&b, "1"));
    assert_eq!(first, pipeline(&c, "4"));
    let report = String::from_utf8(first.2).unwrap();
    assert!(report.starts_with("axis_value,agent,displays,clicks,ctr,ci_low,ci_high,regret,rep\n"));
    assert!(report.lines().nth(1).unwrap().starts_with("NA,combined,"));
}

#[test]
fn resolved_configuration_is_printed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[sim]\nnum_products = 7\n");
    let log = path(&dir, "log.csv");
    let out = recosim(&["simulate", "--config", s(&cfg), "--seed", "9", "--users", "5", "--out", s(&log)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("# resolved configuration"));
    assert!(text.contains("num_products = 7"), "{text}");
    assert!(text.contains("seed = 9"), "flag overrides file and default");
    assert!(text.contains("latent_dim = 5"), "absent keys take defaults");
}

#[test]
fn seed_comes_from_the_environment_unless_set() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, extra: &[&str], env: &[(&str, &str)]| {
        let log = path(&dir, name);
        let mut args = vec!["simulate", "--users", "20", "--out", s(&log)];
        args.extend_from_slice(extra);
        let out = recosim_env(&args, env);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        (stdout(&out), fs::read(log).unwrap())
    };
    let (text, env_seeded) = run("env.csv", &[], &[("RECOSIM_SEED", "123")]);
    assert!(text.contains("seed = 123"));
    let (_, flagged) = run("flag.csv", &["--seed", "123"], &[]);
    assert_eq!(env_seeded, flagged);
    let (_, default) = run("default.csv", &[], &[]);
    assert_ne!(env_seeded, default);
    let (text, _) = run("override.csv", &["--seed", "5"], &[("RECOSIM_SEED", "123")]);
    assert!(text.contains("seed = 5"));

    let cfg = write_config(&dir, "[harness]\nseed = 77\n");
    let (text, _) = run("file.csv", &["--config", s(&cfg)], &[("RECOSIM_SEED", "123")]);
    assert!(text.contains("seed = 77"), "file beats the environment");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let report = path(&dir, "r.csv");
    // 0: success.
    let ok = recosim(&["evaluate", "--oracle-policy", "--users", "10", "--out", s(&report)]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    // 1: invalid configuration, unknown agent, bad flag.
    let bad = write_config(&dir, "[sim]\np_bandit_to_bandit = 0.5\n");
    assert_eq!(code(&recosim(&["evaluate", "--oracle-policy", "--config", s(&bad), "--out", s(&report)])), 1);
    let unknown = write_config(&dir, "[sim]\nnot_a_key = 1\n");
    assert_eq!(code(&recosim(&["evaluate", "--oracle-policy", "--config", s(&unknown), "--out", s(&report)])), 1);
    let log = path(&dir, "log.csv");
    assert_eq!(code(&recosim(&["simulate", "--users", "5", "--out", s(&log)])), 0);
    let out = recosim(&["train", "--agent", "nope", "--log", s(&log), "--out", s(&path(&dir, "a.json"))]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("prod2vec"), "lists valid names: {}", stderr(&out));
    assert_eq!(code(&recosim(&["simulate", "--bogus"])), 1);
    // 2: missing input, unwritable output.
    let missing = path(&dir, "missing.csv");
    let out = recosim(&["train", "--agent", "pure_bandit", "--log", s(&missing), "--out", s(&path(&dir, "a.json"))]);
    assert_eq!(code(&out), 2);
    let nowhere = dir.path().join("no/such/dir/out.csv");
    assert_eq!(code(&recosim(&["simulate", "--users", "2", "--out", s(&nowhere)])), 2);
    // 3: evaluation without a single display.
    assert_eq!(code(&recosim(&["evaluate", "--oracle-policy", "--users", "0", "--out", s(&report)])), 3);
}

#[test]
fn help_lists_every_flag() {
    let expected: &[(&str, &[&str])] = &[
        ("simulate", &["--config", "--seed", "--users", "--threads", "--out"]),
        ("train", &["--config", "--agent", "--log", "--out"]),
        (
            "evaluate",
            &["--config", "--seed", "--agent-blob", "--oracle-policy", "--users", "--oracle", "--threads", "--out"],
        ),
        (
            "sweep",
            &[
                "--config", "--seed", "--axis", "--grid", "--agents", "--reps", "--users", "--training-events",
                "--threads", "--out",
            ],
        ),
        ("plot", &["--report", "--out", "--x-label", "--z"]),
        ("bench", &["--config", "--seed", "--users", "--threads", "--products", "--latent-dim"]),
    ];
    for (sub, flags) in expected {
        let out = recosim(&[sub, "--help"]);
        assert_eq!(code(&out), 0);
        let text = stdout(&out);
        for flag in *flags {
            assert!(text.contains(flag), "{sub} --help lacks {flag}");
        }
    }
    assert_eq!(code(&recosim(&["--help"])), 0);
}

#[test]
fn sweep_writes_one_row_per_agent_point_and_rep() {
    let dir = TempDir::new().unwrap();
    let out_dir = path(&dir, "sweep");
    let out = recosim(&[
        "sweep", "--axis", "bandit_events", "--grid", "100,1000", "--reps", "2", "--users", "50", "--out",
        s(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("sweep_bandit_events.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2 * 2);
    let svg = fs::read_to_string(out_dir.join("sweep_bandit_events.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
}

#[test]
fn plot_is_deterministic_and_names_missing_columns() {
    let dir = TempDir::new().unwrap();
    let out_dir = path(&dir, "sweep");
    let out = recosim(&[
        "sweep", "--axis", "sigma_phi", "--grid", "0,2", "--reps", "2", "--users", "40", "--training-events", "200",
        "--out", s(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = out_dir.join("sweep_sigma_phi.csv");
    let (a, b) = (path(&dir, "a.svg"), path(&dir, "b.svg"));
    for target in [&a, &b] {
        let out = recosim(&["plot", "--report", s(&csv), "--out", s(target), "--x-label", "sigma_phi"]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(&a).unwrap(), fs::read(out_dir.join("sweep_sigma_phi.svg")).unwrap());

    let stripped = path(&dir, "stripped.csv");
    fs::write(&stripped, "axis_value,agent,displays,clicks,ctr,regret,rep\n1,combined,10,1,0.1,NA,0\n").unwrap();
    let out = recosim(&["plot", "--report", s(&stripped), "--out", s(&path(&dir, "c.svg"))]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("ci_low") && err.contains("ci_high"), "{err}");
}

#[test]
fn forced_stop_yields_one_organic_row_per_user() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "[sim]\np_organic_to_organic = 0.0\np_organic_to_bandit = 0.0\np_organic_to_stop = 1.0\n",
    );
    let log = path(&dir, "log.csv");
    let out = recosim(&["simulate", "--config", s(&cfg), "--users", "25", "--out", s(&log)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(log).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 25);
    assert!(rows.iter().all(|r| r.split(',').nth(2) == Some("organic")));
}

#[test]
fn oracle_policy_has_zero_regret_without_noise() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[sim]\nsigma_phi = 0.0\n");
    let report = path(&dir, "r.csv");
    let out = recosim(&[
        "evaluate", "--config", s(&cfg), "--oracle-policy", "--oracle", "--users", "200", "--out", s(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(report).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "oracle");
    assert_eq!(row[7].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn bench_reports_each_thread_count() {
    let out = recosim(&["bench", "--users", "200", "--threads", "1,2", "--products", "20", "--latent-dim", "4"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("available cores"));
    assert_eq!(text.matches("events/s").count(), 2, "{text}");
}
