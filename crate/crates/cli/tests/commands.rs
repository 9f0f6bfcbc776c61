//! End-to-end runs of the `fluxshoot` binary.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fluxshoot::acceptance::REFERENCE_B_STAR;
use fluxshoot_cli::emit::{read_trajectory_csv, trajectory_csv};

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fluxshoot"));
    cmd.args(args);
    for (k, _) in std::env::vars() {
        if k.starts_with("FLUXSHOOT_") {
            cmd.env_remove(k);
        }
    }
    cmd.envs(env.iter().copied());
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(text: &str) -> HashMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn out(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn solve_oracle_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let path = out(dir.path(), "oracle.csv");
    let o = run(&["solve", "--preset", "oracle", "--out", &path], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t,f,fp,fpp\n"));
    let row = read_trajectory_csv(Path::new(&path))
        .unwrap()
        .into_iter()
        .find(|s| s.t == 0.75)
        .expect("row at t = 0.75");
    for (got, want) in [(row.f, 0.5), (row.fp, -1.0), (row.fpp, -2.0)] {
        assert!((got - want).abs() < 1e-7, "{got} vs {want}");
    }
}

#[test]
fn solve_zero_slope_is_type_ii() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "solve",
            "--preset",
            "default-shoot",
            "--b",
            "0",
            "--out",
            &out(dir.path(), "b0.csv"),
        ],
        &[],
    );
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().any(|l| l == "type=II"), "{}", stdout(&o));
}

#[test]
fn solve_missing_c_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "solve",
            "--beta",
            "0.5",
            "--a",
            "0",
            "--b",
            "1",
            "--out",
            &out(dir.path(), "x.csv"),
        ],
        &[],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("`c`"), "{}", stderr(&o));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn solve_step_underflow_keeps_the_truncated_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let path = out(dir.path(), "u.csv");
    let o = run(
        &[
            "solve",
            "--preset",
            "default-shoot",
            "--b",
            "1",
            "--abs-tol",
            "1e-30",
            "--rel-tol",
            "1e-30",
            "--out",
            &path,
        ],
        &[],
    );
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stdout(&o).contains("termination=step_underflow"));
    assert!(!read_trajectory_csv(Path::new(&path)).unwrap().is_empty());
}

#[test]
fn emitted_trajectory_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = out(dir.path(), "t.csv");
    let o = run(
        &[
            "solve",
            "--preset",
            "default-shoot",
            "--b",
            "2.5",
            "--dt",
            "0.05",
            "--out",
            &path,
        ],
        &[],
    );
    assert_eq!(code(&o), 0);
    let bytes = fs::read(&path).unwrap();
    let again = trajectory_csv(&read_trajectory_csv(Path::new(&path)).unwrap()).unwrap();
    assert_eq!(bytes, again);
}

#[test]
fn shoot_matches_the_regression_value() {
    let dir = tempfile::tempdir().unwrap();
    let path = out(dir.path(), "shoot.txt");
    let o = run(&["shoot", "--preset", "default-shoot", "--out", &path], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&fs::read_to_string(&path).unwrap());
    let b: f64 = r["b_star"].parse().unwrap();
    assert!((b - REFERENCE_B_STAR).abs() <= 1e-6, "{b}");
    assert_eq!(r["sign.negative"], "true");
    assert_eq!(r["boundedness.passed"], "true");
    assert!(r.contains_key("tail_exponential.fit.rate_hat"));
    assert!(r.contains_key("tail_power.fit.rate_hat"));

    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("shoot.json")).unwrap()).unwrap();
    assert_eq!(json["b_star"].as_f64(), Some(b));
}

#[test]
fn shoot_positive_a_gives_small_slope() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "shoot",
            "--beta",
            "0.5",
            "--a",
            "1",
            "--c",
            "-1",
            "--out",
            &out(dir.path(), "s.txt"),
        ],
        &[],
    );
    assert_eq!(code(&o), 0);
    let b: f64 = report(&stdout(&o))["b_star"].parse().unwrap();
    assert!(b > 0.0 && b < 1.0, "{b}");
}

#[test]
fn shoot_empty_type_i_set() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "shoot",
            "--preset",
            "paper-b1-empty",
            "--out",
            &out(dir.path(), "e.txt"),
        ],
        &[],
    );
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("a <= 0"), "{}", stderr(&o));
}

#[test]
fn shoot_rejects_unsupported_g() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "shoot",
            "--preset",
            "default-shoot",
            "--beta",
            "1.5",
            "--out",
            &out(dir.path(), "s.txt"),
        ],
        &[],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn sweep_agrees_with_the_critical_slope() {
    let dir = tempfile::tempdir().unwrap();
    let path = out(dir.path(), "sweep.csv");
    let hi = format!("{}", 2.0 * REFERENCE_B_STAR);
    let o = run(
        &[
            "sweep",
            "--preset",
            "default-shoot",
            "--b-min",
            "-1",
            "--b-max",
            &hi,
            "--points",
            "64",
            "--out",
            &path,
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("monotone=true"));
    let mut r = csv::Reader::from_path(&path).unwrap();
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        [
            "b",
            "type",
            "t0_or_blank",
            "Tb_est_or_blank",
            "bounded_hint"
        ]
    );
    let rows: Vec<(f64, String)> = r
        .records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[0].parse().unwrap(), rec[1].to_string())
        })
        .collect();
    assert_eq!(rows.len(), 64);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0));
    for (b, ty) in &rows {
        let want = if *b < REFERENCE_B_STAR { "II" } else { "I" };
        assert_eq!(ty, want, "b = {b}");
    }
}

#[test]
fn sweep_single_point_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = out(dir.path(), "one.csv");
    let o = run(
        &[
            "sweep",
            "--preset",
            "default-shoot",
            "--b-values",
            "0",
            "--out",
            &path,
        ],
        &[],
    );
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].split(',').nth(1), Some("II"));
}

#[test]
fn sweep_empty_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = out(dir.path(), "none.csv");
    for args in [
        vec!["--points", "0", "--b-min", "0", "--b-max", "1"],
        vec!["--b-values", ""],
        vec!["--points", "4", "--b-min", "1", "--b-max", "0"],
    ] {
        let mut all = vec!["sweep", "--preset", "default-shoot", "--out", &path];
        all.extend(args);
        assert_eq!(code(&run(&all, &[])), 2, "{all:?}");
    }
    assert!(!Path::new(&path).exists());
}

#[test]
fn transform_reports_beta_and_residual() {
    let dir = tempfile::tempdir().unwrap();
    let path = out(dir.path(), "m.txt");
    let o = run(
        &["transform", "--m", "-0.75", "--a", "0", "--out", &path],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.lines().any(|l| l == "beta=0.4"), "{text}");
    let r = report(&text);
    assert!(r["residual"].parse::<f64>().unwrap() <= 1e-7);
    assert_eq!(r["b_star_beta"], r["b_star_m"]);
}

#[test]
fn transform_rejects_m_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    for m in ["-0.5", "-1", "0"] {
        let o = run(
            &[
                "transform",
                "--m",
                m,
                "--a",
                "0",
                "--out",
                &out(dir.path(), "m.txt"),
            ],
            &[],
        );
        assert_eq!(code(&o), 2, "m = {m}");
    }
}

#[test]
fn verify_list_does_not_run() {
    let o = run(&["verify", "--list"], &[]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 12);
    assert!(!text.contains("PASS") && !text.contains("FAIL"));
}

#[test]
fn verify_passes_on_defaults() {
    let o = run(&["verify"], &[]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(
        stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(),
        12
    );
}

#[test]
fn verify_catches_a_loose_tolerance() {
    let o = run(&["verify"], &[("FLUXSHOOT_ABS_TOL", "1e-2")]);
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    let first = text.lines().find(|l| l.contains(" 1 ")).unwrap();
    assert!(first.starts_with("FAIL"), "{first}");
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str], &[&str]); 4] = [
        (
            "solve",
            &["--preset", "default-shoot", "--b", "3"],
            &["csv"],
        ),
        ("shoot", &["--preset", "default-shoot"], &["txt", "json"]),
        (
            "sweep",
            &[
                "--preset",
                "default-shoot",
                "--b-min",
                "-1",
                "--b-max",
                "4",
                "--points",
                "16",
            ],
            &["csv"],
        ),
        ("transform", &["--m", "-0.9", "--a", "1"], &["txt", "json"]),
    ];
    for (cmd, args, exts) in cases {
        let mut outputs: Vec<Vec<Vec<u8>>> = Vec::new();
        for round in 0..2 {
            let base: PathBuf = dir.path().join(format!("{cmd}{round}.{}", exts[0]));
            let base_s = base.display().to_string();
            let mut all = vec![cmd, "--out", &base_s];
            all.extend_from_slice(args);
            assert_eq!(code(&run(&all, &[])), 0, "{cmd}");
            outputs.push(
                exts.iter()
                    .map(|e| fs::read(base.with_extension(e)).unwrap())
                    .collect(),
            );
        }
        assert_eq!(outputs[0], outputs[1], "{cmd}");
    }
}

#[test]
fn usage_errors() {
    assert_eq!(code(&run(&[], &[])), 2);
    assert_eq!(code(&run(&["frobnicate"], &[])), 2);
    assert_eq!(code(&run(&["--help"], &[])), 0);
}
