//! Layer precedence, resolved through the real argument parser.

use std::path::Path;

use fluxshoot_cli::config::{self, Layer, Settings, Source, KEYS};
use fluxshoot_cli::resolve;

const NO_ENV: [(&str, &str); 0] = [];

fn flag(key: &str) -> String {
    format!("--{}", key.replace('_', "-"))
}

fn write_config(dir: &Path, key: &str, value: &str) -> String {
    let path = dir.join(format!("{key}.conf"));
    std::fs::write(&path, format!("# test\n{key} = {value}\n")).unwrap();
    path.display().to_string()
}

fn resolved(args: &[String], env: &[(String, String)]) -> Settings {
    let mut argv = vec!["fluxshoot".to_string(), "solve".to_string()];
    argv.extend_from_slice(args);
    resolve(argv, env.iter().cloned()).unwrap().1
}

#[test]
fn every_key_has_a_flag_and_an_env_name() {
    for key in KEYS {
        let s = resolved(&[flag(key), "7".into()], &[]);
        assert_eq!(s.raw(key), Some("7"), "{key}");
        let env = [(format!("FLUXSHOOT_{}", key.to_uppercase()), "8".to_string())];
        let s = resolved(&[], &env);
        assert_eq!(s.raw(key), Some("8"), "{key}");
    }
}

/// Flag over file over default, for each field, through all three layers.
#[test]
fn three_layers_for_every_field() {
    let dir = tempfile::tempdir().unwrap();
    for key in KEYS {
        let default = Layer::from([(key.to_string(), "default".to_string())]);
        let file = write_config(dir.path(), key, "file");
        let file_layer = config::read_file(Path::new(&file)).unwrap();
        let flag_layer = resolved(&[flag(key), "flag".into()], &[]);
        assert_eq!(flag_layer.source(key), Some(Source::Flag));

        let all = Settings::from_layers(&[
            (
                Source::Flag,
                Layer::from([(key.to_string(), "flag".to_string())]),
            ),
            (Source::File, file_layer.clone()),
            (Source::Default, default.clone()),
        ]);
        assert_eq!(all.raw(key), Some("flag"), "{key}");
        let two = Settings::from_layers(&[
            (Source::Default, default.clone()),
            (Source::File, file_layer),
        ]);
        assert_eq!(two.raw(key), Some("file"), "{key}");
        let one = Settings::from_layers(&[(Source::Default, default)]);
        assert_eq!(one.raw(key), Some("default"), "{key}");

        // The same through the command line.
        let s = resolved(
            &["--config".into(), file.clone(), flag(key), "flag".into()],
            &[],
        );
        assert_eq!(s.raw(key), Some("flag"), "{key}");
        let s = resolved(&["--config".into(), file], &[]);
        assert_eq!(s.raw(key), Some("file"), "{key}");
        assert_eq!(s.source(key), Some(Source::File));
        let s = resolved(&[], &[]);
        assert_eq!(
            s.raw(key),
            config::defaults().get(key).map(String::as_str),
            "{key}"
        );
    }
}

#[test]
fn env_sits_between_file_and_flag() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_config(dir.path(), "t_max", "10");
    let env = [("FLUXSHOOT_T_MAX".to_string(), "20".to_string())];
    let s = resolved(&["--config".into(), file.clone()], &env);
    assert_eq!(s.raw("t_max"), Some("20"));
    assert_eq!(s.source("t_max"), Some(Source::Env));
    let s = resolved(
        &["--config".into(), file, "--t-max".into(), "30".into()],
        &env,
    );
    assert_eq!(s.controls().unwrap().t_max, 30.0);
}

#[test]
fn preset_sits_between_default_and_file() {
    let dir = tempfile::tempdir().unwrap();
    let s = resolved(&["--preset".into(), "default-shoot".into()], &[]);
    assert_eq!(s.raw("beta"), Some("0.5"));
    assert_eq!(s.source("beta"), Some(Source::Preset));
    let file = write_config(dir.path(), "beta", "0.25");
    let s = resolved(
        &[
            "--preset".into(),
            "default-shoot".into(),
            "--config".into(),
            file,
        ],
        &[],
    );
    assert_eq!(s.raw("beta"), Some("0.25"));
    assert_eq!(s.raw("c"), Some("-1"));
}

#[test]
fn typed_values_follow_the_winning_layer() {
    let s = resolved(
        &[
            "--preset".into(),
            "default-shoot".into(),
            "--abs-tol".into(),
            "1e-3".into(),
        ],
        &[("FLUXSHOOT_ABS_TOL".into(), "1e-2".into())],
    );
    let p = s.problem().unwrap();
    assert_eq!(p.controls.abs_tol, 1e-3);
    assert_eq!(p.g.beta(), Some(0.5));
}

#[test]
fn unknown_and_malformed_inputs_are_config_errors() {
    let err = resolve(["fluxshoot", "solve"], [("FLUXSHOOT_COLOUR", "blue")]).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let err = resolve(["fluxshoot", "solve", "--preset", "nope"], NO_ENV).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let (_, s) = resolve(["fluxshoot", "solve", "--a", "x"], NO_ENV).unwrap();
    let err = s.require_f64("a").unwrap_err().to_string();
    assert!(err.contains("`a`") && err.contains("flag"), "{err}");
}
