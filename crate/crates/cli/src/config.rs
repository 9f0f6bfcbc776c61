//! Layered configuration: built-in defaults, then a preset, then a
//! `key=value` file, then `FLUXSHOOT_*` environment variables, then flags.
//! Every layer speaks the same flat keys.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use fluxshoot::model::{GSpec, ProblemSpec, SolverControls};

use crate::CliError;

pub const ENV_PREFIX: &str = "FLUXSHOOT_";

/// Every key a layer may set.
pub const KEYS: [&str; 19] = [
    "a",
    "c",
    "b",
    "beta",
    "g",
    "t_max",
    "abs_tol",
    "rel_tol",
    "bisect_tol",
    "out",
    "dt",
    "m",
    "b_min",
    "b_max",
    "points",
    "b_values",
    "follow_blowup",
    "allow_unproven_g",
    "coeffs",
];

pub const PRESETS: [&str; 3] = ["oracle", "paper-b1-empty", "default-shoot"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Source {
    Default,
    Preset,
    File,
    Env,
    Flag,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Default => "default",
            Source::Preset => "preset",
            Source::File => "config file",
            Source::Env => "environment",
            Source::Flag => "flag",
        })
    }
}

pub type Layer = BTreeMap<String, String>;

pub fn defaults() -> Layer {
    let d = SolverControls::default();
    [
        ("g", "quadratic".to_string()),
        ("t_max", d.t_max.to_string()),
        ("abs_tol", d.abs_tol.to_string()),
        ("rel_tol", d.rel_tol.to_string()),
        ("bisect_tol", d.bisect_tol.to_string()),
        ("dt", "0.01".to_string()),
        ("follow_blowup", "true".to_string()),
        ("allow_unproven_g", "false".to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

const PRESET_FILES: [(&str, &str); 3] = [
    ("oracle", include_str!("../presets/oracle.conf")),
    (
        "paper-b1-empty",
        include_str!("../presets/paper-b1-empty.conf"),
    ),
    (
        "default-shoot",
        include_str!("../presets/default-shoot.conf"),
    ),
];

pub fn preset(name: &str) -> Result<Layer, CliError> {
    let Some((_, text)) = PRESET_FILES.iter().find(|(n, _)| *n == name) else {
        return Err(CliError::Config(format!(
            "unknown preset `{name}` (available: {})",
            PRESETS.join(", ")
        )));
    };
    parse_file(text, &format!("preset {name}"))
}

fn check_key(key: &str, origin: &str) -> Result<(), CliError> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(CliError::Config(format!("unknown key `{key}` in {origin}")))
    }
}

/// Parse `key=value` lines; `#` starts a comment.
pub fn parse_file(text: &str, origin: &str) -> Result<Layer, CliError> {
    let mut layer = Layer::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "{origin}:{}: expected key=value, got `{line}`",
                n + 1
            )));
        };
        let key = k.trim();
        check_key(key, origin)?;
        layer.insert(key.to_string(), v.trim().to_string());
    }
    Ok(layer)
}

pub fn read_file(path: &Path) -> Result<Layer, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_file(&text, &path.display().to_string())
}

/// `FLUXSHOOT_T_MAX=...` sets `t_max`. Unrelated variables are ignored;
/// an unknown key under the prefix is an error.
pub fn env_layer<I, K, V>(vars: I) -> Result<Layer, CliError>
where
    I: IntoIterator<Item = (K, V)>,
    K: AsRef<str>,
    V: AsRef<str>,
{
    let mut layer = Layer::new();
    for (k, v) in vars {
        let Some(rest) = k.as_ref().strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let key = rest.to_ascii_lowercase();
        check_key(&key, "environment")?;
        layer.insert(key, v.as_ref().to_string());
    }
    Ok(layer)
}

/// Merged view of all layers, remembering where each value came from.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, (String, Source)>,
}

impl Settings {
    pub fn from_layers(layers: &[(Source, Layer)]) -> Self {
        let mut sorted: Vec<&(Source, Layer)> = layers.iter().collect();
        sorted.sort_by_key(|(s, _)| *s);
        let mut values = BTreeMap::new();
        for (source, layer) in sorted {
            for (k, v) in layer {
                values.insert(k.clone(), (v.clone(), *source));
            }
        }
        Self { values }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    pub fn source(&self, key: &str) -> Option<Source> {
        self.values.get(key).map(|(_, s)| *s)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some((v, source)) => v.parse().map(Some).map_err(|_| {
                CliError::Config(format!("invalid value `{v}` for `{key}` (from {source})"))
            }),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        let v: Option<f64> = self.parse(key)?;
        match v {
            Some(x) if !x.is_finite() => Err(CliError::Config(format!("`{key}` must be finite"))),
            _ => Ok(v),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, CliError> {
        self.f64(key)?
            .ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.parse(key)
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        Ok(self.parse(key)?.unwrap_or(false))
    }

    pub fn string(&self, key: &str) -> Option<String> {
        self.raw(key).map(str::to_string)
    }

    pub fn controls(&self) -> Result<SolverControls, CliError> {
        let c = SolverControls {
            t_max: self.require_f64("t_max")?,
            abs_tol: self.require_f64("abs_tol")?,
            rel_tol: self.require_f64("rel_tol")?,
            bisect_tol: self.require_f64("bisect_tol")?,
            ..SolverControls::default()
        };
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }

    /// `g` is `quadratic` (needs `beta`), `oracle-cubic`, or `polynomial`
    /// (needs `coeffs`, comma separated from the constant term up).
    pub fn g(&self) -> Result<GSpec, CliError> {
        let kind = self.raw("g").unwrap_or("quadratic");
        match kind {
            "quadratic" => Ok(GSpec::quadratic(self.require_f64("beta")?)),
            "oracle-cubic" => Ok(GSpec::oracle_cubic()),
            "polynomial" => {
                let text = self
                    .raw("coeffs")
                    .ok_or_else(|| CliError::Config("missing required key `coeffs`".into()))?;
                let coeffs = parse_list(text, "coeffs")?;
                GSpec::polynomial(coeffs).map_err(|e| CliError::Config(e.to_string()))
            }
            other => Err(CliError::Config(format!(
                "invalid value `{other}` for `g` (quadratic, oracle-cubic, polynomial)"
            ))),
        }
    }

    pub fn problem(&self) -> Result<ProblemSpec, CliError> {
        let a = self.require_f64("a")?;
        let c = self.require_f64("c")?;
        let mut p = ProblemSpec::with_controls(a, c, self.g()?, self.controls()?)
            .map_err(|e| CliError::Config(e.to_string()))?;
        p.allow_unproven_g = self.bool("allow_unproven_g")?;
        Ok(p)
    }
}

pub fn parse_list(text: &str, key: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Config(format!("invalid number `{s}` in `{key}`")))
        })
        .collect()
}
