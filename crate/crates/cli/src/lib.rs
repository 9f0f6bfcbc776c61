//! Front end for the `fluxshoot` binary.
//!
//! Exit codes: 0 success, 1 failed verification, 2 invalid configuration,
//! 3 step-size underflow, 4 no Type I slope found, 5 non-monotone
//! classification, 6 any other runtime failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod emit;

use config::{Layer, Settings, Source};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Underflow(String),
    #[error("{0}")]
    BracketFailure(String),
    #[error("{0}")]
    Inconsistent(String),
    #[error("{failed} acceptance criteria failed")]
    VerifyFailed { failed: usize },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::VerifyFailed { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Underflow(_) => 3,
            CliError::BracketFailure(_) => 4,
            CliError::Inconsistent(_) => 5,
            CliError::Runtime(_) => 6,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fluxshoot",
    version,
    about = "Shooting solver for f''' + f f'' + g(f') = 0"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub keys: KeyFlags,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one slope and write `t,f,fp,fpp` samples.
    Solve,
    /// Find the critical slope b* and report diagnostics.
    Shoot,
    /// Classify a grid of slopes.
    Sweep,
    /// Run the acceptance suite.
    Verify {
        /// Print the criteria without running them.
        #[arg(long)]
        list: bool,
    },
    /// Solve the m-form problem through its quadratic equivalent.
    Transform,
}

/// Flags shared by every subcommand. Each key flag overrides the same key
/// from the environment, the config file, the preset and the defaults.
#[derive(Debug, Default, Args)]
pub struct KeyFlags {
    /// Flat `key=value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Built-in parameter set: oracle, paper-b1-empty, default-shoot.
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// quadratic, oracle-cubic or polynomial.
    #[arg(long, global = true)]
    pub g: Option<String>,
    #[arg(long, global = true)]
    pub t_max: Option<String>,
    #[arg(long, global = true)]
    pub abs_tol: Option<String>,
    #[arg(long, global = true)]
    pub rel_tol: Option<String>,
    #[arg(long, global = true)]
    pub bisect_tol: Option<String>,
    /// Output file; reports also get a `.json` sibling.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<String>,
    /// Sampling step for `solve`.
    #[arg(long, global = true)]
    pub dt: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub m: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b_min: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b_max: Option<String>,
    #[arg(long, global = true)]
    pub points: Option<String>,
    /// Comma-separated slopes for `sweep`, instead of a range.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b_values: Option<String>,
    #[arg(long, global = true)]
    pub follow_blowup: Option<String>,
    #[arg(long, global = true)]
    pub allow_unproven_g: Option<String>,
    /// Polynomial coefficients from the constant term up.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub coeffs: Option<String>,
}

impl KeyFlags {
    pub fn layer(&self) -> Layer {
        let pairs = [
            ("a", &self.a),
            ("c", &self.c),
            ("b", &self.b),
            ("beta", &self.beta),
            ("g", &self.g),
            ("t_max", &self.t_max),
            ("abs_tol", &self.abs_tol),
            ("rel_tol", &self.rel_tol),
            ("bisect_tol", &self.bisect_tol),
            ("out", &self.out),
            ("dt", &self.dt),
            ("m", &self.m),
            ("b_min", &self.b_min),
            ("b_max", &self.b_max),
            ("points", &self.points),
            ("b_values", &self.b_values),
            ("follow_blowup", &self.follow_blowup),
            ("allow_unproven_g", &self.allow_unproven_g),
            ("coeffs", &self.coeffs),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }

    /// Merge defaults, preset, config file, environment and flags.
    pub fn settings<I, K, V>(&self, env: I) -> Result<Settings, CliError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut layers = vec![(Source::Default, config::defaults())];
        if let Some(name) = &self.preset {
            layers.push((Source::Preset, config::preset(name)?));
        }
        if let Some(path) = &self.config {
            layers.push((Source::File, config::read_file(path)?));
        }
        layers.push((Source::Env, config::env_layer(env)?));
        layers.push((Source::Flag, self.layer()));
        Ok(Settings::from_layers(&layers))
    }
}

/// Parse `args` and resolve settings against `env` without running anything.
pub fn resolve<A, T, I, K, V>(args: A, env: I) -> Result<(Command, Settings), CliError>
where
    A: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    I: IntoIterator<Item = (K, V)>,
    K: AsRef<str>,
    V: AsRef<str>,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    let settings = cli.keys.settings(env)?;
    Ok((cli.command, settings))
}

/// Run the command line and return the process exit code.
pub fn run<A, T, I, K, V>(args: A, env: I) -> u8
where
    A: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    I: IntoIterator<Item = (K, V)>,
    K: AsRef<str>,
    V: AsRef<str>,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = cli
        .keys
        .settings(env)
        .and_then(|s| commands::dispatch(&cli.command, &s));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
