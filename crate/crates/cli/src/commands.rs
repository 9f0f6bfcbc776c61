use std::collections::BTreeMap;
use std::path::PathBuf;

use fluxshoot::acceptance::{self, Suite};
use fluxshoot::analysis::{
    fit_exponential_tail, fit_power_tail, m_form_data, m_form_residual, AnalysisError, TailFit,
};
use fluxshoot::classify::{classify_b, Classification};
use fluxshoot::integrator::{integrate, IntegrateError, Termination, Trajectory};
use fluxshoot::model::{GSpec, ProblemSpec, ShootState};
use fluxshoot::shooting::{critical_trajectory, find_bstar, sweep, sweep_is_monotone, ShootError};
use serde::Serialize;

use crate::config::{parse_list, Settings};
use crate::emit;
use crate::{CliError, Command};

/// Slope offset above `b*` for the unbounded-tail fit, and its horizon.
const POWER_FIT_OFFSET: f64 = 1.0;
const POWER_FIT_T_MAX: f64 = 2000.0;

pub fn dispatch(command: &Command, s: &Settings) -> Result<(), CliError> {
    match command {
        Command::Solve => solve(s),
        Command::Shoot => shoot(s),
        Command::Sweep => sweep_cmd(s),
        Command::Verify { list } => verify(s, *list),
        Command::Transform => transform(s),
    }
}

fn integrate_err(e: IntegrateError) -> CliError {
    match e {
        IntegrateError::Model(m) => CliError::Config(m.to_string()),
        e @ IntegrateError::StepUnderflow { .. } => CliError::Underflow(e.to_string()),
        e => CliError::Runtime(e.to_string()),
    }
}

fn shoot_err(e: ShootError) -> CliError {
    match e {
        ShootError::Model(m) => CliError::Config(m.to_string()),
        ShootError::UnsupportedG { .. } => CliError::Config(e.to_string()),
        ShootError::Integrate(i) => integrate_err(i),
        ShootError::BracketFailure { .. } => CliError::BracketFailure(e.to_string()),
        ShootError::InconsistentPredicate { .. } => CliError::Inconsistent(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

fn analysis_err(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::MOutOfRange { .. } => CliError::Config(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

fn out_path(s: &Settings, default: &str) -> PathBuf {
    PathBuf::from(s.string("out").unwrap_or_else(|| default.to_string()))
}

/// `0, dt, 2 dt, ...` up to the end of the trajectory.
fn uniform_samples(traj: &Trajectory, dt: f64) -> Result<Vec<ShootState>, CliError> {
    let t_end = traj.final_time();
    let mut out = Vec::new();
    for i in 0.. {
        let t = i as f64 * dt;
        if t > t_end {
            break;
        }
        out.push(traj.sample(t).map_err(integrate_err)?);
    }
    Ok(out)
}

fn termination_label(t: Termination) -> &'static str {
    match t {
        Termination::ReachedTmax => "reached_t_max",
        Termination::ZeroCrossing { .. } => "zero_crossing",
        Termination::BlowUp { .. } => "blow_up",
    }
}

fn classification_lines(c: &Classification) -> Vec<String> {
    let mut lines = vec![format!("type={}", c.label())];
    match c {
        Classification::TypeI { bounded_hint } => {
            lines.push(format!("bounded_hint={bounded_hint}"))
        }
        Classification::TypeII { t0, tb_est } => {
            lines.push(format!("t0={t0}"));
            if let Some(tb) = tb_est {
                lines.push(format!("tb_est={tb}"));
            }
        }
        Classification::Inconclusive { reason } => lines.push(format!("reason={reason}")),
    }
    lines
}

fn solve(s: &Settings) -> Result<(), CliError> {
    let problem = s.problem()?;
    let b = s.require_f64("b")?;
    let dt = s.require_f64("dt")?;
    if dt <= 0.0 {
        return Err(CliError::Config(format!("`dt` must be positive, got {dt}")));
    }
    let out = out_path(s, "trajectory.csv");
    let verdict = match classify_b(&problem, b) {
        Ok(v) => v,
        Err(IntegrateError::StepUnderflow { t, h, trajectory }) => {
            // Keep what was integrated so the failure can be inspected.
            let rows = uniform_samples(&trajectory, dt)?;
            emit::write_atomic(&out, &emit::trajectory_csv(&rows)?)?;
            println!("termination=step_underflow");
            println!("t_end={t}");
            println!("out={}", out.display());
            return Err(CliError::Underflow(format!(
                "step size underflow at t = {t} (h = {h:e}); truncated trajectory written"
            )));
        }
        Err(e) => return Err(integrate_err(e)),
    };
    let traj = &verdict.trajectory;
    let rows = uniform_samples(traj, dt)?;
    emit::write_atomic(&out, &emit::trajectory_csv(&rows)?)?;
    for line in classification_lines(&verdict.classification) {
        println!("{line}");
    }
    println!("termination={}", termination_label(traj.termination()));
    println!("t_end={}", traj.final_time());
    println!("retries={}", verdict.retries);
    println!("rows={}", rows.len());
    println!("out={}", out.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct SignCheck {
    c_plus_a_b_star: f64,
    negative: bool,
}

#[derive(Debug, Serialize)]
struct Boundedness {
    bound: f64,
    max_f: f64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct DiagnosticEntry {
    passed: bool,
    detail: String,
}

#[derive(Debug, Serialize)]
struct TailEntry {
    b: f64,
    fit: Option<TailFit>,
    error: Option<String>,
}

impl TailEntry {
    fn new(b: f64, fit: Result<TailFit, String>) -> Self {
        match fit {
            Ok(fit) => Self {
                b,
                fit: Some(fit),
                error: None,
            },
            Err(e) => Self {
                b,
                fit: None,
                error: Some(e),
            },
        }
    }
}

#[derive(Debug, Serialize)]
struct ShootReport {
    a: f64,
    c: f64,
    beta: Option<f64>,
    b_star: f64,
    b_lo: f64,
    b_hi: f64,
    width: f64,
    mu: Option<f64>,
    iterations: usize,
    initial_width: f64,
    sign: SignCheck,
    boundedness: Boundedness,
    diagnostics: BTreeMap<String, DiagnosticEntry>,
    tail_exponential: TailEntry,
    tail_power: TailEntry,
}

fn shoot(s: &Settings) -> Result<(), CliError> {
    let problem = s.problem()?;
    let out = out_path(s, "shoot.txt");
    emit::json_sibling(&out)?;
    let r = find_bstar(&problem).map_err(shoot_err)?;
    let crit = critical_trajectory(&problem, &r).map_err(shoot_err)?;
    let exp_fit = fit_exponential_tail(&crit.trajectory).map_err(|e| e.to_string());
    let b_up = r.b_star + POWER_FIT_OFFSET;
    let beta = problem.g.beta();
    let power_fit = match beta {
        Some(beta) => integrate(&problem.with_t_max(POWER_FIT_T_MAX), b_up)
            .map_err(|e| e.to_string())
            .and_then(|t| fit_power_tail(&t, beta).map_err(|e| e.to_string())),
        None => Err("power-law tail needs a quadratic g".to_string()),
    };
    let sign = problem.c + problem.a * r.b_star;
    let report = ShootReport {
        a: problem.a,
        c: problem.c,
        beta,
        b_star: r.b_star,
        b_lo: r.bracket.0,
        b_hi: r.bracket.1,
        width: r.width(),
        mu: r.mu,
        iterations: r.iterations,
        initial_width: r.initial_width,
        sign: SignCheck {
            c_plus_a_b_star: sign,
            negative: sign < 0.0,
        },
        boundedness: Boundedness {
            bound: crit.bound,
            max_f: crit.max_f,
            passed: crit.bound_ok,
        },
        diagnostics: r
            .diagnostics
            .iter()
            .map(|d| {
                let entry = DiagnosticEntry {
                    passed: d.passed,
                    detail: d.detail.clone(),
                };
                (d.name.clone(), entry)
            })
            .collect(),
        tail_exponential: TailEntry::new(r.b_star, exp_fit),
        tail_power: TailEntry::new(b_up, power_fit),
    };
    emit::write_report(&out, &report)
}

/// Slopes from `b_values`, or `points` evenly spaced on `[b_min, b_max]`.
fn grid(s: &Settings) -> Result<Vec<f64>, CliError> {
    if let Some(text) = s.raw("b_values") {
        let bs = parse_list(text, "b_values")?;
        if bs.is_empty() {
            return Err(CliError::Config(
                "empty grid: `b_values` lists no slopes".into(),
            ));
        }
        return Ok(bs);
    }
    let n = s
        .usize("points")?
        .ok_or_else(|| CliError::Config("missing required key `points` (or `b_values`)".into()))?;
    if n == 0 {
        return Err(CliError::Config("empty grid: `points` is 0".into()));
    }
    let lo = s.require_f64("b_min")?;
    let hi = if n == 1 {
        s.f64("b_max")?.unwrap_or(lo)
    } else {
        s.require_f64("b_max")?
    };
    if hi < lo || (n == 1 && hi != lo) {
        return Err(CliError::Config(format!(
            "invalid grid: b_min = {lo}, b_max = {hi}, points = {n}"
        )));
    }
    Ok((0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect())
}

pub const SWEEP_HEADER: [&str; 5] = [
    "b",
    "type",
    "t0_or_blank",
    "Tb_est_or_blank",
    "bounded_hint",
];

fn sweep_cmd(s: &Settings) -> Result<(), CliError> {
    let problem = s.problem()?;
    let bs = grid(s)?;
    let follow = s.bool("follow_blowup")?;
    let out = out_path(s, "sweep.csv");
    let rows = sweep(&problem, &bs, follow).map_err(shoot_err)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let (t0, tb, hint) = match &r.classification {
                Classification::TypeI { bounded_hint } => {
                    (String::new(), String::new(), bounded_hint.to_string())
                }
                Classification::TypeII { t0, tb_est } => (
                    emit::num(*t0),
                    tb_est.map(emit::num).unwrap_or_default(),
                    String::new(),
                ),
                Classification::Inconclusive { .. } => Default::default(),
            };
            vec![
                emit::num(r.b),
                r.classification.label().to_string(),
                t0,
                tb,
                hint,
            ]
        })
        .collect();
    emit::write_atomic(&out, &emit::csv_bytes(&SWEEP_HEADER, &table)?)?;
    let count = |label: &str| {
        rows.iter()
            .filter(|r| r.classification.label() == label)
            .count()
    };
    println!("rows={}", rows.len());
    println!("type_i={}", count("I"));
    println!("type_ii={}", count("II"));
    println!("inconclusive={}", count("inconclusive"));
    println!("out={}", out.display());
    match sweep_is_monotone(&rows) {
        Ok(()) => {
            println!("monotone=true");
            Ok(())
        }
        Err((b2, b1)) => {
            println!("monotone=false");
            let msg = format!("Type II at b = {b2} above Type I at b = {b1}");
            // Only the quadratic family with 0 < beta <= 1 is known to be monotone.
            match problem.g.beta() {
                Some(beta) if beta > 0.0 && beta <= 1.0 => Err(CliError::Inconsistent(msg)),
                _ => {
                    eprintln!("warning: {msg}");
                    Ok(())
                }
            }
        }
    }
}

fn verify(s: &Settings, list: bool) -> Result<(), CliError> {
    if list {
        for c in acceptance::list() {
            let budget = c
                .budget
                .map(|d| format!(" (budget {}s)", d.as_secs()))
                .unwrap_or_default();
            println!("{:>2} {}{budget}", c.id, c.title);
        }
        return Ok(());
    }
    let outcomes = Suite::new(s.controls()?).run_all();
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("passed={} failed={failed}", outcomes.len() - failed);
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::VerifyFailed { failed })
    }
}

#[derive(Debug, Serialize)]
struct TransformReport {
    m: f64,
    a: f64,
    beta: f64,
    k: f64,
    a_beta: f64,
    c_beta: f64,
    /// `f'(0)` is the same in both forms.
    b_star_beta: f64,
    b_star_m: f64,
    mu_beta: Option<f64>,
    mu_m: Option<f64>,
    iterations: usize,
    residual: f64,
}

fn transform(s: &Settings) -> Result<(), CliError> {
    let m = s.require_f64("m")?;
    let a = s.require_f64("a")?;
    let out = out_path(s, "transform.txt");
    emit::json_sibling(&out)?;
    let d = m_form_data(m, a).map_err(analysis_err)?;
    let problem =
        ProblemSpec::with_controls(d.a_beta, d.c_beta, GSpec::quadratic(d.beta), s.controls()?)
            .map_err(|e| CliError::Config(e.to_string()))?;
    let r = find_bstar(&problem).map_err(shoot_err)?;
    let v = classify_b(&problem, r.b_star).map_err(integrate_err)?;
    let residual = m_form_residual(&v.trajectory, m).map_err(analysis_err)?;
    let report = TransformReport {
        m,
        a,
        beta: d.beta,
        k: d.k,
        a_beta: d.a_beta,
        c_beta: d.c_beta,
        b_star_beta: r.b_star,
        b_star_m: r.b_star,
        mu_beta: r.mu,
        mu_m: r.mu.map(|mu| mu / d.k),
        iterations: r.iterations,
        residual,
    };
    emit::write_report(&out, &report)
}
