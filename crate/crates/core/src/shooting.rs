//! Critical slope search.
//!
//! For `g(x) = beta x^2` with `0 < beta < 1` the Type I slopes form a closed
//! half-line `[b*, +inf)` and every `b <= 0` is Type II, so the
//! classification is a monotone predicate in `b`. We bracket it by doubling,
//! check monotonicity on a coarse sweep, and bisect down to `bisect_tol`.
//! The Type I end of the final bracket is reported as `b*`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{blowup_followthrough, classify_b, BlowupStatus, Classification, Verdict};
use crate::integrator::{IntegrateError, Trajectory};
use crate::model::{GKind, ModelError, ProblemSpec};

pub const MAX_DOUBLINGS: usize = 60;

/// Interior points of the monotonicity sweep run before bisection.
pub const SWEEP_POINTS: usize = 16;

/// `f'` level at which the plateau of a bounded solution is read off.
pub const PLATEAU_FP_LEVEL: f64 = 1e-6;

/// Slack on `f <= sqrt(2 b* + a^2)` along the critical trajectory.
pub const BOUNDEDNESS_SLACK: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum ShootError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("shooting is only supported for g = beta x^2 with 0 < beta <= 1: {reason}")]
    UnsupportedG { reason: String },
    #[error(
        "no Type I slope found after {doublings} doublings (last b = {last_b:e}); \
         the Type I set may be empty, as for g = x^2 with a <= 0"
    )]
    BracketFailure {
        last_b: f64,
        doublings: usize,
        /// Every slope probed, with its verdict label.
        probes: Vec<(f64, String)>,
    },
    #[error("bisection did not reach width {tol:e} in {iterations} iterations (width {width:e})")]
    MaxIterations {
        iterations: usize,
        width: f64,
        tol: f64,
    },
    #[error("classification is not monotone: Type II at b = {type_ii_at} above Type I at b = {type_i_at}")]
    InconsistentPredicate { type_ii_at: f64, type_i_at: f64 },
    #[error("classification at b = {b} stayed inconclusive: {reason}")]
    Inconclusive { b: f64, reason: String },
    #[error("no plateau on the trajectory at b = {b}; the bracket may be too wide (try a smaller bisect_tol)")]
    PlateauNotFound { b: f64 },
}

fn check_g(problem: &ProblemSpec) -> Result<(), ShootError> {
    problem.validate()?;
    if problem.allow_unproven_g {
        return Ok(());
    }
    match problem.g.kind() {
        GKind::Quadratic { beta } if *beta > 0.0 && *beta <= 1.0 => Ok(()),
        GKind::Quadratic { beta } => Err(ShootError::UnsupportedG {
            reason: format!("beta = {beta} is outside (0, 1]"),
        }),
        other => Err(ShootError::UnsupportedG {
            reason: format!("{other:?} is not quadratic (set allow_unproven_g to override)"),
        }),
    }
}

fn verdict(problem: &ProblemSpec, b: f64) -> Result<Verdict, ShootError> {
    let v = classify_b(problem, b)?;
    if let Classification::Inconclusive { reason } = &v.classification {
        return Err(ShootError::Inconclusive {
            b,
            reason: reason.clone(),
        });
    }
    Ok(v)
}

/// Positive root of `7 X^2 - 32 a^2 X - 32 a c`, beyond which the solution
/// with `a < 0` is known to cross `f = 0` while `f' > 3b/4`.
pub fn large_slope_seed(a: f64, c: f64) -> f64 {
    let p = 32.0 * a * a;
    let q = 32.0 * a * c;
    (p + (p * p + 28.0 * q).sqrt()) / 14.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    /// Type II end.
    pub lo: f64,
    /// Type I end.
    pub hi: f64,
    /// Every slope probed while bracketing, with its verdict label.
    pub probes: Vec<(f64, String)>,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Find `lo` (Type II) and `hi` (Type I). `lo` starts at 0; `hi` doubles from
/// `max(1, seed)` and each Type II probe becomes the new `lo`.
pub fn bracket(problem: &ProblemSpec) -> Result<Bracket, ShootError> {
    check_g(problem)?;
    let mut probes = Vec::new();
    let mut lo = 0.0;
    let v0 = verdict(problem, lo)?;
    probes.push((lo, v0.classification.label().to_string()));
    if !v0.classification.is_type_ii() {
        return Err(ShootError::InconsistentPredicate {
            type_ii_at: f64::NAN,
            type_i_at: lo,
        });
    }

    let seed = if problem.a < 0.0 {
        large_slope_seed(problem.a, problem.c)
    } else {
        1.0
    };
    let mut hi = seed.max(1.0);
    for doublings in 0..=MAX_DOUBLINGS {
        let v = verdict(problem, hi)?;
        probes.push((hi, v.classification.label().to_string()));
        if v.classification.is_type_i() {
            return Ok(Bracket { lo, hi, probes });
        }
        if doublings == MAX_DOUBLINGS {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    Err(ShootError::BracketFailure {
        last_b: hi,
        doublings: MAX_DOUBLINGS,
        probes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Diagnostic {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BStarResult {
    pub b_star: f64,
    /// `(b_lo, b_hi)`: Type II and Type I ends.
    pub bracket: (f64, f64),
    /// Plateau of `f` on the Type I end, when one is visible.
    pub mu: Option<f64>,
    pub iterations: usize,
    /// Bracket width when bisection started.
    pub initial_width: f64,
    pub diagnostics: Vec<Diagnostic>,
}

impl BStarResult {
    pub fn width(&self) -> f64 {
        self.bracket.1 - self.bracket.0
    }

    pub fn diagnostic(&self, name: &str) -> Option<&Diagnostic> {
        self.diagnostics.iter().find(|d| d.name == name)
    }
}

/// Read the limit of `f` off a bounded Type I trajectory: at the first time
/// `f'` falls to [`PLATEAU_FP_LEVEL`], `mu ~ f + f'^2 / (-f'')`, which is the
/// tail law `f' ~ mu (mu - f)`, `f'' ~ -mu f'` solved for `mu`.
pub fn plateau_estimate(traj: &Trajectory) -> Option<f64> {
    let t = traj.first_time_fp_below(PLATEAU_FP_LEVEL, 1e-9)?;
    let s = traj.sample(t).ok()?;
    if s.fp > 0.0 && s.fpp < 0.0 {
        Some(s.f + s.fp * s.fp / -s.fpp)
    } else {
        Some(s.f)
    }
}

/// Bracket, sweep for monotonicity, then bisect.
pub fn find_bstar(problem: &ProblemSpec) -> Result<BStarResult, ShootError> {
    let br = bracket(problem)?;
    let (lo, hi) = monotone_sweep(problem, br.lo, br.hi)?;
    bisect(problem, lo, hi)
}

/// Classify [`SWEEP_POINTS`] interior slopes concurrently, fail on a Type II
/// above a Type I, and return the cell containing the flip.
fn monotone_sweep(problem: &ProblemSpec, lo: f64, hi: f64) -> Result<(f64, f64), ShootError> {
    if hi - lo <= problem.controls.bisect_tol {
        return Ok((lo, hi));
    }
    let n = SWEEP_POINTS + 1;
    let bs: Vec<f64> = (1..n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect();
    let verdicts: Vec<Result<bool, ShootError>> = bs
        .par_iter()
        .map(|&b| verdict(problem, b).map(|v| v.classification.is_type_i()))
        .collect();
    let mut pts = vec![(lo, false)];
    for (b, v) in bs.into_iter().zip(verdicts) {
        pts.push((b, v?));
    }
    pts.push((hi, true));
    check_monotone(&pts)?;
    let k = pts.iter().position(|&(_, t1)| t1).expect("hi is Type I");
    Ok((pts[k - 1].0, pts[k].0))
}

fn check_monotone(pts: &[(f64, bool)]) -> Result<(), ShootError> {
    if let Some(first_i) = pts.iter().find(|p| p.1) {
        if let Some(bad) = pts.iter().find(|p| !p.1 && p.0 > first_i.0) {
            return Err(ShootError::InconsistentPredicate {
                type_ii_at: bad.0,
                type_i_at: first_i.0,
            });
        }
    }
    Ok(())
}

/// Bisect a bracket whose `lo` is Type II and `hi` is Type I.
pub fn bisect(problem: &ProblemSpec, mut lo: f64, mut hi: f64) -> Result<BStarResult, ShootError> {
    check_g(problem)?;
    let ctl = problem.controls;
    let initial_width = hi - lo;
    let mut iterations = 0;
    let mut hi_traj = None;
    while hi - lo > ctl.bisect_tol {
        if iterations >= ctl.max_bisect_iters {
            return Err(ShootError::MaxIterations {
                iterations,
                width: hi - lo,
                tol: ctl.bisect_tol,
            });
        }
        let mid = lo + 0.5 * (hi - lo);
        let v = verdict(problem, mid)?;
        if v.classification.is_type_i() {
            hi = mid;
            hi_traj = Some(v.trajectory);
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let hi_traj = match hi_traj {
        Some(t) => t,
        None => verdict(problem, hi)?.trajectory,
    };
    let mu = plateau_estimate(&hi_traj);

    let sign = problem.c + problem.a * hi;
    let diagnostics = vec![
        Diagnostic::new(
            "c_plus_a_bstar_negative",
            sign < 0.0,
            format!("c + a*b_star = {sign}"),
        ),
        Diagnostic::new(
            "bracket_width",
            hi - lo <= ctl.bisect_tol,
            format!("width = {:e}", hi - lo),
        ),
        Diagnostic::new("b_star_positive", hi > 0.0, format!("b_star = {hi}")),
        Diagnostic::new(
            "plateau_found",
            mu.is_some(),
            match mu {
                Some(m) => format!("mu = {m}"),
                None => "f' never fell below the plateau level".into(),
            },
        ),
    ];
    Ok(BStarResult {
        b_star: hi,
        bracket: (lo, hi),
        mu,
        iterations,
        initial_width,
        diagnostics,
    })
}

#[derive(Debug, Clone)]
pub struct CriticalRun {
    pub trajectory: Trajectory,
    pub mu: f64,
    /// `sqrt(2 b* + a^2)`.
    pub bound: f64,
    /// Largest `f` seen on the dense output.
    pub max_f: f64,
    pub bound_ok: bool,
}

/// Integrate at `b*` to `t_max`, read off the plateau and check
/// `f <= sqrt(2 b* + a^2) + BOUNDEDNESS_SLACK` along the way.
pub fn critical_trajectory(
    problem: &ProblemSpec,
    result: &BStarResult,
) -> Result<CriticalRun, ShootError> {
    let b = result.b_star;
    let v = classify_b(problem, b)?;
    let trajectory = v.trajectory;
    let mu = plateau_estimate(&trajectory).ok_or(ShootError::PlateauNotFound { b })?;
    let bound = (2.0 * b + problem.a * problem.a).sqrt();
    let max_f = trajectory
        .refined(8)
        .iter()
        .map(|s| s.f)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CriticalRun {
        trajectory,
        mu,
        bound,
        max_f,
        bound_ok: max_f <= bound + BOUNDEDNESS_SLACK,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub b: f64,
    pub classification: Classification,
    pub retries: usize,
}

/// Classify every slope (sorted ascending) in parallel. With `follow_blowup`
/// Type II rows are integrated through their crossing to estimate `T_b`.
pub fn sweep(
    problem: &ProblemSpec,
    bs: &[f64],
    follow_blowup: bool,
) -> Result<Vec<SweepRow>, ShootError> {
    problem.validate()?;
    let mut bs = bs.to_vec();
    bs.sort_by(f64::total_cmp);
    bs.par_iter()
        .map(|&b| {
            let v = classify_b(problem, b)?;
            let mut classification = v.classification;
            if follow_blowup {
                if let Classification::TypeII { tb_est: None, .. } = classification {
                    let report = blowup_followthrough(&v.trajectory)?;
                    if let BlowupStatus::Confirmed { t0, tb_est } = report.status {
                        classification = Classification::TypeII {
                            t0,
                            tb_est: Some(tb_est),
                        };
                    }
                }
            }
            Ok(SweepRow {
                b,
                classification,
                retries: v.retries,
            })
        })
        .collect()
}

/// `Err((b_ii, b_i))` when a Type II row sits above a Type I row.
pub fn sweep_is_monotone(rows: &[SweepRow]) -> Result<(), (f64, f64)> {
    let pts: Vec<(f64, bool)> = rows
        .iter()
        .filter(|r| !r.classification.is_inconclusive())
        .map(|r| (r.b, r.classification.is_type_i()))
        .collect();
    check_monotone(&pts).map_err(|e| match e {
        ShootError::InconsistentPredicate {
            type_ii_at,
            type_i_at,
        } => (type_ii_at, type_i_at),
        _ => unreachable!(),
    })
}
