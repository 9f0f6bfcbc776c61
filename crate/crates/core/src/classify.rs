//! Type I / Type II dichotomy.
//!
//! A trajectory is Type I when `f' >= 0` on its whole maximal interval and
//! Type II when `f'` is eventually negative. With `c < 0` and `g > 0` off the
//! origin every trajectory is concave, so Type II is decided by the first
//! downcrossing of `f'` and Type I by reaching the horizon with `f' > 0`.

use serde::{Deserialize, Serialize};

use crate::integrator::{integrate, integrate_through, IntegrateError, Termination, Trajectory};
use crate::model::ProblemSpec;

/// Relative change of `f` over the last decade of time below which `f` is
/// treated as having plateaued.
pub const PLATEAU_REL_CHANGE: f64 = 1e-3;

/// `f'(t_max) / f'(t_max / 2)` below this means `f'` is still collapsing
/// exponentially. Power-law and plateau tails keep the ratio near one.
pub const DECAY_RATIO: f64 = 1e-3;

/// Automatic horizon doublings before an inconclusive verdict is surfaced.
pub const MAX_RETRIES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Classification {
    TypeI {
        bounded_hint: bool,
    },
    TypeII {
        /// First time after which `f' < 0`.
        t0: f64,
        tb_est: Option<f64>,
    },
    Inconclusive {
        reason: String,
    },
}

impl Classification {
    pub fn is_type_i(&self) -> bool {
        matches!(self, Classification::TypeI { .. })
    }

    pub fn is_type_ii(&self) -> bool {
        matches!(self, Classification::TypeII { .. })
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self, Classification::Inconclusive { .. })
    }

    /// `"I"`, `"II"` or `"inconclusive"`.
    pub fn label(&self) -> &'static str {
        match self {
            Classification::TypeI { .. } => "I",
            Classification::TypeII { .. } => "II",
            Classification::Inconclusive { .. } => "inconclusive",
        }
    }
}

pub fn classify(traj: &Trajectory) -> Classification {
    let tb_est = match traj.termination() {
        Termination::BlowUp { t_est } => Some(t_est),
        _ => None,
    };

    // f'(0) <= 0 with f'' < 0 means f' < 0 on (0, T_b).
    if traj.b() <= 0.0 {
        return Classification::TypeII { t0: 0.0, tb_est };
    }

    let last = traj.final_state();
    match traj.termination() {
        Termination::ZeroCrossing { t0 } => Classification::TypeII { t0, tb_est: None },
        Termination::BlowUp { t_est } => match traj.first_crossing() {
            Some(t0) if last.fp < 0.0 => Classification::TypeII {
                t0,
                tb_est: Some(t_est),
            },
            _ => Classification::Inconclusive {
                reason: format!(
                    "blow-up at t = {t_est} without a recorded f' crossing (f' = {})",
                    last.fp
                ),
            },
        },
        Termination::ReachedTmax => {
            if let Some(t0) = traj.first_crossing() {
                // Concavity keeps f' negative after the crossing; only the
                // blow-up time is missing.
                return Classification::TypeII { t0, tb_est: None };
            }
            if !traj.nodes().iter().all(|s| s.fp > 0.0) {
                return Classification::Inconclusive {
                    reason: "f' reached zero without a localized crossing".into(),
                };
            }
            // Still on the exponential approach to a plateau: the two sides of
            // the critical slope have not separated yet.
            if let Ok(mid) = traj.sample(0.5 * last.t) {
                if last.fp < DECAY_RATIO * mid.fp {
                    return Classification::Inconclusive {
                        reason: format!(
                            "f' still decaying exponentially at t_max = {} (f' = {:e}, {:e} at t_max/2)",
                            last.t, last.fp, mid.fp
                        ),
                    };
                }
            }
            Classification::TypeI {
                bounded_hint: bounded_hint(traj),
            }
        }
    }
}

fn bounded_hint(traj: &Trajectory) -> bool {
    let last = traj.final_state();
    if !(last.fp < traj.problem().controls.zero_eps) {
        return false;
    }
    let Ok(earlier) = traj.sample(last.t / 10.0) else {
        return false;
    };
    let scale = last.f.abs().max(f64::MIN_POSITIVE);
    (last.f - earlier.f).abs() / scale < PLATEAU_REL_CHANGE
}

/// Outcome of [`classify_b`].
#[derive(Debug, Clone)]
pub struct Verdict {
    pub b: f64,
    pub classification: Classification,
    pub trajectory: Trajectory,
    /// Number of horizon doublings used.
    pub retries: usize,
}

/// Integrate at `b` and classify, doubling `t_max` up to [`MAX_RETRIES`]
/// times while the verdict is inconclusive.
pub fn classify_b(problem: &ProblemSpec, b: f64) -> Result<Verdict, IntegrateError> {
    let mut p = problem.clone();
    let mut retries = 0;
    loop {
        let trajectory = integrate(&p, b)?;
        let classification = classify(&trajectory);
        if !classification.is_inconclusive() || retries == MAX_RETRIES {
            return Ok(Verdict {
                b,
                classification,
                trajectory,
                retries,
            });
        }
        retries += 1;
        p.controls.t_max *= 2.0;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BlowupStatus {
    Confirmed {
        t0: f64,
        tb_est: f64,
    },
    /// Still finite at `t_reached` after the allowed escalation.
    NeedsRerun {
        t_reached: f64,
    },
    /// Input was not Type II.
    NotTypeII {
        classification: Classification,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub status: BlowupStatus,
    /// Horizon doublings spent.
    pub escalations: usize,
}

impl BlowupReport {
    pub fn confirmed(&self) -> bool {
        matches!(self.status, BlowupStatus::Confirmed { .. })
    }
}

/// Confirm that a Type II trajectory ends in finite-time blow-up,
/// continuing past the `f'` crossing and doubling `t_max` once if needed.
pub fn blowup_followthrough(traj: &Trajectory) -> Result<BlowupReport, IntegrateError> {
    let classification = classify(traj);
    let Classification::TypeII { t0, .. } = classification else {
        return Ok(BlowupReport {
            status: BlowupStatus::NotTypeII { classification },
            escalations: 0,
        });
    };
    if let Termination::BlowUp { t_est } = traj.termination() {
        return Ok(BlowupReport {
            status: BlowupStatus::Confirmed { t0, tb_est: t_est },
            escalations: 0,
        });
    }
    let mut p = traj.problem().clone();
    for escalations in 0..=1 {
        let through = integrate_through(&p, traj.b())?;
        if let Termination::BlowUp { t_est } = through.termination() {
            return Ok(BlowupReport {
                status: BlowupStatus::Confirmed { t0, tb_est: t_est },
                escalations,
            });
        }
        if escalations == 1 {
            return Ok(BlowupReport {
                status: BlowupStatus::NeedsRerun {
                    t_reached: through.final_time(),
                },
                escalations,
            });
        }
        p.controls.t_max *= 2.0;
    }
    unreachable!()
}
