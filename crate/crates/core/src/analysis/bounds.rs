use serde::{Deserialize, Serialize};

use crate::classify::{classify, Classification};
use crate::integrator::Trajectory;
use crate::shooting::large_slope_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundStatus {
    Passed,
    Failed,
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub status: BoundStatus,
    pub detail: String,
}

impl BoundCheck {
    fn judged(name: &str, ok: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            status: if ok {
                BoundStatus::Passed
            } else {
                BoundStatus::Failed
            },
            detail,
        }
    }

    fn skipped(name: &str, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: BoundStatus::Skipped {
                reason: reason.into(),
            },
            detail: String::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == BoundStatus::Passed
    }

    pub fn is_skipped(&self) -> bool {
        matches!(self.status, BoundStatus::Skipped { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn get(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// No applicable check failed.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != BoundStatus::Failed)
    }
}

/// First time `f` rises through zero while `f' > 0`, on the dense output.
fn zero_of_f(traj: &Trajectory) -> Option<f64> {
    let tol = traj.problem().controls.event_tol;
    let nodes = traj.nodes();
    let k = nodes
        .windows(2)
        .position(|w| w[0].f < 0.0 && w[1].f >= 0.0)?;
    let (mut lo, mut hi) = (nodes[k].t, nodes[k + 1].t);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match traj.sample(mid) {
            Ok(s) if s.f < 0.0 => lo = mid,
            Ok(_) => hi = mid,
            Err(_) => return None,
        }
    }
    Some(hi)
}

/// Check the a priori bounds that apply to this trajectory:
///
/// * `zero_slope`: for `a < 0` and `b` above the large-slope root,
///   `f' > 3b/4` where `f` first vanishes;
/// * `half_slope_time`: where `f'` first reaches `b/2` with `f >= 0`,
///   `t >= (c + sqrt(c^2 + b^3)) / b^2`;
/// * `crossing_height`: for Type II with `b > 0`, `f(t0)^2 <= 2b + a^2` at
///   the zero of `f'`.
///
/// Checks that do not apply are reported as skipped.
pub fn lemma_bound_checks(traj: &Trajectory) -> BoundReport {
    let p = traj.problem();
    let (a, b, c) = (p.a, traj.b(), p.c);
    let tol = p.controls.event_tol;
    let mut checks = Vec::with_capacity(3);

    let seed = large_slope_seed(a, c);
    checks.push(if !(a < 0.0) {
        BoundCheck::skipped("zero_slope", "a >= 0")
    } else if !(b > seed) {
        BoundCheck::skipped(
            "zero_slope",
            format!("b = {b} is not above the root {seed}"),
        )
    } else {
        match zero_of_f(traj) {
            Some(s) => match traj.sample(s) {
                Ok(st) if st.fp > 0.0 => BoundCheck::judged(
                    "zero_slope",
                    st.fp > 0.75 * b,
                    format!("f'(s_b) = {} vs 3b/4 = {} at s_b = {s}", st.fp, 0.75 * b),
                ),
                _ => BoundCheck::skipped("zero_slope", "f' not positive at the zero of f"),
            },
            None => BoundCheck::skipped("zero_slope", "f never crosses zero"),
        }
    });

    checks.push(if !(b > 0.0) {
        BoundCheck::skipped("half_slope_time", "b <= 0")
    } else {
        match traj.first_time_fp_below(0.5 * b, tol) {
            Some(tb) => match traj.sample(tb) {
                Ok(st) if st.f >= 0.0 => {
                    let lower = (c + (c * c + b * b * b).sqrt()) / (b * b);
                    BoundCheck::judged(
                        "half_slope_time",
                        tb >= lower,
                        format!("t_b = {tb} vs lower bound {lower}"),
                    )
                }
                Ok(st) => BoundCheck::skipped("half_slope_time", format!("f(t_b) = {} < 0", st.f)),
                Err(_) => BoundCheck::skipped("half_slope_time", "t_b outside trajectory"),
            },
            None => BoundCheck::skipped("half_slope_time", "f' never reaches b/2"),
        }
    });

    checks.push(match classify(traj) {
        Classification::TypeII { t0, .. } if b > 0.0 => match traj.sample(t0) {
            Ok(st) => {
                let bound = 2.0 * b + a * a;
                BoundCheck::judged(
                    "crossing_height",
                    st.f * st.f <= bound,
                    format!(
                        "f(t0)^2 = {} vs 2b + a^2 = {bound} at t0 = {t0}",
                        st.f * st.f
                    ),
                )
            }
            Err(_) => BoundCheck::skipped("crossing_height", "t0 outside trajectory"),
        },
        Classification::TypeII { .. } => BoundCheck::skipped("crossing_height", "b <= 0"),
        other => BoundCheck::skipped(
            "crossing_height",
            format!("not Type II ({})", other.label()),
        ),
    });

    BoundReport { checks }
}
