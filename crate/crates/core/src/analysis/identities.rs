use serde::{Deserialize, Serialize};

use crate::integrator::{IntegrateError, Trajectory};
use crate::model::ShootState;

/// Simpson subintervals per accepted step.
const PANELS_PER_STEP: usize = 8;
/// Evaluation points for [`identity_residuals`].
const CHECK_POINTS: usize = 64;

/// Which multiplier the equation was integrated against: `1`, `f` or `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Identity {
    Unit,
    F,
    T,
}

impl Identity {
    pub const ALL: [Identity; 3] = [Identity::Unit, Identity::F, Identity::T];

    fn lhs(self, s: &ShootState, a: f64, b: f64, c: f64) -> f64 {
        let (t, f, fp, fpp) = (s.t, s.f, s.fp, s.fpp);
        match self {
            Identity::Unit => fpp - c + f * fp - a * b,
            Identity::F => f * fpp - a * c - 0.5 * fp * fp + 0.5 * b * b + f * f * fp - a * a * b,
            Identity::T => t * fpp - fp + b + t * f * fp - 0.5 * f * f + 0.5 * a * a,
        }
    }

    fn integrand(self, s: &ShootState, g: f64) -> f64 {
        let q = s.fp * s.fp;
        match self {
            Identity::Unit => q - g,
            Identity::F => s.f * (2.0 * q - g),
            Identity::T => s.t * (q - g),
        }
    }
}

fn simpson(traj: &Trajectory, which: Identity, t0: f64, t1: f64) -> Result<f64, IntegrateError> {
    if t1 <= t0 {
        return Ok(0.0);
    }
    let g = &traj.problem().g;
    let h = (t1 - t0) / PANELS_PER_STEP as f64;
    let mut acc = 0.0;
    for i in 0..=PANELS_PER_STEP {
        let t = if i == PANELS_PER_STEP {
            t1
        } else {
            t0 + i as f64 * h
        };
        let s = traj.sample(t)?;
        let w = if i == 0 || i == PANELS_PER_STEP {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * which.integrand(&s, g.eval(s.fp));
    }
    Ok(acc * h / 3.0)
}

struct Cumulative {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Cumulative {
    fn new(traj: &Trajectory, which: Identity) -> Result<Self, IntegrateError> {
        let times: Vec<f64> = traj.nodes().iter().map(|s| s.t).collect();
        let mut values = Vec::with_capacity(times.len());
        values.push(0.0);
        for w in times.windows(2) {
            let prev = *values.last().unwrap();
            values.push(prev + simpson(traj, which, w[0], w[1])?);
        }
        Ok(Self { times, values })
    }

    fn at(&self, traj: &Trajectory, which: Identity, t: f64) -> Result<f64, IntegrateError> {
        let k = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        Ok(self.values[k] + simpson(traj, which, self.times[k], t)?)
    }
}

/// `LHS - RHS` of the chosen identity at a single time, unscaled.
pub fn residual_at(traj: &Trajectory, which: Identity, t: f64) -> Result<f64, IntegrateError> {
    let p = traj.problem();
    let s = traj.sample(t)?;
    let lhs = which.lhs(&s, p.a, traj.b(), p.c);
    let cum = Cumulative::new(traj, which)?;
    Ok(lhs - cum.at(traj, which, t)?)
}

/// `max |LHS - RHS| / (1 + max |LHS|)` over 64 equally spaced times covering
/// the trajectory.
pub fn identity_residuals(traj: &Trajectory, which: Identity) -> Result<f64, IntegrateError> {
    let p = traj.problem();
    let cum = Cumulative::new(traj, which)?;
    let t_end = traj.final_time();
    let mut max_res: f64 = 0.0;
    let mut max_lhs: f64 = 0.0;
    for i in 0..CHECK_POINTS {
        let t = if i + 1 == CHECK_POINTS {
            t_end
        } else {
            t_end * i as f64 / (CHECK_POINTS - 1) as f64
        };
        let s = traj.sample(t)?;
        let lhs = which.lhs(&s, p.a, traj.b(), p.c);
        let rhs = cum.at(traj, which, t)?;
        max_res = max_res.max((lhs - rhs).abs());
        max_lhs = max_lhs.max(lhs.abs());
    }
    Ok(max_res / (1.0 + max_lhs))
}
