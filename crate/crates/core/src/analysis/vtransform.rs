use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::integrator::Trajectory;
use crate::model::ShootState;

/// Default spacing in `ln y` between consecutive profile samples.
pub const DLN_Y: f64 = 0.005;
/// Profile sampling stops once `f'` drops below this.
const FP_FLOOR: f64 = 1e-6;
const MIN_SAMPLES: usize = 16;
const Y_MIN: f64 = 1e-4;

/// `v(y) = f / sqrt(b)` as a function of `y = (f' / b)^2`, sampled from
/// `y = 1` (at `t = 0`) downwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VProfile {
    b: f64,
    y: Vec<f64>,
    v: Vec<f64>,
    vp: Vec<f64>,
}

impl VProfile {
    /// `y` must lie in `(0, 1]` and be strictly decreasing.
    pub fn new(b: f64, y: Vec<f64>, v: Vec<f64>, vp: Vec<f64>) -> Result<Self, AnalysisError> {
        if !(b > 0.0) {
            return Err(AnalysisError::InvalidProfile(format!(
                "b = {b} must be positive"
            )));
        }
        if y.len() != v.len() || y.len() != vp.len() {
            return Err(AnalysisError::InvalidProfile("length mismatch".into()));
        }
        if y.iter().chain(&v).chain(&vp).any(|x| !x.is_finite()) {
            return Err(AnalysisError::InvalidProfile("non-finite sample".into()));
        }
        if y.iter().any(|&y| !(y > 0.0 && y <= 1.0)) {
            return Err(AnalysisError::InvalidProfile("y outside (0, 1]".into()));
        }
        if y.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(AnalysisError::InvalidProfile(
                "y not strictly decreasing".into(),
            ));
        }
        Ok(Self { b, y, v, vp })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// `dv/dy`.
    pub fn vp(&self) -> &[f64] {
        &self.vp
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// [`v_transform_with`] at the default spacing [`DLN_Y`].
pub fn v_transform(traj: &Trajectory) -> Result<VProfile, AnalysisError> {
    v_transform_with(traj, DLN_Y)
}

/// Resample the trajectory at steps of `dln_y` in `ln y`, and map each state through
/// `y = (f'/b)^2`, `v = f / sqrt(b)`, `v' = b^{3/2} / (2 f'')`.
pub fn v_transform_with(traj: &Trajectory, dln_y: f64) -> Result<VProfile, AnalysisError> {
    let b = traj.b();
    if !(b > 0.0) {
        return Err(AnalysisError::InvalidProfile(format!(
            "b = {b} must be positive"
        )));
    }
    // Equal steps in ln y: y_k = exp(-k dln), found on the dense output as
    // the times where f' falls to b exp(-k dln / 2).
    let tol = traj.problem().controls.event_tol;
    let mut states: Vec<ShootState> = vec![traj.nodes()[0]];
    for k in 1.. {
        let level = b * (-0.5 * k as f64 * dln_y).exp();
        if level < FP_FLOOR {
            break;
        }
        let Some(t) = traj.first_time_fp_below(level, tol) else {
            break;
        };
        states.push(traj.sample(t)?);
    }

    let sb = b.sqrt();
    let b32 = b * sb;
    let (mut y, mut v, mut vp) = (Vec::new(), Vec::new(), Vec::new());
    for (i, s) in states.iter().enumerate() {
        let yi = if i == 0 { 1.0 } else { (s.fp / b).powi(2) };
        if let Some(&prev) = y.last() {
            if !(yi < prev) || !(s.fpp < 0.0) {
                return Err(AnalysisError::NonMonotoneY { t: s.t });
            }
        }
        y.push(yi);
        v.push(s.f / sb);
        vp.push(b32 / (2.0 * s.fpp));
    }
    VProfile::new(b, y, v, vp)
}

/// Residual of `v'' = v v'^2 / sqrt(y) + 2 beta sqrt(y) v'^3` with `v''`
/// from three-point differences of `v'` on the sample grid. Pointwise the
/// residual is divided by `max(1, |v''|, |T1|, |T2|)`; the maximum over
/// interior samples with `y` in `[1e-4, 1]` is returned.
pub fn v_ode_residual(profile: &VProfile, beta: f64) -> Result<f64, AnalysisError> {
    let n = profile.len();
    if n < MIN_SAMPLES {
        return Err(AnalysisError::TooFewSamples {
            got: n,
            need: MIN_SAMPLES,
        });
    }
    let (y, v, vp) = (&profile.y, &profile.v, &profile.vp);
    let mut worst: f64 = 0.0;
    for i in 1..n - 1 {
        if y[i] < Y_MIN {
            break;
        }
        let h0 = y[i] - y[i - 1];
        let h1 = y[i + 1] - y[i];
        let vpp = -h1 / (h0 * (h0 + h1)) * vp[i - 1]
            + (h1 - h0) / (h0 * h1) * vp[i]
            + h0 / (h1 * (h0 + h1)) * vp[i + 1];
        let sy = y[i].sqrt();
        let t1 = v[i] * vp[i] * vp[i] / sy;
        let t2 = 2.0 * beta * sy * vp[i].powi(3);
        let scale = 1f64.max(vpp.abs()).max(t1.abs()).max(t2.abs());
        worst = worst.max((vpp - t1 - t2).abs() / scale);
    }
    Ok(worst)
}
