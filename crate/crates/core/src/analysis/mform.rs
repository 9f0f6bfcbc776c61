use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::integrator::{rhs, IntegrateError, Trajectory};

const CHECK_POINTS: usize = 64;

/// `beta = -(2m + 1) / (m + 2)`, defined for `m` in `(-1, -1/2)`, where it
/// maps onto `(0, 1)`.
pub fn map_m_to_beta(m: f64) -> Result<f64, AnalysisError> {
    if !(m > -1.0 && m < -0.5) {
        return Err(AnalysisError::MOutOfRange { m });
    }
    Ok(-(2.0 * m + 1.0) / (m + 2.0))
}

/// Data of the quadratic problem equivalent to
/// `f''' + (m+2) f f'' - (2m+1) f'^2 = 0`, `f(0) = a`, `f''(0) = -1`.
///
/// With `k = sqrt(m + 2)`, `f(s) = F(k s) / k` where `F` solves the
/// `beta x^2` problem with `F(0) = k a`, `F''(0) = -1 / k` and the same
/// initial slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MFormData {
    pub m: f64,
    pub beta: f64,
    pub k: f64,
    pub a_beta: f64,
    pub c_beta: f64,
}

pub fn m_form_data(m: f64, a: f64) -> Result<MFormData, AnalysisError> {
    let beta = map_m_to_beta(m)?;
    let k = (m + 2.0).sqrt();
    Ok(MFormData {
        m,
        beta,
        k,
        a_beta: k * a,
        c_beta: -1.0 / k,
    })
}

fn scaled(terms: [f64; 3]) -> f64 {
    let sum: f64 = terms.iter().sum();
    let scale = terms.iter().fold(1f64, |acc, t| acc.max(t.abs()));
    sum.abs() / scale
}

fn grid(t_end: f64) -> impl Iterator<Item = f64> {
    (0..CHECK_POINTS).map(move |i| {
        if i + 1 == CHECK_POINTS {
            t_end
        } else {
            t_end * i as f64 / (CHECK_POINTS - 1) as f64
        }
    })
}

/// Residual of the `m`-equation for `f(s) = F(k s) / k`, where `F` is the
/// given quadratic-problem trajectory, with `F`, `F'`, `F''` read from the
/// dense output and `F'''` from the right-hand side there. Pointwise the
/// residual is divided by `max(1, |each term|)`; the maximum over 64
/// equally spaced points is returned.
pub fn m_form_residual(traj_beta: &Trajectory, m: f64) -> Result<f64, AnalysisError> {
    map_m_to_beta(m)?;
    let k = (m + 2.0).sqrt();
    let g = &traj_beta.problem().g;
    let mut worst: f64 = 0.0;
    for t in grid(traj_beta.final_time()) {
        let s = traj_beta.sample(t)?;
        let d = rhs(&s, g);
        let (f, fp, fpp, fppp) = (s.f / k, s.fp, k * s.fpp, k * k * d.dfpp);
        worst = worst.max(scaled([
            fppp,
            (m + 2.0) * f * fpp,
            -(2.0 * m + 1.0) * fp * fp,
        ]));
    }
    Ok(worst)
}

/// The same measurement against the trajectory's own equation
/// `F''' + F F'' + g(F') = 0`.
pub fn beta_form_residual(traj: &Trajectory) -> Result<f64, IntegrateError> {
    let g = &traj.problem().g;
    let mut worst: f64 = 0.0;
    for t in grid(traj.final_time()) {
        let s = traj.sample(t)?;
        let d = rhs(&s, g);
        worst = worst.max(scaled([d.dfpp, s.f * s.fpp, g.eval(s.fp)]));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_values() {
        assert_eq!(map_m_to_beta(-0.75).unwrap(), 0.4);
        assert!((map_m_to_beta(-0.9).unwrap() - 0.727273).abs() < 1e-6);
        assert!(matches!(
            map_m_to_beta(-0.5),
            Err(AnalysisError::MOutOfRange { .. })
        ));
        assert!(map_m_to_beta(-1.0).is_err());
        assert!(map_m_to_beta(f64::NAN).is_err());
    }

    #[test]
    fn scaled_data() {
        let d = m_form_data(-0.75, 2.0).unwrap();
        let k = 1.25f64.sqrt();
        assert_eq!(d.k, k);
        assert_eq!(d.a_beta, 2.0 * k);
        assert_eq!(d.c_beta, -1.0 / k);
    }

    #[test]
    fn residual_separates_matching_and_mismatched_m() {
        use crate::integrator::integrate;
        use crate::model::{GSpec, ProblemSpec};
        let d = m_form_data(-0.75, 0.0).unwrap();
        let p = ProblemSpec::new(d.a_beta, d.c_beta, GSpec::quadratic(d.beta)).unwrap();
        let traj = integrate(&p, 1.0).unwrap();
        assert!(beta_form_residual(&traj).unwrap() <= 1e-9);
        assert!(m_form_residual(&traj, -0.75).unwrap() <= 1e-7);
        assert!(m_form_residual(&traj, -0.9).unwrap() > 1e-3);
    }
}
