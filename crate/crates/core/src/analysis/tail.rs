use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::integrator::Trajectory;
use crate::model::ShootState;

/// Upper end of the exponential-tail window in `f'`. Above it the
/// correction in the tail law is still visible.
pub const TAIL_FP_HIGH: f64 = 1e-3;
/// Lower end. Below it the distance to the critical slope dominates.
pub const TAIL_FP_LOW: f64 = 1e-6;

const RESAMPLE: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Plateau of `f` (exponential tails only).
    pub mu_hat: Option<f64>,
    /// Amplitude: `A` in `mu - A e^{-mu t}` or in `A t^p`.
    pub a_hat: f64,
    /// Decay rate `-f''/f'`, or the log-log slope for power tails.
    pub rate_hat: f64,
    pub window: (f64, f64),
    /// RMS residual of the log-linear least-squares fit.
    pub residual_norm: f64,
    /// Exponent the power tail should have, `1 / (1 + beta)`.
    pub target_rate: Option<f64>,
}

/// Least-squares line `y = intercept + slope x`; returns
/// `(intercept, slope, rms residual)`.
fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    (intercept, slope, (ss / n).sqrt())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Exponential-tail fit on samples already restricted to the tail window,
/// in increasing `t`. The plateau is read from the last sample via
/// `mu ~ f + f'^2 / (-f'')`.
pub fn fit_exponential_tail_samples(samples: &[ShootState]) -> Result<TailFit, AnalysisError> {
    if samples.len() < 3 {
        return Err(AnalysisError::WindowEmpty {
            reason: format!("{} samples in the window", samples.len()),
        });
    }
    if let Some(s) = samples.iter().find(|s| !(s.fp > 0.0 && s.fpp < 0.0)) {
        return Err(AnalysisError::WindowEmpty {
            reason: format!(
                "f' = {}, f'' = {} at t = {} is not a decaying tail",
                s.fp, s.fpp, s.t
            ),
        });
    }
    let last = samples[samples.len() - 1];
    let mu = last.f + last.fp * last.fp / -last.fpp;
    let rate = median(samples.iter().map(|s| -s.fpp / s.fp).collect());

    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    for s in samples {
        let gap = mu - s.f;
        if gap > 0.0 {
            xs.push(-mu * s.t);
            ys.push(gap.ln());
        }
    }
    if xs.len() < 3 {
        return Err(AnalysisError::WindowEmpty {
            reason: "f is not below its plateau estimate".into(),
        });
    }
    let (intercept, _, rms) = line_fit(&xs, &ys);
    Ok(TailFit {
        mu_hat: Some(mu),
        a_hat: intercept.exp(),
        rate_hat: rate,
        window: (samples[0].t, last.t),
        residual_norm: rms,
        target_rate: None,
    })
}

/// Exponential-tail fit over the stretch where `f'` falls from
/// [`TAIL_FP_HIGH`] to [`TAIL_FP_LOW`].
pub fn fit_exponential_tail(traj: &Trajectory) -> Result<TailFit, AnalysisError> {
    let tol = traj.problem().controls.event_tol;
    let t0 = traj.first_time_fp_below(TAIL_FP_HIGH, tol);
    let t1 = traj.first_time_fp_below(TAIL_FP_LOW, tol);
    let (Some(t0), Some(t1)) = (t0, t1) else {
        return Err(AnalysisError::WindowEmpty {
            reason: format!(
                "f' never fell below {:e} before t = {}",
                if t0.is_none() {
                    TAIL_FP_HIGH
                } else {
                    TAIL_FP_LOW
                },
                traj.final_time()
            ),
        });
    };
    if !(t1 > t0) {
        return Err(AnalysisError::WindowEmpty {
            reason: format!("window [{t0}, {t1}] is degenerate"),
        });
    }
    let samples = (0..RESAMPLE)
        .map(|i| traj.sample(t0 + (t1 - t0) * i as f64 / (RESAMPLE - 1) as f64))
        .collect::<Result<Vec<_>, _>>()?;
    fit_exponential_tail_samples(&samples)
}

/// Slope and amplitude of `log f` against `log t`.
pub fn fit_power_law(ts: &[f64], fs: &[f64]) -> Result<TailFit, AnalysisError> {
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(fs)
        .filter(|(t, f)| **t > 0.0 && **f > 0.0)
        .map(|(t, f)| (t.ln(), f.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(AnalysisError::WindowEmpty {
            reason: "fewer than three points with t > 0 and f > 0".into(),
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (intercept, slope, rms) = line_fit(&xs, &ys);
    Ok(TailFit {
        mu_hat: None,
        a_hat: intercept.exp(),
        rate_hat: slope,
        window: (ts[0], ts[ts.len() - 1]),
        residual_norm: rms,
        target_rate: None,
    })
}

/// Power-law fit of `f` over the last decade of time, compared against
/// `1 / (1 + beta)`.
pub fn fit_power_tail(traj: &Trajectory, beta: f64) -> Result<TailFit, AnalysisError> {
    let t_end = traj.final_time();
    let t_start = t_end / 10.0;
    if !(t_start > 0.0) {
        return Err(AnalysisError::WindowEmpty {
            reason: format!("trajectory ends at t = {t_end}"),
        });
    }
    let ratio = (t_end / t_start).ln();
    let ts: Vec<f64> = (0..RESAMPLE)
        .map(|i| {
            if i + 1 == RESAMPLE {
                t_end
            } else {
                t_start * (ratio * i as f64 / (RESAMPLE - 1) as f64).exp()
            }
        })
        .collect();
    let fs = ts
        .iter()
        .map(|&t| traj.sample(t).map(|s| s.f))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(i) = fs.iter().position(|&f| !(f > 0.0)) {
        return Err(AnalysisError::WindowEmpty {
            reason: format!("f = {} <= 0 at t = {} in the last decade", fs[i], ts[i]),
        });
    }
    let mut fit = fit_power_law(&ts, &fs)?;
    fit.target_rate = Some(1.0 / (1.0 + beta));
    Ok(fit)
}
