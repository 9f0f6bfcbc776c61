//! Adaptive Dormand–Prince 5(4) integration of the shooting system
//!
//! ```text
//! f' = fp,   fp' = fpp,   fpp' = -f * fpp - g(fp)
//! ```
//!
//! with a fourth-order continuous extension on every accepted step. The
//! integrator stops at the first of three events: the horizon `t_max`, the
//! first downcrossing of `f'` through zero (localized by bisection on the
//! interpolant), or blow-up of `|f'| + |f''|`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GSpec, ModelError, ProblemSpec, ShootState};

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow {
        t: f64,
        h: f64,
        /// Everything accepted before the underflow.
        trajectory: Box<Trajectory>,
    },
    #[error("t = {t} outside trajectory range [0, {t_end}]")]
    OutOfRange { t: f64, t_end: f64 },
}

/// Right-hand side of the first-order system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub df: f64,
    pub dfp: f64,
    /// `f'''`.
    pub dfpp: f64,
}

#[inline]
pub fn rhs(state: &ShootState, g: &GSpec) -> Derivative {
    Derivative {
        df: state.fp,
        dfp: state.fpp,
        dfpp: -state.f * state.fpp - g.eval(state.fp),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    ReachedTmax,
    /// `f'` crossed zero from above at `t0`.
    ZeroCrossing {
        t0: f64,
    },
    /// `|f'| + |f''|` exceeded the blow-up threshold; `t_est` is the last
    /// accepted time, a lower estimate of the end of the maximal interval.
    BlowUp {
        t_est: f64,
    },
}

/// What to do when `f'` crosses zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossingPolicy {
    /// Terminate with [`Termination::ZeroCrossing`].
    #[default]
    Stop,
    /// Record the crossing time and keep going until blow-up or `t_max`.
    Record,
}

type Vec3 = [f64; 3];

/// Continuous extension over one accepted step, in Hairer's form
/// `y(t0 + θh) = r1 + θ(r2 + (1-θ)(r3 + θ(r4 + (1-θ) r5)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSegment {
    t_start: f64,
    t_end: f64,
    h: f64,
    r: [Vec3; 5],
}

impl DenseSegment {
    #[inline]
    fn theta(&self, t: f64) -> f64 {
        (t - self.t_start) / self.h
    }

    #[inline]
    fn eval(&self, t: f64) -> Vec3 {
        let th = self.theta(t);
        let th1 = 1.0 - th;
        let r = &self.r;
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        out
    }

    /// Time derivative of the interpolant.
    #[inline]
    fn eval_derivative(&self, t: f64) -> Vec3 {
        let th = self.theta(t);
        let th1 = 1.0 - th;
        let r = &self.r;
        let mut out = [0.0; 3];
        for i in 0..3 {
            let rr = r[3][i] + th1 * r[4][i];
            let drr = -r[4][i];
            let q = r[2][i] + th * rr;
            let dq = rr + th * drr;
            let p = r[1][i] + th1 * q;
            let dp = -q + th1 * dq;
            out[i] = (p + th * dp) / self.h;
        }
        out
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Dense record of one shooting run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    problem: ProblemSpec,
    b: f64,
    nodes: Vec<ShootState>,
    segments: Vec<DenseSegment>,
    termination: Termination,
    first_crossing: Option<f64>,
    stats: Stats,
}

impl Trajectory {
    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    /// Shooting slope `f'(0)`.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Accepted step endpoints, strictly increasing in `t`, starting with
    /// `(0, a, b, c)`.
    pub fn nodes(&self) -> &[ShootState] {
        &self.nodes
    }

    pub fn segments(&self) -> &[DenseSegment] {
        &self.segments
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    /// First downcrossing of `f'` through zero, if one was seen.
    pub fn first_crossing(&self) -> Option<f64> {
        self.first_crossing
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    pub fn final_state(&self) -> ShootState {
        *self.nodes.last().expect("trajectory has an initial node")
    }

    pub fn final_time(&self) -> f64 {
        self.final_state().t
    }

    fn segment_index(&self, t: f64) -> Result<usize, IntegrateError> {
        let t_end = self.final_time();
        if !(t >= 0.0 && t <= t_end) {
            return Err(IntegrateError::OutOfRange { t, t_end });
        }
        // First segment whose end is >= t.
        let idx = self.segments.partition_point(|s| s.t_end < t);
        Ok(idx.min(self.segments.len().saturating_sub(1)))
    }

    /// State at `t` from the dense output. Node times return the stored node.
    pub fn sample(&self, t: f64) -> Result<ShootState, IntegrateError> {
        let idx = self.segment_index(t)?;
        if self.segments.is_empty() {
            return Ok(self.nodes[0]);
        }
        if t == self.nodes[idx].t {
            return Ok(self.nodes[idx]);
        }
        if t == self.nodes[idx + 1].t {
            return Ok(self.nodes[idx + 1]);
        }
        let [f, fp, fpp] = self.segments[idx].eval(t);
        Ok(ShootState { t, f, fp, fpp })
    }

    /// Time derivative of the dense output at `t`: `(f', f'', f''')` as seen
    /// by the interpolant rather than by the right-hand side.
    pub fn sample_derivative(&self, t: f64) -> Result<Derivative, IntegrateError> {
        let idx = self.segment_index(t)?;
        if self.segments.is_empty() {
            return Ok(rhs(&self.nodes[0], &self.problem.g));
        }
        let [df, dfp, dfpp] = self.segments[idx].eval_derivative(t);
        Ok(Derivative { df, dfp, dfpp })
    }

    /// Nodes plus `per_segment - 1` interior dense points per accepted step.
    pub fn refined(&self, per_segment: usize) -> Vec<ShootState> {
        let per_segment = per_segment.max(1);
        let mut out = Vec::with_capacity(self.segments.len() * per_segment + 1);
        out.push(self.nodes[0]);
        for (k, seg) in self.segments.iter().enumerate() {
            for j in 1..per_segment {
                let t = seg.t_start + (seg.t_end - seg.t_start) * j as f64 / per_segment as f64;
                let [f, fp, fpp] = seg.eval(t);
                out.push(ShootState { t, f, fp, fpp });
            }
            out.push(self.nodes[k + 1]);
        }
        out
    }

    /// First time in `[0, final_time]` at which `f'` falls to `level` or
    /// below, localized on the dense output to width `tol`.
    pub fn first_time_fp_below(&self, level: f64, tol: f64) -> Option<f64> {
        let first = self.nodes.first()?;
        if first.fp <= level {
            return Some(first.t);
        }
        let k = self.nodes.windows(2).position(|w| w[1].fp <= level)?;
        let seg = &self.segments[k];
        Some(bisect_on(
            seg,
            self.nodes[k].t,
            self.nodes[k + 1].t,
            |y| y[1] - level,
            tol,
        ))
    }

    /// Build a trajectory from externally supplied states, with cubic
    /// Hermite continuous extension for `f` and `f'` and linear for `f''`.
    /// Meant for fitting code that needs synthetic inputs.
    pub fn from_states(
        problem: ProblemSpec,
        states: Vec<ShootState>,
        termination: Termination,
    ) -> Result<Self, IntegrateError> {
        problem.validate()?;
        assert!(!states.is_empty(), "at least one state required");
        assert!(
            states.windows(2).all(|w| w[1].t > w[0].t),
            "states must be strictly increasing in t"
        );
        let segments = states
            .windows(2)
            .map(|w| hermite_segment(&w[0], &w[1]))
            .collect();
        let b = states[0].fp;
        Ok(Self {
            problem,
            b,
            nodes: states,
            segments,
            termination,
            first_crossing: None,
            stats: Stats::default(),
        })
    }
}

fn hermite_segment(s0: &ShootState, s1: &ShootState) -> DenseSegment {
    // Hermite data in Hairer's form: r1 = y0, r2 = y1 - y0,
    // r3 = h y0' - r2, r4 = r2 - h y1' - r3, r5 = 0 gives the cubic Hermite
    // interpolant.
    let h = s1.t - s0.t;
    let y0 = [s0.f, s0.fp, s0.fpp];
    let y1 = [s1.f, s1.fp, s1.fpp];
    let d0 = [s0.fp, s0.fpp, (s1.fpp - s0.fpp) / h];
    let d1 = [s1.fp, s1.fpp, (s1.fpp - s0.fpp) / h];
    let mut r = [[0.0; 3]; 5];
    for i in 0..3 {
        r[0][i] = y0[i];
        r[1][i] = y1[i] - y0[i];
        r[2][i] = h * d0[i] - r[1][i];
        r[3][i] = r[1][i] - h * d1[i] - r[2][i];
    }
    DenseSegment {
        t_start: s0.t,
        t_end: s1.t,
        h,
        r,
    }
}

fn bisect_on(
    seg: &DenseSegment,
    mut lo: f64,
    mut hi: f64,
    value: impl Fn(&Vec3) -> f64,
    tol: f64,
) -> f64 {
    // Invariant: value(lo) > 0 >= value(hi).
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if value(&seg.eval(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const MAX_STEPS: usize = 5_000_000;

/// Integrate from `(a, b, c)`, stopping at the first downcrossing of `f'`.
pub fn integrate(problem: &ProblemSpec, b: f64) -> Result<Trajectory, IntegrateError> {
    integrate_with(problem, b, CrossingPolicy::Stop)
}

/// Integrate past any `f'` crossing until blow-up or `t_max`.
pub fn integrate_through(problem: &ProblemSpec, b: f64) -> Result<Trajectory, IntegrateError> {
    integrate_with(problem, b, CrossingPolicy::Record)
}

/// Natural scale of `f'` for the initial data. Under `f -> λ f(λ t)` the
/// data scale as `a ~ λ`, `b ~ λ²`, `c ~ λ³`; `f''` scales as the 3/2 power.
fn derivative_scale(a: f64, b: f64, c: f64) -> f64 {
    1f64.max(a * a).max(b.abs()).max(c.abs().powf(2.0 / 3.0))
}

struct Stepper<'a> {
    g: &'a GSpec,
    atol: f64,
    rtol: f64,
    evals: usize,
}

impl Stepper<'_> {
    #[inline]
    fn f(&mut self, y: &Vec3) -> Vec3 {
        self.evals += 1;
        [y[1], y[2], -y[0] * y[2] - self.g.eval(y[1])]
    }

    fn norm(&self, v: &Vec3, y0: &Vec3, y1: &Vec3) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            let sk = self.atol + self.rtol * y0[i].abs().max(y1[i].abs());
            acc += (v[i] / sk).powi(2);
        }
        (acc / 3.0).sqrt()
    }

    /// Hairer's starting step heuristic for a method of order 5.
    fn initial_step(&mut self, y0: &Vec3, f0: &Vec3, h_max: f64) -> f64 {
        let d0 = self.norm(y0, y0, y0);
        let d1 = self.norm(f0, y0, y0);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(h_max);
        let y1 = add_scaled(y0, h0, f0);
        let f1 = self.f(&y1);
        let diff = [f1[0] - f0[0], f1[1] - f0[1], f1[2] - f0[2]];
        let d2 = self.norm(&diff, y0, y0) / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dm).powf(1.0 / 5.0)
        };
        (100.0 * h0).min(h1).min(h_max)
    }
}

#[inline]
fn add_scaled(y: &Vec3, h: f64, k: &Vec3) -> Vec3 {
    [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]]
}

fn finite3(v: &Vec3) -> bool {
    v.iter().all(|x| x.is_finite())
}

pub fn integrate_with(
    problem: &ProblemSpec,
    b: f64,
    policy: CrossingPolicy,
) -> Result<Trajectory, IntegrateError> {
    problem.validate()?;
    if !b.is_finite() {
        return Err(ModelError::NonFinite {
            name: "b",
            value: b,
        }
        .into());
    }
    let ctl = &problem.controls;
    let t_max = ctl.t_max;
    let scale2 = derivative_scale(problem.a, b, problem.c);
    let scale3 = scale2.powf(1.5);
    let blown_up = |y: &Vec3| y[1].abs() / scale2 + y[2].abs() / scale3 > ctl.blowup_threshold;

    let mut st = Stepper {
        g: &problem.g,
        atol: ctl.abs_tol,
        rtol: ctl.rel_tol,
        evals: 0,
    };
    let mut traj = Trajectory {
        problem: problem.clone(),
        b,
        nodes: vec![ShootState::new(0.0, problem.a, b, problem.c)],
        segments: Vec::new(),
        termination: Termination::ReachedTmax,
        first_crossing: None,
        stats: Stats::default(),
    };

    let mut t = 0.0_f64;
    let mut y: Vec3 = [problem.a, b, problem.c];
    if blown_up(&y) {
        traj.termination = Termination::BlowUp { t_est: 0.0 };
        return Ok(traj);
    }
    // A downcrossing needs f' > 0 to start from.
    let mut watching = b > 0.0;
    let mut k1 = st.f(&y);
    let mut h = st.initial_step(&y, &k1, t_max);
    let mut last_rejected = false;

    loop {
        if t >= t_max {
            traj.termination = Termination::ReachedTmax;
            break;
        }
        if traj.stats.accepted + traj.stats.rejected >= MAX_STEPS {
            traj.stats.rhs_evals = st.evals;
            return Err(IntegrateError::StepUnderflow {
                t,
                h,
                trajectory: Box::new(traj),
            });
        }
        let mut last = false;
        if t + h >= t_max || t + 1.01 * h >= t_max {
            h = t_max - t;
            last = true;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(f64::MIN_POSITIVE) {
            traj.stats.rhs_evals = st.evals;
            return Err(IntegrateError::StepUnderflow {
                t,
                h,
                trajectory: Box::new(traj),
            });
        }

        let k2 = st.f(&add_scaled(&y, h * A21, &k1));
        let y3 = [
            y[0] + h * (A31 * k1[0] + A32 * k2[0]),
            y[1] + h * (A31 * k1[1] + A32 * k2[1]),
            y[2] + h * (A31 * k1[2] + A32 * k2[2]),
        ];
        let k3 = st.f(&y3);
        let mut y4 = [0.0; 3];
        for i in 0..3 {
            y4[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = st.f(&y4);
        let mut y5 = [0.0; 3];
        for i in 0..3 {
            y5[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = st.f(&y5);
        let mut y6 = [0.0; 3];
        for i in 0..3 {
            y6[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let k6 = st.f(&y6);
        let mut y_new = [0.0; 3];
        for i in 0..3 {
            y_new[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        let k7 = st.f(&y_new);
        let mut err_vec = [0.0; 3];
        for i in 0..3 {
            err_vec[i] =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err = if finite3(&y_new) && finite3(&k7) {
            st.norm(&err_vec, &y, &y_new)
        } else {
            f64::INFINITY
        };

        if !(err <= 1.0) {
            traj.stats.rejected += 1;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0)
            } else {
                FAC_MIN
            };
            h *= fac;
            last_rejected = true;
            continue;
        }

        // Accepted.
        traj.stats.accepted += 1;
        let t_new = if last { t_max } else { t + h };
        let mut r = [[0.0; 3]; 5];
        for i in 0..3 {
            let ydiff = y_new[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            r[0][i] = y[i];
            r[1][i] = ydiff;
            r[2][i] = bspl;
            r[3][i] = ydiff - h * k7[i] - bspl;
            r[4][i] =
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        let seg = DenseSegment {
            t_start: t,
            t_end: t_new,
            h,
            r,
        };

        if watching && y_new[1] <= 0.0 {
            let t0 = bisect_on(&seg, t, t_new, |v| v[1], ctl.event_tol);
            if traj.first_crossing.is_none() {
                traj.first_crossing = Some(t0);
            }
            watching = false;
            if policy == CrossingPolicy::Stop {
                let [f, fp, fpp] = seg.eval(t0);
                let seg = DenseSegment { t_end: t0, ..seg };
                traj.segments.push(seg);
                traj.nodes.push(ShootState::new(t0, f, fp, fpp));
                traj.termination = Termination::ZeroCrossing { t0 };
                break;
            }
        }

        traj.segments.push(seg);
        traj.nodes
            .push(ShootState::new(t_new, y_new[0], y_new[1], y_new[2]));
        t = t_new;
        y = y_new;
        k1 = k7;

        if blown_up(&y) {
            traj.termination = Termination::BlowUp { t_est: t };
            break;
        }

        let mut fac = if err == 0.0 {
            FAC_MAX
        } else {
            (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
        };
        if last_rejected {
            fac = fac.min(1.0);
        }
        last_rejected = false;
        h *= fac;
    }

    traj.stats.rhs_evals = st.evals;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SolverControls;

    fn oracle_problem(t_max: f64) -> ProblemSpec {
        ProblemSpec::with_controls(
            1.0,
            -0.25,
            GSpec::oracle_cubic(),
            SolverControls::default().with_t_max(t_max),
        )
        .unwrap()
    }

    #[test]
    fn rhs_examples() {
        let d = rhs(
            &ShootState::new(0.0, 2.0, 1.0, -1.0),
            &GSpec::quadratic(0.5),
        );
        assert_eq!((d.df, d.dfp, d.dfpp), (1.0, -1.0, 1.5));
        let d = rhs(&ShootState::new(0.0, 0.0, 0.0, 0.0), &GSpec::oracle_cubic());
        assert_eq!((d.df, d.dfp, d.dfpp), (0.0, 0.0, 0.0));
        let d = rhs(
            &ShootState::new(0.0, 1.0, -0.5, -0.25),
            &GSpec::oracle_cubic(),
        );
        assert_eq!((d.df, d.dfp, d.dfpp), (-0.5, -0.25, -0.375));
    }

    #[test]
    fn initial_node_is_exact() {
        let p = ProblemSpec::new(0.3, -0.7, GSpec::quadratic(0.5)).unwrap();
        let traj = integrate(&p, 1.25).unwrap();
        assert_eq!(
            traj.sample(0.0).unwrap(),
            ShootState::new(0.0, 0.3, 1.25, -0.7)
        );
    }

    #[test]
    fn oracle_solution_matches_sqrt() {
        let traj = integrate(&oracle_problem(0.9), -0.5).unwrap();
        assert_eq!(traj.termination(), Termination::ReachedTmax);
        let s = traj.sample(0.75).unwrap();
        assert!((s.f - 0.5).abs() < 1e-7, "{s:?}");
        assert!((s.fp + 1.0).abs() < 1e-7, "{s:?}");
        assert!((s.fpp + 2.0).abs() < 1e-7, "{s:?}");
        let s = traj.sample(0.36).unwrap();
        assert!((s.f - 0.8).abs() < 1e-7);
    }

    #[test]
    fn sample_at_node_is_that_node() {
        let traj = integrate(&oracle_problem(0.9), -0.5).unwrap();
        for node in traj.nodes() {
            assert_eq!(traj.sample(node.t).unwrap(), *node);
        }
    }

    #[test]
    fn sample_beyond_end_is_out_of_range() {
        let traj = integrate(&oracle_problem(0.5), -0.5).unwrap();
        assert!(matches!(
            traj.sample(0.6),
            Err(IntegrateError::OutOfRange { .. })
        ));
        assert!(traj.sample(-1e-3).is_err());
    }

    #[test]
    fn oracle_runs_into_blowup_before_one() {
        let traj = integrate(&oracle_problem(2.0), -0.5);
        let traj = traj.unwrap();
        match traj.termination() {
            Termination::BlowUp { t_est } => assert!(t_est < 1.0 && t_est > 0.99, "{t_est}"),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn zero_crossing_is_localized() {
        let p = ProblemSpec::new(0.0, -1.0, GSpec::quadratic(0.5)).unwrap();
        let traj = integrate(&p, 1.0).unwrap();
        let Termination::ZeroCrossing { t0 } = traj.termination() else {
            panic!("expected crossing, got {:?}", traj.termination());
        };
        assert_eq!(traj.final_time(), t0);
        assert!(traj.final_state().fp.abs() <= 1e-10);
        let n = traj.nodes().len();
        assert!(traj.nodes()[..n - 1].iter().all(|s| s.fp > 0.0));
    }

    #[test]
    fn record_policy_keeps_going_to_blowup() {
        let p = ProblemSpec::new(0.0, -1.0, GSpec::quadratic(0.5)).unwrap();
        let traj = integrate_through(&p, 1.0).unwrap();
        assert!(traj.first_crossing().is_some());
        assert!(matches!(traj.termination(), Termination::BlowUp { .. }));
        assert!(traj.final_state().fp < 0.0);
    }

    #[test]
    fn nonpositive_b_does_not_trigger_crossing() {
        let p = ProblemSpec::new(0.0, -1.0, GSpec::quadratic(0.5)).unwrap();
        let traj = integrate(&p, 0.0).unwrap();
        assert!(matches!(traj.termination(), Termination::BlowUp { .. }));
        assert!(traj.first_crossing().is_none());
    }

    #[test]
    fn dense_derivative_matches_rhs_at_nodes() {
        let p = ProblemSpec::new(0.0, -1.0, GSpec::quadratic(0.5)).unwrap();
        let traj = integrate(&p, 3.0).unwrap();
        for node in &traj.nodes()[1..traj.nodes().len() - 1] {
            let d = traj.sample_derivative(node.t).unwrap();
            let exact = rhs(node, &p.g);
            assert!((d.dfpp - exact.dfpp).abs() < 1e-9 * (1.0 + exact.dfpp.abs()));
        }
    }

    #[test]
    fn hermite_trajectory_interpolates_nodes() {
        let p = ProblemSpec::new(0.0, -1.0, GSpec::quadratic(0.5)).unwrap();
        let states: Vec<_> = (0..20)
            .map(|i| {
                let t = i as f64 * 0.1;
                ShootState::new(t, t * t, 2.0 * t, 2.0)
            })
            .collect();
        let traj = Trajectory::from_states(p, states, Termination::ReachedTmax).unwrap();
        let s = traj.sample(0.55).unwrap();
        assert!((s.f - 0.3025).abs() < 1e-12);
        assert!((s.fp - 1.1).abs() < 1e-12);
    }
}
