//! Independent reference computations used to check the adaptive solver.
//!
//! Nothing here shares code with [`crate::integrator`] or
//! [`crate::shooting`]: the nonlinearity is passed as a plain closure,
//! integration is classical fixed-step RK4, and the critical slope is found by
//! a uniform grid scan followed by bisection.

/// `(f, f', f'')`.
pub type State = [f64; 3];

#[inline]
fn field(g: &impl Fn(f64) -> f64, y: &State) -> State {
    [y[1], y[2], -y[0] * y[2] - g(y[1])]
}

#[inline]
fn rk4_step(g: &impl Fn(f64) -> f64, y: &State, h: f64) -> State {
    let k1 = field(g, y);
    let y2 = [
        y[0] + 0.5 * h * k1[0],
        y[1] + 0.5 * h * k1[1],
        y[2] + 0.5 * h * k1[2],
    ];
    let k2 = field(g, &y2);
    let y3 = [
        y[0] + 0.5 * h * k2[0],
        y[1] + 0.5 * h * k2[1],
        y[2] + 0.5 * h * k2[2],
    ];
    let k3 = field(g, &y3);
    let y4 = [y[0] + h * k3[0], y[1] + h * k3[1], y[2] + h * k3[2]];
    let k4 = field(g, &y4);
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Fixed-step RK4 from `t = 0` to `t_end`; the last step is shortened to land
/// on `t_end` exactly.
pub fn rk4_to(g: impl Fn(f64) -> f64, y0: State, h: f64, t_end: f64) -> State {
    let n = (t_end / h).floor() as usize;
    let mut y = y0;
    for _ in 0..n {
        y = rk4_step(&g, &y, h);
    }
    let rest = t_end - n as f64 * h;
    if rest > 0.0 {
        y = rk4_step(&g, &y, rest);
    }
    y
}

/// States at each requested time (ascending), by fixed-step RK4.
pub fn rk4_at(g: impl Fn(f64) -> f64, y0: State, h: f64, times: &[f64]) -> Vec<State> {
    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut y = y0;
    for &target in times {
        while target - t > h {
            y = rk4_step(&g, &y, h);
            t += h;
        }
        let rest = target - t;
        let y_at = if rest > 0.0 {
            rk4_step(&g, &y, rest)
        } else {
            y
        };
        out.push(y_at);
    }
    out
}

/// Type I verdict by fixed-step RK4: `f'` stays positive up to `t_end`
/// without blowing up.
pub fn is_type_i(g: impl Fn(f64) -> f64, a: f64, b: f64, c: f64, h: f64, t_end: f64) -> bool {
    if b <= 0.0 {
        return false;
    }
    let mut y = [a, b, c];
    let n = (t_end / h).ceil() as usize;
    for _ in 0..n {
        y = rk4_step(&g, &y, h);
        if !(y[1] > 0.0) || !y[2].is_finite() {
            return false;
        }
    }
    true
}

/// Settings for [`critical_slope`].
#[derive(Debug, Clone, Copy)]
pub struct CriticalSlopeOracle {
    /// Number of grid points in the initial scan.
    pub grid_points: usize,
    /// RK4 step for the grid scan.
    pub grid_step: f64,
    /// RK4 step for the bisection.
    pub fine_step: f64,
    /// Horizon used for every verdict.
    pub horizon: f64,
    /// Final bracket width.
    pub tol: f64,
}

impl Default for CriticalSlopeOracle {
    fn default() -> Self {
        Self {
            grid_points: 10_000,
            grid_step: 1e-2,
            fine_step: 1e-3,
            horizon: 60.0,
            tol: 1e-10,
        }
    }
}

/// Result of the reference critical-slope search.
#[derive(Debug, Clone, Copy)]
pub struct CriticalSlope {
    pub lo: f64,
    pub hi: f64,
    /// Whether the grid scan was monotone (no Type II above a Type I).
    pub grid_monotone: bool,
}

/// Scan `b` on a uniform grid over `[0, b_max]`, locate the Type II / Type I
/// flip, confirm the cell with the fine step and bisect it.
pub fn critical_slope(
    g: impl Fn(f64) -> f64 + Sync,
    a: f64,
    c: f64,
    b_max: f64,
    settings: CriticalSlopeOracle,
) -> Option<CriticalSlope> {
    let n = settings.grid_points.max(2);
    let db = b_max / (n - 1) as f64;
    let verdicts: Vec<bool> = {
        use rayon::prelude::*;
        (0..n)
            .into_par_iter()
            .map(|i| {
                is_type_i(
                    &g,
                    a,
                    i as f64 * db,
                    c,
                    settings.grid_step,
                    settings.horizon,
                )
            })
            .collect()
    };
    let first_i = verdicts.iter().position(|&v| v)?;
    let grid_monotone = verdicts[first_i..].iter().all(|&v| v);
    let fine = |b: f64| is_type_i(&g, a, b, c, settings.fine_step, settings.horizon);

    let mut lo = first_i.saturating_sub(1) as f64 * db;
    let mut hi = first_i as f64 * db;
    // The coarse step may misplace the flip by a cell; widen until the fine
    // verdicts agree with the bracket.
    while fine(lo) {
        hi = lo;
        lo = (lo - db).max(0.0);
        if lo == 0.0 {
            break;
        }
    }
    while !fine(hi) {
        lo = hi;
        hi += db;
    }
    while hi - lo > settings.tol {
        let mid = lo + 0.5 * (hi - lo);
        if fine(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(CriticalSlope {
        lo,
        hi,
        grid_monotone,
    })
}

/// Composite Simpson rule with `panels` (rounded up to even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(2) + panels % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}
