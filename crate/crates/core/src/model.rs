//! Problem family, the catalogue of nonlinearities `g`, and solver controls.
//!
//! The shooting problem is
//!
//! ```text
//! f''' + f f'' + g(f') = 0,   f(0) = a,   f'(0) = b,   f''(0) = c < 0
//! ```
//!
//! where `b` is the free shooting slope. A [`ProblemSpec`] fixes `a`, `c`,
//! `g` and the numerical controls; `b` is supplied per integration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("curvature c must be strictly negative, got {0}")]
    NonNegativeCurvature(f64),
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("solver control `{name}` is invalid: {reason}")]
    InvalidControl { name: &'static str, reason: String },
    #[error("polynomial g must vanish at 0 (constant coefficient {0} != 0)")]
    PolynomialOffset(f64),
    #[error("delta margin must lie in (0, 1), got {0}")]
    DeltaOutOfRange(f64),
}

/// Shape of the nonlinearity `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GKind {
    /// `g(x) = beta * x^2`.
    Quadratic { beta: f64 },
    /// `g(x) = x^2 (1 - 12 x^3)`, for which `sqrt(1 - t)` is an exact solution
    /// with `a = 1`, `b = -1/2`, `c = -1/4`.
    OracleCubic,
    /// `g(x) = sum_k coeffs[k] * x^k`, ascending powers, `coeffs[0] == 0`.
    Polynomial { coeffs: Vec<f64> },
}

/// The nonlinearity `g` together with an optional subquadratic margin `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GSpec {
    kind: GKind,
    delta_margin: Option<f64>,
}

impl GSpec {
    pub fn quadratic(beta: f64) -> Self {
        Self {
            kind: GKind::Quadratic { beta },
            delta_margin: None,
        }
    }

    pub fn oracle_cubic() -> Self {
        Self {
            kind: GKind::OracleCubic,
            delta_margin: None,
        }
    }

    /// Polynomial in ascending powers. Rejects a nonzero constant term so that
    /// `g(0) = 0` holds for every variant.
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self, ModelError> {
        if let Some(&c0) = coeffs.first() {
            if c0 != 0.0 {
                return Err(ModelError::PolynomialOffset(c0));
            }
        }
        if let Some(&bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(ModelError::NonFinite {
                name: "g coefficient",
                value: bad,
            });
        }
        Ok(Self {
            kind: GKind::Polynomial { coeffs },
            delta_margin: None,
        })
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self, ModelError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(ModelError::DeltaOutOfRange(delta));
        }
        self.delta_margin = Some(delta);
        Ok(self)
    }

    pub fn kind(&self) -> &GKind {
        &self.kind
    }

    pub fn delta_margin(&self) -> Option<f64> {
        self.delta_margin
    }

    /// `beta` for the quadratic family, `None` otherwise.
    pub fn beta(&self) -> Option<f64> {
        match self.kind {
            GKind::Quadratic { beta } => Some(beta),
            _ => None,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            GKind::Quadratic { beta } => beta * x * x,
            GKind::OracleCubic => x * x * (1.0 - 12.0 * x * x * x),
            GKind::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c),
        }
    }

    /// Reports every grid point where `0 < g(x) <= x^2` fails, and where
    /// `g(x) <= (1 - delta) x^2` fails when a margin is set. `x = 0` is
    /// skipped because strict positivity is only required off the origin.
    pub fn check_subquadratic(&self, grid: &[f64]) -> SubquadraticReport {
        let mut violations = Vec::new();
        for &x in grid.iter().filter(|&&x| x != 0.0) {
            let g = self.eval(x);
            let x2 = x * x;
            if !(g > 0.0) {
                violations.push(Violation {
                    x,
                    g,
                    kind: ViolationKind::NotPositive,
                });
            }
            if g > x2 {
                violations.push(Violation {
                    x,
                    g,
                    kind: ViolationKind::AboveQuadratic,
                });
            }
            if let Some(delta) = self.delta_margin {
                if g > (1.0 - delta) * x2 {
                    violations.push(Violation {
                        x,
                        g,
                        kind: ViolationKind::AboveDeltaMargin,
                    });
                }
            }
        }
        SubquadraticReport {
            points_checked: grid.iter().filter(|&&x| x != 0.0).count(),
            violations,
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        match &self.kind {
            GKind::Quadratic { beta } if !beta.is_finite() => Err(ModelError::NonFinite {
                name: "beta",
                value: *beta,
            }),
            _ => Ok(()),
        }
    }
}

/// Free-function form of [`GSpec::eval`].
pub fn g_eval(g: &GSpec, x: f64) -> f64 {
    g.eval(x)
}

/// 512 logarithmically spaced magnitudes in `[1e-6, 1e3]`, each with both
/// signs.
pub fn default_subquadratic_grid() -> Vec<f64> {
    const N: usize = 512;
    let (lo, hi) = (1e-6_f64.ln(), 1e3_f64.ln());
    let mut grid = Vec::with_capacity(2 * N);
    for i in 0..N {
        let x = (lo + (hi - lo) * i as f64 / (N - 1) as f64).exp();
        grid.push(-x);
        grid.push(x);
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    NotPositive,
    AboveQuadratic,
    AboveDeltaMargin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: f64,
    pub g: f64,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubquadraticReport {
    pub points_checked: usize,
    pub violations: Vec<Violation>,
}

impl SubquadraticReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

/// Numerical controls shared by integration, classification and bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverControls {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Integration horizon.
    pub t_max: f64,
    /// Blow-up is declared once `|f'| + |f''|`, measured in the natural
    /// scale of the initial data, exceeds this value.
    pub blowup_threshold: f64,
    /// `f'` below this counts as decayed when judging boundedness.
    pub zero_eps: f64,
    /// Width in `t` to which `f' = 0` events are localized.
    pub event_tol: f64,
    /// Absolute width in `b` at which bisection stops.
    pub bisect_tol: f64,
    pub max_bisect_iters: usize,
}

impl Default for SolverControls {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            t_max: 200.0,
            blowup_threshold: 1e8,
            zero_eps: 1e-6,
            event_tol: 1e-12,
            bisect_tol: 1e-10,
            max_bisect_iters: 60,
        }
    }
}

impl SolverControls {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("t_max", self.t_max),
            ("zero_eps", self.zero_eps),
            ("event_tol", self.event_tol),
            ("bisect_tol", self.bisect_tol),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidControl {
                    name,
                    reason: format!("must be finite and > 0, got {value}"),
                });
            }
        }
        if !(self.blowup_threshold.is_finite() && self.blowup_threshold >= 1e6) {
            return Err(ModelError::InvalidControl {
                name: "blowup_threshold",
                reason: format!("must be finite and >= 1e6, got {}", self.blowup_threshold),
            });
        }
        Ok(())
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }
}

/// `(a, c, g)` plus controls. The shooting slope `b` is supplied per call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub a: f64,
    pub c: f64,
    pub g: GSpec,
    pub controls: SolverControls,
    /// Lets the shooting driver bisect on nonlinearities outside the
    /// quadratic family, where the monotone structure is unproven.
    pub allow_unproven_g: bool,
}

impl ProblemSpec {
    pub fn new(a: f64, c: f64, g: GSpec) -> Result<Self, ModelError> {
        Self::with_controls(a, c, g, SolverControls::default())
    }

    pub fn with_controls(
        a: f64,
        c: f64,
        g: GSpec,
        controls: SolverControls,
    ) -> Result<Self, ModelError> {
        let spec = Self {
            a,
            c,
            g,
            controls,
            allow_unproven_g: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.a.is_finite() {
            return Err(ModelError::NonFinite {
                name: "a",
                value: self.a,
            });
        }
        if !self.c.is_finite() {
            return Err(ModelError::NonFinite {
                name: "c",
                value: self.c,
            });
        }
        if !(self.c < 0.0) {
            return Err(ModelError::NonNegativeCurvature(self.c));
        }
        self.g.validate()?;
        self.controls.validate()
    }

    /// Copy with `t_max` replaced.
    pub fn with_t_max(&self, t_max: f64) -> Self {
        let mut p = self.clone();
        p.controls.t_max = t_max;
        p
    }
}

/// One point `(t, f, f', f'')` of the first-order system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootState {
    pub t: f64,
    pub f: f64,
    pub fp: f64,
    pub fpp: f64,
}

impl ShootState {
    pub fn new(t: f64, f: f64, fp: f64, fpp: f64) -> Self {
        Self { t, f, fp, fpp }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.f.is_finite() && self.fp.is_finite() && self.fpp.is_finite()
    }
}
