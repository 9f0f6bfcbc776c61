//! Numerical checks of the structure a solution must have: the integral
//! identities, the a priori bounds, the two tail laws, the `v`-transform and
//! the change of variables onto the `m`-equation.

mod bounds;
mod identities;
mod mform;
mod tail;
mod vtransform;

use thiserror::Error;

use crate::integrator::IntegrateError;

pub use bounds::{lemma_bound_checks, BoundCheck, BoundReport, BoundStatus};
pub use identities::{identity_residuals, residual_at, Identity};
pub use mform::{beta_form_residual, m_form_data, m_form_residual, map_m_to_beta, MFormData};
pub use tail::{
    fit_exponential_tail, fit_exponential_tail_samples, fit_power_law, fit_power_tail, TailFit,
    TAIL_FP_HIGH, TAIL_FP_LOW,
};
pub use vtransform::{v_ode_residual, v_transform, v_transform_with, VProfile, DLN_Y};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("tail window is empty: {reason}")]
    WindowEmpty { reason: String },
    #[error("y = (f'/b)^2 is not strictly decreasing near t = {t}")]
    NonMonotoneY { t: f64 },
    #[error("{got} samples, at least {need} needed")]
    TooFewSamples { got: usize, need: usize },
    #[error("m = {m} is outside (-1, -1/2)")]
    MOutOfRange { m: f64 },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
}
