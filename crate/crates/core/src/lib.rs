//! Shooting solver for
//!
//! ```text
//! f''' + f f'' + g(f') = 0,   f(0) = a,   f''(0) = c < 0,   f'(∞) = 0
//! ```
//!
//! with numerical certification of the result.
//!
//! A slope `b = f'(0)` is Type I when `f'` stays positive and Type II when it
//! turns negative; for `g = beta x^2`, `0 < beta <= 1`, the Type I slopes form
//! a half-line `[b*, ∞)` and [`shooting::find_bstar`] brackets and bisects it.
//! [`analysis`] then checks the critical solution against identities, bounds,
//! tail laws and changes of variables, and [`acceptance`] bundles those checks
//! into a pass/fail suite.
//!
//! ```
//! use fluxshoot::model::{GSpec, ProblemSpec};
//! use fluxshoot::shooting::find_bstar;
//!
//! let p = ProblemSpec::new(0.0, -1.0, GSpec::quadratic(0.5)).unwrap();
//! let r = find_bstar(&p).unwrap();
//! assert!(r.b_star > 1.9 && r.b_star < 2.0);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod analysis;
pub mod classify;
pub mod integrator;
pub mod model;
pub mod reference;
pub mod shooting;

// The guide's snippets run as doc-tests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/problem.md")]
    mod problem {}
    #[doc = include_str!("../../../book/src/integration.md")]
    mod integration {}
    #[doc = include_str!("../../../book/src/classification.md")]
    mod classification {}
    #[doc = include_str!("../../../book/src/shooting.md")]
    mod shooting {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
