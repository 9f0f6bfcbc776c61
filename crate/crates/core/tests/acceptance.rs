//! Runs the acceptance suite and prints one line per criterion.

use std::process::ExitCode;

use fluxshoot::acceptance::{self, Suite};
use fluxshoot::model::SolverControls;

/// The thresholds are part of the contract; changing one must show up here.
fn pinned_tolerances() -> Vec<(&'static str, f64, f64)> {
    vec![
        ("oracle", acceptance::ORACLE_TOL, 1e-7),
        ("first integral", acceptance::FIRST_INTEGRAL_TOL, 1e-8),
        ("identities", acceptance::IDENTITY_TOL, 1e-6),
        ("b* vs oracle", acceptance::B_STAR_TOL, 1e-6),
        ("bracket width", acceptance::BRACKET_WIDTH, 1e-10),
        ("bisections", acceptance::MAX_BISECTIONS as f64, 60.0),
        ("empty set min b", acceptance::EMPTY_SET_MIN_B, 1e4),
        ("tail rate", acceptance::TAIL_RATE_REL_TOL, 0.05),
        ("bound slack", acceptance::BOUND_SLACK, 1e-3),
        ("power slope", acceptance::POWER_SLOPE_TOL, 0.03),
        ("power t_max", acceptance::POWER_T_MAX, 2000.0),
        ("v init", acceptance::V_INIT_TOL, 1e-8),
        ("v residual", acceptance::V_RESIDUAL_TOL, 1e-3),
        ("m residual", acceptance::M_RESIDUAL_TOL, 1e-7),
        ("sweep points", acceptance::SWEEP_LEN as f64, 64.0),
    ]
}

fn main() -> ExitCode {
    let mut ok = true;
    for (name, got, want) in pinned_tolerances() {
        if got != want {
            println!("FAIL tolerance {name} is {got:e}, pinned at {want:e}");
            ok = false;
        }
    }
    let budgets = [1, 1, 30, 10, 0, 0, 0, 0, 30, 0, 0, 0];
    for (c, secs) in acceptance::list().iter().zip(budgets) {
        let got = c.budget.map_or(0, |d| d.as_secs());
        if got != secs {
            println!(
                "FAIL budget for criterion {} is {got}s, pinned at {secs}s",
                c.id
            );
            ok = false;
        }
    }

    let defaults = SolverControls::default();
    let suite = Suite::new(defaults);
    for outcome in suite.run_all() {
        println!("{}", outcome.line());
        ok &= outcome.passed;
    }
    if ok {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
