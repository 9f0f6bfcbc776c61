//! The solver against independent references: closed forms, fixed-step RK4,
//! the grid-and-bisect critical slope search and high-resolution Simpson.

use fluxshoot::acceptance::{REFERENCE_B_STAR, REFERENCE_MU};
use fluxshoot::analysis::{
    fit_exponential_tail, identity_residuals, lemma_bound_checks, m_form_data, m_form_residual,
    v_transform, Identity,
};
use fluxshoot::classify::{blowup_followthrough, classify_b, BlowupStatus, Classification};
use fluxshoot::integrator::{integrate, Termination};
use fluxshoot::model::{GSpec, ProblemSpec, SolverControls};
use fluxshoot::reference::{self, critical_slope, is_type_i, rk4_at, CriticalSlopeOracle};
use fluxshoot::shooting::{critical_trajectory, find_bstar};

fn quadratic(beta: f64, a: f64, c: f64) -> ProblemSpec {
    ProblemSpec::new(a, c, GSpec::quadratic(beta)).unwrap()
}

fn exact() -> ProblemSpec {
    ProblemSpec::new(1.0, -0.25, GSpec::oracle_cubic()).unwrap()
}

#[test]
fn exact_solution_at_sample_points() {
    let traj = integrate(&exact(), -0.5).unwrap();
    let s = traj.sample(0.0).unwrap();
    assert_eq!((s.f, s.fp, s.fpp), (1.0, -0.5, -0.25));
    assert!((traj.sample(0.36).unwrap().f - 0.8).abs() < 1e-7);
    let s = traj.sample(0.75).unwrap();
    assert!((s.f - 0.5).abs() < 1e-7);
    assert!((s.fp + 1.0).abs() < 1e-7);
    assert!((s.fpp + 2.0).abs() < 1e-7);
    assert!(traj.sample(traj.final_time() + 1e-9).is_err());
}

#[test]
fn adaptive_run_matches_fixed_step_rk4() {
    let traj = integrate(&quadratic(0.5, 0.0, -1.0), 1.0).unwrap();
    let s = traj.sample(1.0).unwrap();
    let r = reference::rk4_to(|x| 0.5 * x * x, [0.0, 1.0, -1.0], 1e-5, 1.0);
    assert!((s.f - r[0]).abs() < 1e-6, "{} vs {}", s.f, r[0]);
    assert!((s.fp - r[1]).abs() < 1e-6, "{} vs {}", s.fp, r[1]);
}

#[test]
fn halving_tolerances_converges_at_high_order() {
    let mut points = Vec::new();
    let mut last_err = f64::INFINITY;
    for k in 0..14 {
        let tol = 1e-5 / 2f64.powi(k);
        let ctl = SolverControls::default().with_tolerances(tol, tol);
        let p = ProblemSpec::with_controls(1.0, -0.25, GSpec::oracle_cubic(), ctl).unwrap();
        let traj = integrate(&p, -0.5).unwrap();
        let nodes: Vec<_> = traj.nodes().iter().filter(|s| s.t <= 0.9).collect();
        let err = nodes
            .iter()
            .map(|s| {
                let r = (1.0 - s.t).sqrt();
                (s.f - r).abs().max((s.fp + 0.5 / r).abs())
            })
            .fold(0.0, f64::max);
        assert!(err <= last_err, "error grew to {err:e} at tol {tol:e}");
        last_err = err;
        points.push(((nodes.len() as f64).ln(), err.ln()));
    }
    // Least-squares slope of log error against log step count.
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let order = -sxy / sxx;
    assert!(order >= 4.5, "observed order {order}");
}

#[test]
fn large_slope_is_type_i_by_both_integrators() {
    let v = classify_b(&quadratic(0.5, 0.0, -1.0), 10.0).unwrap();
    assert!(v.classification.is_type_i());
    assert!(is_type_i(|x| 0.5 * x * x, 0.0, 10.0, -1.0, 1e-3, 100.0));
}

#[test]
fn type_ii_examples_blow_up_on_a_long_horizon() {
    for (beta, a, c, b) in [(0.5, 0.0, -1.0, 0.0), (1.0, -1.0, -1.0, 5.0)] {
        let p = quadratic(beta, a, c).with_t_max(1000.0);
        let v = classify_b(&p, b).unwrap();
        assert!(v.classification.is_type_ii());
        let report = blowup_followthrough(&v.trajectory).unwrap();
        match report.status {
            BlowupStatus::Confirmed { tb_est, .. } => {
                assert!(tb_est.is_finite() && tb_est < 1000.0)
            }
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn reference_critical_slope_is_frozen() {
    let oracle = critical_slope(
        |x| 0.5 * x * x,
        0.0,
        -1.0,
        4.0,
        CriticalSlopeOracle::default(),
    )
    .unwrap();
    assert!(oracle.grid_monotone);
    assert!(oracle.hi - oracle.lo <= 1e-10);
    assert!(
        (oracle.hi - REFERENCE_B_STAR).abs() < 1e-12,
        "{}",
        oracle.hi
    );
}

#[test]
fn critical_slope_matches_reference() {
    let p = quadratic(0.5, 0.0, -1.0);
    let r = find_bstar(&p).unwrap();
    assert!((r.b_star - REFERENCE_B_STAR).abs() <= 1e-6);
    assert!(r.width() <= 1e-10);
    assert!(r.bracket.0 < r.b_star && r.b_star <= r.bracket.1);
    let steps = (r.initial_width / p.controls.bisect_tol).log2().ceil() as usize;
    assert!(r.iterations <= steps);
}

#[test]
fn plateau_matches_reference() {
    let p = quadratic(0.5, 0.0, -1.0);
    let r = find_bstar(&p).unwrap();
    let crit = critical_trajectory(&p, &r).unwrap();
    assert!(crit.mu > 0.0);
    assert!(crit.mu <= (2.0 * r.b_star).sqrt() + 1e-3);
    assert!((crit.mu - REFERENCE_MU).abs() <= 1e-3);
    let fit = fit_exponential_tail(&crit.trajectory).unwrap();
    assert!((fit.mu_hat.unwrap() - REFERENCE_MU).abs() <= 1e-3);
    assert!((fit.rate_hat - fit.mu_hat.unwrap()).abs() / fit.mu_hat.unwrap() <= 0.05);

    // The reference trajectory at the midpoint of its own bracket.
    let mid = REFERENCE_B_STAR - 0.5e-10;
    let ys = rk4_at(|x| 0.5 * x * x, [0.0, mid, -1.0], 1e-3, &[60.0]);
    assert!((ys[0][0] - REFERENCE_MU).abs() < 1e-6);
}

#[test]
fn critical_profile_has_the_predicted_tail() {
    let p = quadratic(0.5, 0.0, -1.0);
    let r = find_bstar(&p).unwrap();
    let crit = critical_trajectory(&p, &r).unwrap();
    let prof = v_transform(&crit.trajectory).unwrap();
    let n = prof.len() - 1;
    let got = prof.vp()[n] * prof.y()[n].sqrt();
    let want = -r.b_star.sqrt() / (2.0 * crit.mu);
    assert!((got - want).abs() <= 0.1 * want.abs(), "{got} vs {want}");
}

#[test]
fn bound_checks_on_documented_runs() {
    let r = lemma_bound_checks(&integrate(&quadratic(0.5, -1.0, -1.0), 50.0).unwrap());
    assert!(r.get("zero_slope").unwrap().passed(), "{r:?}");

    let r = lemma_bound_checks(&integrate(&quadratic(0.5, 0.0, -1.0), 10.0).unwrap());
    assert!(r.get("half_slope_time").unwrap().passed(), "{r:?}");

    let p = quadratic(0.5, 0.0, -1.0);
    let b = find_bstar(&p).unwrap().b_star - 1e-8;
    let v = classify_b(&p, b).unwrap();
    assert!(v.classification.is_type_ii());
    let r = lemma_bound_checks(&v.trajectory);
    let check = r.get("crossing_height").unwrap();
    assert!(check.passed(), "{r:?}");
}

#[test]
fn identity_one_on_the_exact_solution() {
    let p = exact().with_t_max(0.9);
    let traj = integrate(&p, -0.5).unwrap();
    assert_eq!(traj.termination(), Termination::ReachedTmax);
    assert!(identity_residuals(&traj, Identity::Unit).unwrap() <= 1e-6);

    // Left side in closed form: f = sqrt(1-t), so f f' = -1/2 and
    // f'' = -(1-t)^{-3/2}/4; the right side by Simpson at 1e5 panels.
    let g = |x: f64| x * x * (1.0 - 12.0 * x * x * x);
    let t: f64 = 0.9;
    let lhs = -0.25 * (1.0 - t).powf(-1.5) + 0.25 - 0.5 + 0.5;
    let rhs = reference::simpson(
        |s| {
            let fp = -0.5 / (1.0 - s).sqrt();
            fp * fp - g(fp)
        },
        0.0,
        t,
        100_000,
    );
    assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
}

#[test]
fn first_integral_for_beta_one() {
    for (a, b, c) in [(-1.0, 2.0, -1.0), (0.0, 1.0, -0.5), (1.0, 0.5, -1.0)] {
        let traj = integrate(&quadratic(1.0, a, c), b).unwrap();
        for s in traj.refined(4) {
            let r = s.fp + 0.5 * s.f * s.f - b - 0.5 * a * a - (c + a * b) * s.t;
            assert!(r.abs() <= 1e-8, "{r:e} at t = {}", s.t);
        }
        assert!(identity_residuals(&traj, Identity::Unit).unwrap() <= 1e-8);
    }
}

#[test]
fn tightening_tolerances_barely_moves_b_star() {
    for (beta, a, c) in [(0.5, 0.0, -1.0), (0.75, -1.0, -1.0), (0.25, 1.0, -0.1)] {
        let loose = find_bstar(&quadratic(beta, a, c)).unwrap();
        let ctl = SolverControls::default().with_tolerances(1e-11, 1e-11);
        let p = ProblemSpec::with_controls(a, c, GSpec::quadratic(beta), ctl).unwrap();
        let tight = find_bstar(&p).unwrap();
        let moved = (loose.b_star - tight.b_star).abs();
        assert!(moved < 10.0 * p.controls.bisect_tol, "{moved:e}");
    }
}

/// Fixed-step RK4 for `f''' + (m+2) f f'' - (2m+1) f'^2 = 0`.
fn m_equation(m: f64, y0: [f64; 3], h: f64, s_end: f64) -> [f64; 3] {
    let field = |y: &[f64; 3]| {
        [
            y[1],
            y[2],
            -(m + 2.0) * y[0] * y[2] + (2.0 * m + 1.0) * y[1] * y[1],
        ]
    };
    let n = (s_end / h).round() as usize;
    let mut y = y0;
    for _ in 0..n {
        let k1 = field(&y);
        let k2 = field(&std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]));
        let k3 = field(&std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]));
        let k4 = field(&std::array::from_fn(|i| y[i] + h * k3[i]));
        y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    y
}

#[test]
fn scaled_solution_solves_the_m_equation() {
    for (m, a) in [(-0.75, 0.0), (-0.9, 1.0)] {
        let d = m_form_data(m, a).unwrap();
        let p = quadratic(d.beta, d.a_beta, d.c_beta);
        let r = find_bstar(&p).unwrap();
        let traj = classify_b(&p, r.b_star).unwrap().trajectory;
        assert!(m_form_residual(&traj, m).unwrap() <= 1e-7);

        // f(s) = F(k s) / k against a direct integration of the m-equation
        // from f(0) = a, f'(0) = b*, f''(0) = -1.
        for s_end in [0.5, 2.0, 5.0] {
            let direct = m_equation(m, [a, r.b_star, -1.0], 1e-4, s_end);
            let st = traj.sample(d.k * s_end).unwrap();
            let mapped = [st.f / d.k, st.fp, d.k * st.fpp];
            for i in 0..3 {
                assert!(
                    (mapped[i] - direct[i]).abs() < 1e-6,
                    "m={m} a={a} s={s_end} component {i}: {} vs {}",
                    mapped[i],
                    direct[i]
                );
            }
        }
    }
}

#[test]
fn sign_constraint_for_positive_a() {
    let r = find_bstar(&quadratic(0.5, 1.0, -1.0)).unwrap();
    assert!(r.b_star < 1.0);
    assert!(r.diagnostic("c_plus_a_bstar_negative").unwrap().passed);
}

#[test]
fn zero_slope_is_type_ii_at_once() {
    let v = classify_b(&quadratic(0.5, 0.0, -1.0), 0.0).unwrap();
    assert!(matches!(v.classification, Classification::TypeII { t0, .. } if t0 == 0.0));
}
