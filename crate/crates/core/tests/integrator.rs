use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use ssp_mdrk::analysis::{fit_order, OrderWindow};
use ssp_mdrk::integrator::{
    integrate, solve_stage, step, FastPath, IntegrateError, JacobianMode, Run, StepperConfig, SystemError,
    TwoDerivativeSystem,
};
use ssp_mdrk::par::Execution;
use ssp_mdrk::problems::{OdeRelaxation, Problem, ProblemConfig, ScalarDecay};
use ssp_mdrk::tableau::{builtin_methods, lookup_builtin, MethodKind};

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    assert!(f(lo) * f(hi) < 0.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn cubic_root(dt: f64) -> f64 {
    bisect(|u| 100.0 * dt * dt * u.powi(3) + 10.0 * dt * u * u + u - 10.0, 0.0, 10.0, 1e-14)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

struct Zero(usize);

impl TwoDerivativeSystem for Zero {
    fn dim(&self) -> usize {
        self.0
    }
    fn has_explicit(&self) -> bool {
        true
    }
    fn eval_g_block(&self, _: usize, _: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        out.fill(0.0);
        Ok(())
    }
    fn eval_gdot_block(&self, _: usize, _: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        out.fill(0.0);
        Ok(())
    }
}

/// `u' = lf u + lg u`, with `lf u` as the explicit part.
struct Linear {
    lf: f64,
    lg: f64,
}

impl TwoDerivativeSystem for Linear {
    fn dim(&self) -> usize {
        1
    }
    fn has_explicit(&self) -> bool {
        self.lf != 0.0
    }
    fn eval_f(&self, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        out[0] = self.lf * u[0];
        Ok(())
    }
    fn eval_g_block(&self, _: usize, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        out[0] = self.lg * u[0];
        Ok(())
    }
    fn eval_gdot_block(&self, _: usize, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        out[0] = self.lg * self.lg * u[0];
        Ok(())
    }
    fn jacobian_g_block(&self, _: usize, _: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, self.lg))
    }
    fn jacobian_gdot_block(&self, _: usize, _: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, self.lg * self.lg))
    }
}

/// `u' = -u^2`, exact solution `u0 / (1 + u0 t)`.
struct Riccati;

impl TwoDerivativeSystem for Riccati {
    fn dim(&self) -> usize {
        1
    }
    fn eval_g_block(&self, _: usize, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        out[0] = -u[0] * u[0];
        Ok(())
    }
    fn eval_gdot_block(&self, _: usize, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        out[0] = 2.0 * u[0].powi(3);
        Ok(())
    }
}

#[test]
fn stage_solve_matches_bisection_root() {
    let dt = 0.25;
    let (u, stats) = solve_stage(&ScalarDecay, &[10.0], 1.0, -0.5, dt, &StepperConfig::default(), &[10.0]).unwrap();
    assert!((u[0] - cubic_root(dt)).abs() < 1e-10, "{} vs {}", u[0], cubic_root(dt));
    assert!(stats.newton_iters >= 1);
    assert!(!stats.used_fast_path);
}

#[test]
fn stage_solve_without_stiff_term_returns_rhs() {
    let rhs = [0.3, -1.2, 4.0];
    let (u, _) = solve_stage(&Zero(3), &rhs, 0.7, -0.2, 0.5, &StepperConfig::default(), &rhs).unwrap();
    assert_eq!(u, rhs);
}

#[test]
fn implicit_taylor_step_matches_bisection_root() {
    let m = lookup_builtin("implicit-taylor-2").unwrap().method;
    let (u, stats) = step(&ScalarDecay, &m, &[10.0], 0.25, &StepperConfig::default()).unwrap();
    assert!((u[0] - cubic_root(0.25)).abs() < 1e-10);
    assert_eq!(stats.stage_newton_iters.len(), 1);
    assert_eq!(stats.residual_norms.len(), 1);
    assert_eq!(stats.used_fast_path.len(), 1);
}

#[test]
fn zero_operators_leave_state_unchanged() {
    let u = [1.5, -0.25, 3.0, 0.0];
    for m in builtin_methods() {
        let (next, _) = step(&Zero(4), &m.method, &u, 0.37, &StepperConfig::default()).unwrap();
        assert!(max_diff(&next, &u) < 1e-15, "{}: {next:?}", m.name);
    }
}

/// Straight-line IMEX evaluator built from the printed Butcher matrices of
/// the second-order method, with its own 2x2 Newton on each stage.
fn imex2_oracle(eps: f64, u: [f64; 2], dt: f64) -> [f64; 2] {
    let ahat = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.5, 0.0]];
    let a = [[0.5, 0.0, 0.0], [0.5, 0.0, 0.0], [0.5, 0.0, 0.5]];
    let adot = [[0.0, 0.0, 0.0], [0.0, -0.5, 0.0], [0.0, -0.25, 0.0]];
    let f = |x: [f64; 2]| [x[1], 0.0];
    let q = |x: [f64; 2]| (1.0 + x[0] * x[0]) * (x[0].sin() - x[1]);
    let g = |x: [f64; 2]| [0.0, q(x) / eps];
    let gdot = |x: [f64; 2]| [0.0, -(1.0 + x[0] * x[0]) * q(x) / (eps * eps)];
    let mut stages: Vec<[f64; 2]> = Vec::new();
    for i in 0..3 {
        let mut known = u;
        for j in 0..i {
            let (fj, gj, gdj) = (f(stages[j]), g(stages[j]), gdot(stages[j]));
            for k in 0..2 {
                known[k] += dt * ahat[i][j] * fj[k] + dt * a[i][j] * gj[k] + dt * dt * adot[i][j] * gdj[k];
            }
        }
        let residual = |x: [f64; 2]| {
            let (gx, gdx) = (g(x), gdot(x));
            [
                x[0] - known[0] - dt * a[i][i] * gx[0] - dt * dt * adot[i][i] * gdx[0],
                x[1] - known[1] - dt * a[i][i] * gx[1] - dt * dt * adot[i][i] * gdx[1],
            ]
        };
        let mut x = known;
        for _ in 0..100 {
            let r = residual(x);
            let h = 1e-7;
            let mut jac = [[0.0; 2]; 2];
            for c in 0..2 {
                let mut xp = x;
                xp[c] += h;
                let rp = residual(xp);
                for row in 0..2 {
                    jac[row][c] = (rp[row] - r[row]) / h;
                }
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            let dx0 = (jac[1][1] * r[0] - jac[0][1] * r[1]) / det;
            let dx1 = (jac[0][0] * r[1] - jac[1][0] * r[0]) / det;
            x = [x[0] - dx0, x[1] - dx1];
            if dx0.abs().max(dx1.abs()) < 1e-15 {
                break;
            }
        }
        stages.push(x);
    }
    stages[2]
}

#[test]
fn imex2_step_matches_printed_butcher_oracle() {
    let m = lookup_builtin("ssp-imex-mdrk-2").unwrap().method;
    let sys = OdeRelaxation::new(1.0);
    for fast in [FastPath::Auto, FastPath::ForceNewton] {
        let cfg = StepperConfig {
            fast_path: fast,
            ..Default::default()
        };
        let (u, _) = step(&sys, &m, &[2.0, 0.0], 0.1, &cfg).unwrap();
        let oracle = imex2_oracle(1.0, [2.0, 0.0], 0.1);
        assert!(max_diff(&u, &oracle) < 1e-10, "{fast:?}: {u:?} vs {oracle:?}");
    }
}

/// Last component of `(I - z A - z^2 Adot - zf Ahat)^{-1} e`.
fn stability_value(bt: &ssp_mdrk::ButcherTableau, zg: f64, zf: f64) -> f64 {
    let s = bt.stages();
    let m = DMatrix::identity(s, s) - bt.a() * zg - bt.adot() * (zg * zg) - bt.ahat() * zf;
    let y = m.lu().solve(&DVector::from_element(s, 1.0)).unwrap();
    y[s - 1]
}

#[test]
fn linear_step_reproduces_stability_function() {
    for m in builtin_methods() {
        let bt = m.method.butcher();
        for dt in [0.01, 0.3, 2.0, 50.0] {
            let mut cases = vec![(0.0, -3.0)];
            if m.method.kind() == MethodKind::ImexMultiDerivative {
                cases.push((-1.0, -3.0));
                cases.push((-2.0, 0.0));
            }
            for (lf, lg) in cases {
                let (u, _) = step(&Linear { lf, lg }, &m.method, &[1.0], dt, &StepperConfig::default()).unwrap();
                let expect = stability_value(&bt, lg * dt, lf * dt);
                assert!(
                    (u[0] - expect).abs() < 1e-12,
                    "{} dt={dt} lf={lf} lg={lg}: {} vs {expect}",
                    m.name,
                    u[0]
                );
            }
        }
    }
}

fn bgk_problem(nx: usize, eps: f64) -> Problem {
    ProblemConfig {
        nx: Some(nx),
        ..ProblemConfig::named("bgk")
    }
    .with_eps(eps)
    .build()
    .unwrap()
}

#[test]
fn steps_are_bitwise_deterministic_across_execution_modes() {
    let p = bgk_problem(16, 1e-3);
    let u0 = p.initial_state();
    let m = lookup_builtin("ssp-imex-mdrk-3").unwrap().method;
    let dt = 0.01;
    let seq = StepperConfig {
        execution: Execution::Sequential,
        ..Default::default()
    };
    let par = StepperConfig {
        execution: Execution::Parallel,
        ..Default::default()
    };
    let (a, sa) = step(p.system(), &m, &u0, dt, &seq).unwrap();
    let (b, sb) = step(p.system(), &m, &u0, dt, &seq).unwrap();
    let (c, _) = step(p.system(), &m, &u0, dt, &par).unwrap();
    assert_eq!(a, b);
    assert_eq!(sa, sb);
    assert_eq!(a, c);
}

#[test]
fn fast_path_agrees_with_newton() {
    let newton = StepperConfig {
        fast_path: FastPath::ForceNewton,
        ..Default::default()
    };
    // Plain Newton stalls on BGK once eps is far below dt (tail values near
    // 1e-50 and a stiff second-derivative term), so BGK stays at eps >= 1e-3.
    let problems = [
        bgk_problem(8, 0.05),
        bgk_problem(8, 1e-3),
        ProblemConfig { nx: Some(16), ..ProblemConfig::named("broadwell") }.with_eps(1e-2).build().unwrap(),
        ProblemConfig { nx: Some(16), ..ProblemConfig::named("broadwell") }.with_eps(1e-6).build().unwrap(),
        ProblemConfig::named("ode_relaxation").with_eps(1e-3).build().unwrap(),
    ];
    for p in &problems {
        let u0 = p.initial_state();
        for name in ["ssp-imex-mdrk-2", "ssp-imex-mdrk-3"] {
            let m = lookup_builtin(name).unwrap().method;
            let (fast, fs) = step(p.system(), &m, &u0, 0.01, &StepperConfig::default()).unwrap();
            let (slow, ss) = step(p.system(), &m, &u0, 0.01, &newton).unwrap();
            assert!(fs.used_fast_path.iter().any(|&f| f), "{} {name}", p.name());
            assert!(ss.used_fast_path.iter().all(|&f| !f));
            assert!(max_diff(&fast, &slow) < 1e-9, "{} {name}: {}", p.name(), max_diff(&fast, &slow));
        }
    }
}

#[test]
fn finite_difference_jacobians_reach_the_same_step() {
    let fd = StepperConfig {
        jacobian_mode: JacobianMode::FiniteDifference,
        fast_path: FastPath::ForceNewton,
        ..Default::default()
    };
    let m = lookup_builtin("ssp-imdrk-3").unwrap().method;
    let (a, _) = step(&ScalarDecay, &m, &[10.0], 0.1, &StepperConfig::default()).unwrap();
    let (b, _) = step(&ScalarDecay, &m, &[10.0], 0.1, &fd).unwrap();
    assert!((a[0] - b[0]).abs() < 1e-9);
}

#[test]
fn local_truncation_error_decays_at_design_rate() {
    let cfg = StepperConfig {
        newton_abs_tol: 1e-15,
        newton_rel_tol: 1e-15,
        ..Default::default()
    };
    let dts: Vec<f64> = (0..6).map(|k| 0.05 / 2f64.powi(k)).collect();
    for m in builtin_methods() {
        let errors: Vec<Option<f64>> = dts
            .iter()
            .map(|&dt| {
                let (u, _) = step(&Riccati, &m.method, &[1.0], dt, &cfg).unwrap();
                Some((u[0] - 1.0 / (1.0 + dt)).abs())
            })
            .collect();
        let slope = fit_order(&dts, &errors, OrderWindow::Smallest(4)).unwrap();
        let expected = (m.design_order + 1) as f64;
        if m.name == "dirk-3" {
            // The comparator also satisfies the fourth-order conditions on this problem.
            assert!(slope >= expected - 0.25, "{}: slope {slope}, errors {errors:?}", m.name);
        } else {
            assert!((slope - expected).abs() <= 0.25, "{}: slope {slope}, errors {errors:?}", m.name);
        }
    }
}

#[test]
fn single_step_integration_equals_step() {
    let p = bgk_problem(8, 1e-2);
    let u0 = p.initial_state();
    for m in builtin_methods() {
        let (one, _) = step(p.system(), &m.method, &u0, 0.02, &StepperConfig::default()).unwrap();
        let traj = integrate(p.system(), &m.method, &u0, &Run::new(0.0, 0.02, 1), &StepperConfig::default(), &mut [])
            .unwrap();
        assert_eq!(traj.final_state, one, "{}", m.name);
        assert_eq!(traj.steps_taken, 1);
        assert_eq!(traj.t_final, 0.02);
    }
}

#[test]
fn snapshots_follow_requested_cadence() {
    let m = lookup_builtin("implicit-taylor-2").unwrap().method;
    let run = Run {
        snapshot_every: Some(3),
        ..Run::new(0.0, 2.0, 8)
    };
    let traj = integrate(&ScalarDecay, &m, &[10.0], &run, &StepperConfig::default(), &mut []).unwrap();
    let steps: Vec<usize> = traj.snapshots.iter().map(|s| s.step).collect();
    assert_eq!(steps, vec![0, 3, 6]);
    assert_eq!(traj.stats.len(), 8);
    assert!(traj.snapshots.iter().all(|s| s.state[0] > 0.0));
}

#[test]
fn invalid_arguments_are_rejected() {
    let m = lookup_builtin("implicit-taylor-2").unwrap().method;
    let cfg = StepperConfig::default();
    let bad = |r: Result<_, IntegrateError>| matches!(r, Err(IntegrateError::InvalidArgument(_)));
    assert!(bad(integrate(&ScalarDecay, &m, &[10.0], &Run::new(0.0, 1.0, 0), &cfg, &mut [])));
    assert!(bad(integrate(&ScalarDecay, &m, &[10.0], &Run::new(1.0, 1.0, 4), &cfg, &mut [])));
    assert!(bad(integrate(&ScalarDecay, &m, &[10.0, 1.0], &Run::new(0.0, 1.0, 4), &cfg, &mut [])));
    let zero_iters = StepperConfig {
        newton_max_iters: 0,
        ..Default::default()
    };
    assert!(bad(integrate(&ScalarDecay, &m, &[10.0], &Run::new(0.0, 1.0, 4), &zero_iters, &mut [])));
    let err = step(&ScalarDecay, &m, &[10.0, 2.0], 0.1, &cfg).unwrap_err();
    assert_eq!(err.stage, 1);
}

#[test]
fn newton_failure_reports_step_and_partial_trajectory() {
    let m = lookup_builtin("ssp-imdrk-4").unwrap().method;
    let cfg = StepperConfig {
        newton_max_iters: 1,
        fast_path: FastPath::ForceNewton,
        ..Default::default()
    };
    match integrate(&ScalarDecay, &m, &[10.0], &Run::new(0.0, 2.0, 4), &cfg, &mut []) {
        Err(IntegrateError::Step { step, partial, error, .. }) => {
            assert_eq!(step, 1);
            assert_eq!(partial.steps_taken, 0);
            assert!(error.stage >= 1);
        }
        other => panic!("expected a step failure, got {other:?}"),
    }
}

fn problems_for_derivative_check() -> Vec<Problem> {
    vec![
        ProblemConfig::named("scalar_decay").build().unwrap(),
        ProblemConfig::named("ode_relaxation").with_eps(0.5).build().unwrap(),
        ProblemConfig { nx: Some(8), ..ProblemConfig::named("hyperbolic_relaxation") }.with_eps(0.5).build().unwrap(),
        ProblemConfig { nx: Some(8), ..ProblemConfig::named("broadwell") }.with_eps(0.5).build().unwrap(),
        bgk_problem(4, 0.5),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gdot_is_the_directional_derivative_of_g(which in 0usize..5, scale in 0.8..1.2f64) {
        let p = &problems_for_derivative_check()[which];
        let sys = p.system();
        let u: Vec<f64> = p.initial_state().iter().enumerate()
            .map(|(k, x)| x * (scale + 0.05 * (k as f64).sin()))
            .collect();
        let n = u.len();
        let mut g = vec![0.0; n];
        let mut gdot = vec![0.0; n];
        sys.eval_g(&u, &mut g).unwrap();
        sys.eval_gdot(&u, &mut gdot).unwrap();
        let gscale = g.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
        let quotient = |delta: f64| {
            let h = delta / gscale;
            let shifted: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a + h * b).collect();
            let mut gs = vec![0.0; n];
            sys.eval_g(&shifted, &mut gs).unwrap();
            gs.iter().zip(&g).map(|(a, b)| (a - b) / h).collect::<Vec<f64>>()
        };
        let norm = gdot.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
        let err = |d: &[f64]| max_diff(d, &gdot) / norm;
        let (q5, q6, q7) = (quotient(1e-5), quotient(1e-6), quotient(1e-7));
        let (e5, e6, e7) = (err(&q5), err(&q6), err(&q7));
        prop_assert!(e5.min(e6).min(e7) < 1e-5, "{} errors {e5:e} {e6:e} {e7:e}", p.name());
        // Richardson combination of the two larger steps removes the O(delta) term.
        let rich: Vec<f64> = q6.iter().zip(&q5).map(|(a, b)| (10.0 * a - b) / 9.0).collect();
        prop_assert!(err(&rich) <= e5.max(1e-8), "{} richardson {:e} vs {e5:e}", p.name(), err(&rich));
    }
}
