use std::fmt::Write as _;

use super::AnalysisError;
use crate::integrator::{integrate, Run, StepperConfig};
use crate::par::{map_indices, Execution};
use crate::problems::{ErrorNorm, Problem, ProblemConfig};
use crate::tableau::{lookup_builtin, Method};

/// Successive self-refined references must agree to this (sum-abs) before
/// the reference is accepted.
pub const REFERENCE_TOLERANCE: f64 = 1e-11;
pub const REFERENCE_START_STEPS: usize = 64;
pub const REFERENCE_MAX_HALVINGS: usize = 20;
/// Newton tolerances of reference runs. Stage residuals at the default
/// tolerances would accumulate over the many reference steps to more than
/// [`REFERENCE_TOLERANCE`].
pub const REFERENCE_NEWTON_TOL: f64 = 1e-15;
/// Below this successive difference, growth signals a round-off floor.
pub const STALL_LEVEL: f64 = 1e-8;
/// A reference that stalls below this difference is still used by
/// [`run_convergence`]; the study notes the shortfall.
pub const REFERENCE_FALLBACK_TOLERANCE: f64 = 1e-9;
/// Errors at or below this are treated as round-off and excluded from slope
/// fits.
pub const ROUNDOFF_GUARD: f64 = 1e2 * f64::EPSILON;

/// How a reference solution was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub state: Vec<f64>,
    /// Steps of the finest run that entered the reference.
    pub n_steps: usize,
    /// Distance between the last two refinement levels (zero for runs that
    /// needed no refinement).
    pub successive_difference: f64,
}

/// Outcome of self-refinement: the best extrapolated state and whether it
/// met [`REFERENCE_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub best: Reference,
    pub converged: bool,
    pub halvings: usize,
}

/// Reference solution of an ODE problem (scalar decay or relaxation model).
///
/// The third-order IMEX method is run with `n = 64, 128, ...` steps. Each
/// pair of consecutive runs is combined by Richardson extrapolation, and the
/// refinement stops once two successive extrapolated values differ by less
/// than [`REFERENCE_TOLERANCE`].
pub fn reference_solution(
    problem: &Problem,
    t_end: f64,
    cfg: &StepperConfig,
) -> Result<Reference, AnalysisError> {
    let r = refine_reference(problem, t_end, cfg)?;
    if r.converged {
        Ok(r.best)
    } else {
        Err(AnalysisError::NoConvergence {
            halvings: r.halvings,
            difference: r.best.successive_difference,
        })
    }
}

/// Self-refinement as in [`reference_solution`], returning the best
/// available state even when the tolerance was not met. Refinement stops
/// early once the successive differences are below [`STALL_LEVEL`] and have
/// grown twice in a row, since round-off then dominates.
pub fn refine_reference(problem: &Problem, t_end: f64, cfg: &StepperConfig) -> Result<Refinement, AnalysisError> {
    let u0 = problem.initial_state();
    if problem.grid().is_some() {
        return Err(AnalysisError::InvalidArgument(format!(
            "self-refined references are for ODE problems; use temporal_reference for {}",
            problem.name()
        )));
    }
    if t_end == 0.0 {
        return Ok(Refinement {
            best: Reference {
                state: u0,
                n_steps: 0,
                successive_difference: 0.0,
            },
            converged: true,
            halvings: 0,
        });
    }
    let method = lookup_builtin("ssp-imex-mdrk-3").expect("built-in").method;
    let sys = problem.system();
    let tight = StepperConfig {
        newton_abs_tol: REFERENCE_NEWTON_TOL,
        newton_rel_tol: REFERENCE_NEWTON_TOL,
        ..cfg.clone()
    };
    let run = |n: usize| -> Result<Vec<f64>, AnalysisError> {
        Ok(integrate(sys, &method, &u0, &Run::new(0.0, t_end, n), &tight, &mut [])?.final_state)
    };
    let extrapolate = |fine: &[f64], coarse: &[f64]| -> Vec<f64> {
        fine.iter().zip(coarse).map(|(f, c)| f + (f - c) / 7.0).collect()
    };
    let mut n = REFERENCE_START_STEPS;
    let mut coarse = run(n)?;
    let mut previous: Option<Vec<f64>> = None;
    let mut best: Option<Reference> = None;
    let (mut prev_diff, mut prev_prev_diff) = (f64::INFINITY, f64::INFINITY);
    let mut halvings = 0;
    while halvings < REFERENCE_MAX_HALVINGS {
        halvings += 1;
        n *= 2;
        let fine = run(n)?;
        let current = extrapolate(&fine, &coarse);
        if let Some(prev) = &previous {
            let diff = ErrorNorm::SumAbs.distance(prev, &current);
            if best.as_ref().is_none_or(|b| diff < b.successive_difference) {
                best = Some(Reference {
                    state: current.clone(),
                    n_steps: n,
                    successive_difference: diff,
                });
            }
            if diff < REFERENCE_TOLERANCE {
                break;
            }
            if diff < STALL_LEVEL && diff > prev_diff && prev_diff > prev_prev_diff {
                break;
            }
            prev_prev_diff = prev_diff;
            prev_diff = diff;
        }
        previous = Some(current);
        coarse = fine;
    }
    let best = best.expect("at least two refinement levels");
    Ok(Refinement {
        converged: best.successive_difference < REFERENCE_TOLERANCE,
        best,
        halvings,
    })
}

/// The same method on the same grid with `factor` times as many steps.
pub fn temporal_reference(
    problem: &Problem,
    method: &Method,
    t_end: f64,
    n_steps: usize,
    factor: usize,
    cfg: &StepperConfig,
) -> Result<Reference, AnalysisError> {
    if t_end == 0.0 {
        return Ok(Reference {
            state: problem.initial_state(),
            n_steps: 0,
            successive_difference: 0.0,
        });
    }
    let n = n_steps * factor;
    let traj = integrate(
        problem.system(),
        method,
        &problem.initial_state(),
        &Run::new(0.0, t_end, n),
        cfg,
        &mut [],
    )?;
    Ok(Reference {
        state: traj.final_state,
        n_steps: n,
        successive_difference: f64::NAN,
    })
}

/// Which `(dt, error)` pairs enter the order estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderWindow {
    /// The `k` smallest step sizes whose error exceeds the round-off guard.
    Smallest(usize),
    /// All step sizes in `[dt_min, dt_max]` whose error exceeds the guard.
    Range { dt_min: f64, dt_max: f64 },
}

impl Default for OrderWindow {
    fn default() -> Self {
        OrderWindow::Smallest(4)
    }
}

/// Least-squares slope of `log(error)` against `log(dt)`; `None` with fewer
/// than two usable points.
pub fn fit_order(dts: &[f64], errors: &[Option<f64>], window: OrderWindow) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = dts
        .iter()
        .zip(errors)
        .filter_map(|(&dt, e)| e.filter(|&e| e > ROUNDOFF_GUARD && e.is_finite()).map(|e| (dt, e)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pts: Vec<(f64, f64)> = match window {
        OrderWindow::Smallest(k) => pts.into_iter().take(k).collect(),
        OrderWindow::Range { dt_min, dt_max } => pts
            .into_iter()
            .filter(|(dt, _)| *dt >= dt_min && *dt <= dt_max)
            .collect(),
    };
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// Errors of one method on one problem over a grid of `eps` and `dt` values.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub problem: String,
    pub method: String,
    pub norm: &'static str,
    pub eps_values: Vec<f64>,
    /// Strictly decreasing.
    pub dt_values: Vec<f64>,
    /// Spatial cells per run, for grid studies where `dt` follows `dx`.
    pub nx_values: Option<Vec<usize>>,
    /// `errors[i][j]` for `eps_values[i]`, `dt_values[j]`; `None` marks a
    /// failed run.
    pub errors: Vec<Vec<Option<f64>>>,
    pub estimated_orders: Vec<Option<f64>>,
    pub failures: Vec<String>,
    /// Non-fatal remarks, such as references that stalled slightly above
    /// tolerance.
    pub notes: Vec<String>,
}

impl ConvergenceStudy {
    pub fn order_for(&self, eps: f64) -> Option<f64> {
        let i = self.eps_values.iter().position(|&e| e == eps)?;
        self.estimated_orders[i]
    }

    pub fn refit(&mut self, window: OrderWindow) {
        self.estimated_orders = self
            .errors
            .iter()
            .map(|row| fit_order(&self.dt_values, row, window))
            .collect();
    }

    /// CSV with columns `eps, dt, error, order_estimate`; failed runs have an
    /// empty error field.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,dt,error,order_estimate\n");
        for (i, eps) in self.eps_values.iter().enumerate() {
            let order = self.estimated_orders[i].map_or(String::new(), |o| format!("{o:.6}"));
            for (j, dt) in self.dt_values.iter().enumerate() {
                let err = self.errors[i][j].map_or(String::new(), |e| format!("{e:.12e}"));
                let _ = writeln!(s, "{eps:e},{dt:.12e},{err},{order}");
            }
        }
        s
    }

    /// A gnuplot script drawing error against dt on log-log axes, one curve
    /// per eps, from `csv_name`.
    pub fn to_gnuplot(&self, csv_name: &str, image_name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set terminal pngcairo size 800,600");
        let _ = writeln!(s, "set output '{image_name}'");
        let _ = writeln!(s, "set logscale xy");
        let _ = writeln!(s, "set format xy '10^{{%L}}'");
        let _ = writeln!(s, "set xlabel 'dt'");
        let _ = writeln!(s, "set ylabel 'error ({})'", self.norm);
        let _ = writeln!(s, "set title '{} / {}'", self.method, self.problem);
        let _ = writeln!(s, "set key bottom right");
        let curves: Vec<String> = self
            .eps_values
            .iter()
            .map(|eps| {
                format!(
                    "'{csv_name}' using ($1=={eps:e} ? $2 : 1/0):3 with linespoints title 'eps = {eps:e}'"
                )
            })
            .collect();
        let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
        s
    }
}

fn check_dts(dt_list: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    if dt_list.is_empty() {
        return Err(AnalysisError::InvalidArgument("empty dt list".into()));
    }
    let mut dts = dt_list.to_vec();
    if dts.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(AnalysisError::InvalidArgument(format!("dt values must be positive: {dt_list:?}")));
    }
    dts.sort_by(|a, b| b.total_cmp(a));
    if dts.windows(2).any(|w| w[0] == w[1]) {
        return Err(AnalysisError::InvalidArgument(format!("duplicate dt values: {dt_list:?}")));
    }
    Ok(dts)
}

fn steps_for(t_end: f64, dt: f64) -> usize {
    ((t_end / dt).round() as usize).max(1)
}

/// Fixed-grid convergence study. ODE problems are compared against
/// [`reference_solution`] (one per eps); grid problems against the same
/// method with four times as many steps. Step counts are `round(t_end/dt)`
/// and the reported `dt` values are the ones actually used.
#[allow(clippy::too_many_arguments)]
pub fn run_convergence(
    problem: &ProblemConfig,
    method: &Method,
    eps_list: &[f64],
    dt_list: &[f64],
    window: OrderWindow,
    cfg: &StepperConfig,
    exec: Execution,
) -> Result<ConvergenceStudy, AnalysisError> {
    if eps_list.is_empty() {
        return Err(AnalysisError::InvalidArgument("empty eps list".into()));
    }
    let t_end = problem.t_end();
    let dts: Vec<f64> = check_dts(dt_list)?
        .iter()
        .map(|&dt| t_end / steps_for(t_end, dt) as f64)
        .collect();
    check_dts(&dts)?;
    let problems: Vec<Problem> = eps_list
        .iter()
        .map(|&e| problem.with_eps(e).build())
        .collect::<Result<_, _>>()?;
    let is_ode = problems[0].grid().is_none();
    let references: Vec<Result<Refinement, AnalysisError>> = if is_ode {
        map_indices(exec, problems.len(), |i| refine_reference(&problems[i], t_end, cfg))
    } else {
        Vec::new()
    };
    let mut notes = Vec::new();
    let references: Vec<Result<Reference, String>> = references
        .into_iter()
        .zip(eps_list)
        .map(|(r, eps)| match r {
            Ok(r) if r.converged => Ok(r.best),
            Ok(r) if r.best.successive_difference < REFERENCE_FALLBACK_TOLERANCE => {
                notes.push(format!(
                    "eps={eps:e}: reference stalled at successive difference {:e} after {} halvings",
                    r.best.successive_difference, r.halvings
                ));
                Ok(r.best)
            }
            Ok(r) => Err(AnalysisError::NoConvergence {
                halvings: r.halvings,
                difference: r.best.successive_difference,
            }
            .to_string()),
            Err(e) => Err(e.to_string()),
        })
        .collect();
    let ncol = dts.len();
    let cells = map_indices(exec, problems.len() * ncol, |idx| {
        let (i, j) = (idx / ncol, idx % ncol);
        let p = &problems[i];
        let n = steps_for(t_end, dts[j]);
        let reference = if is_ode {
            match &references[i] {
                Ok(r) => r.clone(),
                Err(e) => return Err(AnalysisError::Reference(e.clone())),
            }
        } else {
            temporal_reference(p, method, t_end, n, 4, cfg)?
        };
        let traj = integrate(p.system(), method, &p.initial_state(), &Run::new(0.0, t_end, n), cfg, &mut [])?;
        Ok::<f64, AnalysisError>(p.error_norm().distance(&traj.final_state, &reference.state))
    });
    let mut study = empty_study(problem, &problems[0], method, eps_list, dts, None);
    study.notes = notes;
    collect(&mut study, cells, ncol);
    study.refit(window);
    Ok(study)
}

/// Grid study: for each `nx`, `dt = cfl * dx / max_speed`, and the error is
/// the distance to a run with `dt / 4` on the same grid.
pub fn run_grid_study(
    problem: &ProblemConfig,
    method: &Method,
    eps_list: &[f64],
    nx_list: &[usize],
    cfl: f64,
    cfg: &StepperConfig,
    exec: Execution,
) -> Result<ConvergenceStudy, AnalysisError> {
    if eps_list.is_empty() || nx_list.is_empty() {
        return Err(AnalysisError::InvalidArgument("empty eps or nx list".into()));
    }
    let mut nxs = nx_list.to_vec();
    nxs.sort_unstable();
    nxs.dedup();
    let t_end = problem.t_end();
    let grid_problems: Vec<Vec<Problem>> = eps_list
        .iter()
        .map(|&e| {
            nxs.iter()
                .map(|&nx| ProblemConfig { nx: Some(nx), ..problem.with_eps(e) }.build())
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let first = &grid_problems[0][0];
    if first.grid().is_none() {
        return Err(AnalysisError::InvalidArgument(format!("{} has no spatial grid", first.name())));
    }
    let steps: Vec<usize> = grid_problems[0]
        .iter()
        .map(|p| ((t_end / p.cfl_dt(cfl).expect("grid problem")).ceil() as usize).max(1))
        .collect();
    let dts: Vec<f64> = steps.iter().map(|&n| t_end / n as f64).collect();
    let ncol = nxs.len();
    let cells = map_indices(exec, eps_list.len() * ncol, |idx| {
        let (i, j) = (idx / ncol, idx % ncol);
        let p = &grid_problems[i][j];
        let reference = temporal_reference(p, method, t_end, steps[j], 4, cfg)?;
        let traj = integrate(p.system(), method, &p.initial_state(), &Run::new(0.0, t_end, steps[j]), cfg, &mut [])?;
        Ok::<f64, AnalysisError>(p.error_norm().distance(&traj.final_state, &reference.state))
    });
    let mut study = empty_study(problem, first, method, eps_list, dts, Some(nxs));
    collect(&mut study, cells, ncol);
    study.refit(OrderWindow::Smallest(ncol));
    Ok(study)
}

fn empty_study(
    cfg: &ProblemConfig,
    p: &Problem,
    method: &Method,
    eps_list: &[f64],
    dts: Vec<f64>,
    nx_values: Option<Vec<usize>>,
) -> ConvergenceStudy {
    ConvergenceStudy {
        problem: cfg.name.clone(),
        method: method.name().to_string(),
        norm: p.error_norm().as_str(),
        eps_values: eps_list.to_vec(),
        errors: vec![vec![None; dts.len()]; eps_list.len()],
        dt_values: dts,
        nx_values,
        estimated_orders: vec![None; eps_list.len()],
        failures: Vec::new(),
        notes: Vec::new(),
    }
}

fn collect(study: &mut ConvergenceStudy, cells: Vec<Result<f64, AnalysisError>>, ncol: usize) {
    for (idx, cell) in cells.into_iter().enumerate() {
        let (i, j) = (idx / ncol, idx % ncol);
        match cell {
            Ok(e) => study.errors[i][j] = Some(e),
            Err(err) => study.failures.push(format!(
                "eps={:e} dt={:e}: {err}",
                study.eps_values[i], study.dt_values[j]
            )),
        }
    }
}
