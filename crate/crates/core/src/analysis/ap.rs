use std::fmt::Write as _;

use super::AnalysisError;
use crate::integrator::{integrate, RelaxationStructure, Run, StepperConfig, SystemError, TwoDerivativeSystem};
use crate::problems::{Problem, ProblemConfig};
use crate::tableau::{Method, MethodKind, ShuOsherTableau};

#[derive(Debug, Clone, PartialEq)]
pub struct ApDeviation {
    pub eps: f64,
    /// Max-norm distance between the projected IMEX result and the explicit
    /// limit scheme.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApReport {
    pub problem: String,
    pub method: String,
    pub dt: f64,
    pub n_steps: usize,
    pub deviations: Vec<ApDeviation>,
}

impl ApReport {
    pub fn deviation(&self, eps: f64) -> Option<f64> {
        self.deviations.iter().find(|d| d.eps == eps).map(|d| d.deviation)
    }

    /// `deviation(small) / deviation(large)`.
    pub fn ratio(&self, small: f64, large: f64) -> Option<f64> {
        Some(self.deviation(small)? / self.deviation(large)?)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,deviation\n");
        for d in &self.deviations {
            let _ = writeln!(s, "{:e},{:.12e}", d.eps, d.deviation);
        }
        s
    }
}

fn relaxation_of(sys: &dyn TwoDerivativeSystem) -> Result<&dyn RelaxationStructure, AnalysisError> {
    sys.relaxation()
        .ok_or_else(|| AnalysisError::InvalidArgument("problem has no relaxation structure".into()))
}

fn project(sys: &dyn TwoDerivativeSystem, u: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    let relax = relaxation_of(sys)?;
    let nm = relax.n_moments();
    let mut omega = vec![0.0; sys.n_blocks() * nm];
    for (block, w) in u.chunks(sys.block_size()).zip(omega.chunks_mut(nm)) {
        relax.moments(block, w);
    }
    Ok(omega)
}

fn lift(sys: &dyn TwoDerivativeSystem, omega: &[f64]) -> Result<Vec<f64>, SystemError> {
    let relax = sys.relaxation().expect("checked by caller");
    let nm = relax.n_moments();
    let mut u = vec![0.0; sys.dim()];
    for (k, (w, out)) in omega.chunks(nm).zip(u.chunks_mut(sys.block_size())).enumerate() {
        relax.equilibrium(k, w, out)?;
    }
    Ok(u)
}

/// `R F(E(omega))`: the right-hand side of the limit system.
fn limit_rhs(sys: &dyn TwoDerivativeSystem, omega: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    let u = lift(sys, omega)?;
    let mut f = vec![0.0; u.len()];
    sys.eval_f(&u, &mut f)?;
    project(sys, &f)
}

/// One step of the explicit part of `tableau` (coefficients `Re`, `P`, `W`
/// and `r` only) on the limit system `omega' = R F(E(omega))`.
pub fn explicit_limit_step(
    sys: &dyn TwoDerivativeSystem,
    tableau: &ShuOsherTableau,
    omega: &[f64],
    dt: f64,
) -> Result<Vec<f64>, AnalysisError> {
    relaxation_of(sys)?;
    let s = tableau.stages();
    let (p, w, re, r) = (tableau.p(), tableau.w(), tableau.re(), tableau.r());
    let mut stages: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut rhs: Vec<Vec<f64>> = Vec::with_capacity(s);
    for i in 0..s {
        let mut v: Vec<f64> = omega.iter().map(|x| re[i] * x).collect();
        for j in 0..i {
            let (pij, wij) = (p[(i, j)], w[(i, j)]);
            for (k, vk) in v.iter_mut().enumerate() {
                *vk += pij * stages[j][k] + wij * (stages[j][k] + dt / r * rhs[j][k]);
            }
        }
        rhs.push(if i + 1 < s { limit_rhs(sys, &v)? } else { Vec::new() });
        stages.push(v);
    }
    Ok(stages.pop().expect("at least one stage"))
}

/// Runs the IMEX method at each `eps` for `round(t_end/dt)` steps and
/// compares the projected result with the explicit limit scheme started
/// from the projected initial data.
pub fn ap_limit_check(
    problem: &ProblemConfig,
    tableau: &ShuOsherTableau,
    dt: f64,
    eps_list: &[f64],
    cfg: &StepperConfig,
) -> Result<ApReport, AnalysisError> {
    if tableau.kind() != MethodKind::ImexMultiDerivative {
        return Err(AnalysisError::Hypothesis(format!("{} is not an IMEX method", tableau.name())));
    }
    if !tableau.every_stage_implicit() {
        return Err(AnalysisError::Hypothesis(format!(
            "{} has a stage with d_ii + |ddot_ii| = 0",
            tableau.name()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) || eps_list.is_empty() {
        return Err(AnalysisError::InvalidArgument("need dt > 0 and at least one eps".into()));
    }
    let t_end = problem.t_end();
    let n_steps = ((t_end / dt).round() as usize).max(1);
    let dt = t_end / n_steps as f64;
    let method = Method::ShuOsher(tableau.clone());
    let mut deviations = Vec::with_capacity(eps_list.len());
    let mut limit: Option<Vec<f64>> = None;
    for &eps in eps_list {
        let p: Problem = problem.with_eps(eps).build()?;
        let sys = p.system();
        if limit.is_none() {
            let mut omega = project(sys, &p.initial_state())?;
            for _ in 0..n_steps {
                omega = explicit_limit_step(sys, tableau, &omega, dt)?;
            }
            limit = Some(omega);
        }
        let traj = integrate(sys, &method, &p.initial_state(), &Run::new(0.0, t_end, n_steps), cfg, &mut [])?;
        let omega = project(sys, &traj.final_state)?;
        let deviation = omega
            .iter()
            .zip(limit.as_ref().expect("set above"))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        deviations.push(ApDeviation { eps, deviation });
    }
    Ok(ApReport {
        problem: problem.name.clone(),
        method: tableau.name().to_string(),
        dt,
        n_steps,
        deviations,
    })
}
