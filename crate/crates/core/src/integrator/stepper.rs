use thiserror::Error;

use super::{solve_stage, Monitor, SolveError, StepStats, StepperConfig, SystemError, TwoDerivativeSystem};
use crate::tableau::{ButcherTableau, Method, ShuOsherTableau};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("stage {stage}: {source}")]
pub struct StepError {
    /// 1-based stage index.
    pub stage: usize,
    pub source: SolveError,
    /// Diagnostics of the stages completed before the failure, plus the
    /// predictor of the failing stage.
    pub stats: Box<StepStats>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("step {step} (t = {t}): {error}")]
    Step {
        step: usize,
        t: f64,
        error: StepError,
        /// Everything computed before the failing step.
        partial: Box<Trajectory>,
    },
}

/// Time interval and output cadence for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Run {
    pub t0: f64,
    pub t_end: f64,
    pub n_steps: usize,
    /// Record the state every this many steps (and at step 0).
    pub snapshot_every: Option<usize>,
}

impl Run {
    pub fn new(t0: f64, t_end: f64, n_steps: usize) -> Self {
        Self {
            t0,
            t_end,
            n_steps,
            snapshot_every: None,
        }
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t0) / self.n_steps as f64
    }

    pub fn time_at(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            self.t0 + k as f64 * self.dt()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub state: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub final_state: Vec<f64>,
    pub t_final: f64,
    pub steps_taken: usize,
    pub snapshots: Vec<Snapshot>,
    pub stats: Vec<StepStats>,
}

/// Advances `u` by one step of `method`.
pub fn step<S: TwoDerivativeSystem + ?Sized>(
    sys: &S,
    method: &Method,
    u: &[f64],
    dt: f64,
    cfg: &StepperConfig,
) -> Result<(Vec<f64>, StepStats), StepError> {
    if u.len() != sys.dim() {
        return Err(StepError {
            stage: 1,
            source: SystemError::Dimension {
                expected: sys.dim(),
                found: u.len(),
            }
            .into(),
            stats: Box::default(),
        });
    }
    match method {
        Method::ShuOsher(t) => step_shu_osher(sys, t, u, dt, cfg),
        Method::Butcher(t) => step_butcher(sys, t, u, dt, cfg),
    }
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

struct StageRecorder {
    stats: StepStats,
}

impl StageRecorder {
    fn new() -> Self {
        Self {
            stats: StepStats::default(),
        }
    }

    fn solve<S: TwoDerivativeSystem + ?Sized>(
        &mut self,
        sys: &S,
        stage: usize,
        ue: &[f64],
        d: f64,
        ddot: f64,
        dt: f64,
        cfg: &StepperConfig,
    ) -> Result<Vec<f64>, StepError> {
        self.stats.predictor_min.push(min_of(ue));
        match solve_stage(sys, ue, d, ddot, dt, cfg, ue) {
            Ok((v, st)) => {
                self.stats.stage_newton_iters.push(st.newton_iters);
                self.stats.residual_norms.push(st.residual_norm);
                self.stats.used_fast_path.push(st.used_fast_path);
                self.stats.stage_min.push(min_of(&v));
                Ok(v)
            }
            Err(source) => Err(self.fail(stage, source)),
        }
    }

    fn fail(&self, stage: usize, source: SolveError) -> StepError {
        StepError {
            stage: stage + 1,
            source,
            stats: Box::new(self.stats.clone()),
        }
    }
}

fn step_shu_osher<S: TwoDerivativeSystem + ?Sized>(
    sys: &S,
    t: &ShuOsherTableau,
    u: &[f64],
    dt: f64,
    cfg: &StepperConfig,
) -> Result<(Vec<f64>, StepStats), StepError> {
    let s = t.stages();
    let n = u.len();
    let (p, w, re) = (t.p(), t.w(), t.re());
    let explicit = sys.has_explicit();
    let h = dt / t.r();
    let mut rec = StageRecorder::new();
    // Forward-Euler pairs u_j + (dt/r) F(u_j), kept only where some later
    // stage uses them.
    let mut stages: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut euler: Vec<Option<Vec<f64>>> = Vec::with_capacity(s);
    for i in 0..s {
        let mut ue: Vec<f64> = u.iter().map(|x| re[i] * x).collect();
        for j in 0..i {
            let pij = p[(i, j)];
            if pij != 0.0 {
                axpy(pij, &stages[j], &mut ue);
            }
            let wij = w[(i, j)];
            if wij != 0.0 {
                match &euler[j] {
                    Some(e) => axpy(wij, e, &mut ue),
                    None => axpy(wij, &stages[j], &mut ue),
                }
            }
        }
        let ui = rec.solve(sys, i, &ue, t.d()[i], t.ddot()[i], dt, cfg)?;
        let used_later = (i + 1..s).any(|k| w[(k, i)] != 0.0);
        let e = if explicit && used_later {
            let mut f = vec![0.0; n];
            sys.eval_f(&ui, &mut f)
                .map_err(|e| rec.fail(i, e.into()))?;
            Some(ui.iter().zip(&f).map(|(a, b)| a + h * b).collect())
        } else {
            None
        };
        euler.push(e);
        stages.push(ui);
    }
    let last = stages.pop().expect("at least one stage");
    Ok((last, rec.stats))
}

fn step_butcher<S: TwoDerivativeSystem + ?Sized>(
    sys: &S,
    t: &ButcherTableau,
    u: &[f64],
    dt: f64,
    cfg: &StepperConfig,
) -> Result<(Vec<f64>, StepStats), StepError> {
    let s = t.stages();
    let n = u.len();
    let (ah, a, ad) = (t.ahat(), t.a(), t.adot());
    let explicit = sys.has_explicit();
    let mut rec = StageRecorder::new();
    let mut fs: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut gs: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut gds: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut last = Vec::new();
    for i in 0..s {
        let mut ue = u.to_vec();
        for j in 0..i {
            if ah[(i, j)] != 0.0 {
                axpy(dt * ah[(i, j)], &fs[j], &mut ue);
            }
            if a[(i, j)] != 0.0 {
                axpy(dt * a[(i, j)], &gs[j], &mut ue);
            }
            if ad[(i, j)] != 0.0 {
                axpy(dt * dt * ad[(i, j)], &gds[j], &mut ue);
            }
        }
        let ui = rec.solve(sys, i, &ue, a[(i, i)], ad[(i, i)], dt, cfg)?;
        if i + 1 < s {
            let mut f = vec![0.0; n];
            let mut g = vec![0.0; n];
            let mut gd = vec![0.0; n];
            if explicit {
                sys.eval_f(&ui, &mut f).map_err(|e| rec.fail(i, e.into()))?;
            }
            sys.eval_g(&ui, &mut g).map_err(|e| rec.fail(i, e.into()))?;
            if (i + 1..s).any(|k| ad[(k, i)] != 0.0) {
                sys.eval_gdot(&ui, &mut gd).map_err(|e| rec.fail(i, e.into()))?;
            }
            fs.push(f);
            gs.push(g);
            gds.push(gd);
        } else {
            last = ui;
        }
    }
    Ok((last, rec.stats))
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Applies [`step`] `run.n_steps` times with `dt = (t_end - t0) / n_steps`.
pub fn integrate<S: TwoDerivativeSystem + ?Sized>(
    sys: &S,
    method: &Method,
    u0: &[f64],
    run: &Run,
    cfg: &StepperConfig,
    monitors: &mut [&mut dyn Monitor],
) -> Result<Trajectory, IntegrateError> {
    if run.n_steps == 0 {
        return Err(IntegrateError::InvalidArgument("n_steps must be at least 1".into()));
    }
    if !(run.t_end > run.t0) {
        return Err(IntegrateError::InvalidArgument(format!(
            "t_end ({}) must exceed t0 ({})",
            run.t_end, run.t0
        )));
    }
    if u0.len() != sys.dim() {
        return Err(IntegrateError::InvalidArgument(format!(
            "initial state has length {}, system dimension is {}",
            u0.len(),
            sys.dim()
        )));
    }
    cfg.validate()?;
    let dt = run.dt();
    let mut traj = Trajectory {
        final_state: u0.to_vec(),
        t_final: run.t0,
        steps_taken: 0,
        snapshots: Vec::new(),
        stats: Vec::with_capacity(run.n_steps),
    };
    let every = run.snapshot_every.filter(|&k| k > 0);
    if every.is_some() {
        traj.snapshots.push(Snapshot {
            step: 0,
            t: run.t0,
            state: u0.to_vec(),
        });
    }
    for m in monitors.iter_mut() {
        m.start(run.t0, u0);
    }
    for k in 1..=run.n_steps {
        match step(sys, method, &traj.final_state, dt, cfg) {
            Ok((next, stats)) => {
                let t = run.time_at(k);
                for m in monitors.iter_mut() {
                    m.observe(k, t, &next, &stats);
                }
                traj.final_state = next;
                traj.t_final = t;
                traj.steps_taken = k;
                traj.stats.push(stats);
                if every.is_some_and(|e| k % e == 0) {
                    traj.snapshots.push(Snapshot {
                        step: k,
                        t,
                        state: traj.final_state.clone(),
                    });
                }
            }
            Err(error) => {
                for m in monitors.iter_mut() {
                    m.observe_failure(k, &error.stats, &error);
                }
                return Err(IntegrateError::Step {
                    step: k,
                    t: traj.t_final,
                    error,
                    partial: Box::new(traj),
                });
            }
        }
    }
    Ok(traj)
}

/// One step of the two-stage explicit SSP Runge-Kutta method (Heun form) on
/// `u' = F(u) + G(u)`.
pub fn explicit_ssp_rk2_step<S: TwoDerivativeSystem + ?Sized>(
    sys: &S,
    u: &[f64],
    dt: f64,
) -> Result<Vec<f64>, SystemError> {
    let n = u.len();
    let mut rhs = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let full_rhs = |x: &[f64], rhs: &mut [f64], tmp: &mut [f64]| -> Result<(), SystemError> {
        sys.eval_f(x, rhs)?;
        sys.eval_g(x, tmp)?;
        for (r, g) in rhs.iter_mut().zip(tmp.iter()) {
            *r += g;
        }
        Ok(())
    };
    full_rhs(u, &mut rhs, &mut tmp)?;
    let u1: Vec<f64> = u.iter().zip(&rhs).map(|(a, b)| a + dt * b).collect();
    full_rhs(&u1, &mut rhs, &mut tmp)?;
    Ok(u
        .iter()
        .zip(u1.iter().zip(&rhs))
        .map(|(a, (b, r))| 0.5 * a + 0.5 * (b + dt * r))
        .collect())
}
