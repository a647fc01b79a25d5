//! Stage solver and fixed-step drivers.
//!
//! A problem is a [`TwoDerivativeSystem`]: a non-stiff operator `F` treated
//! explicitly, a stiff operator `G` (with any `1/eps` already folded in) and
//! its flow derivative `Gdot = G'G`. The stiff part never couples different
//! blocks of the state, so every implicit stage splits into independent
//! block solves.

mod stage;
mod stepper;

pub use stage::{solve_stage, StageStats};
pub use stepper::{
    explicit_ssp_rk2_step, integrate, step, IntegrateError, Run, Snapshot, StepError, Trajectory,
};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::par::Execution;

/// Failures raised while evaluating a system.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("non-physical moments in cell {cell}: rho = {rho}, T = {temperature}")]
    NonPhysicalMoments {
        cell: usize,
        rho: f64,
        temperature: f64,
    },
    #[error("state has length {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
}

/// Failures of a single implicit stage solve.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("Newton did not converge in block {block} after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        block: usize,
        iterations: usize,
        residual: f64,
    },
    #[error("singular Newton matrix in block {block} at iteration {iteration}")]
    SingularJacobian { block: usize, iteration: usize },
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Conservation / equilibrium structure of a relaxation-type stiff operator
/// `G(u) = Q(u) / eps`, stated per block.
///
/// Implementors promise `moments(Q(u)) = 0`, `moments(equilibrium(w)) = w`
/// and `Q'(u) Q(u) = -rate(moments(u)) Q(u)`.
pub trait RelaxationStructure: Sync {
    fn n_moments(&self) -> usize;

    /// The linear moment map applied to one block.
    fn moments(&self, block: &[f64], out: &mut [f64]);

    fn equilibrium(&self, block: usize, omega: &[f64], out: &mut [f64]) -> Result<(), SystemError>;

    fn rate(&self, omega: &[f64]) -> f64;

    fn eps(&self, block: usize) -> f64;

    /// Solves `v = u_e + beta * Q(v)` in closed form, if the model admits one.
    /// Returns `None` when no closed form is available.
    fn solve_backward_relaxation(
        &self,
        _block: usize,
        _u_e: &[f64],
        _beta: f64,
        _out: &mut [f64],
    ) -> Option<Result<(), SystemError>> {
        None
    }
}

/// An ODE system `u' = F(u) + G(u)` with access to `Gdot = G'(u) G(u)`.
pub trait TwoDerivativeSystem: Sync {
    fn dim(&self) -> usize;

    /// Length of the independent blocks of the stiff part. Must divide `dim`.
    fn block_size(&self) -> usize {
        self.dim()
    }

    /// Whether `F` is nonzero.
    fn has_explicit(&self) -> bool {
        false
    }

    fn eval_f(&self, _u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        out.fill(0.0);
        Ok(())
    }

    fn eval_g_block(&self, block: usize, u: &[f64], out: &mut [f64]) -> Result<(), SystemError>;

    fn eval_gdot_block(&self, block: usize, u: &[f64], out: &mut [f64]) -> Result<(), SystemError>;

    fn jacobian_g_block(&self, _block: usize, _u: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    fn jacobian_gdot_block(&self, _block: usize, _u: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    fn relaxation(&self) -> Option<&dyn RelaxationStructure> {
        None
    }

    fn n_blocks(&self) -> usize {
        self.dim() / self.block_size()
    }

    fn eval_g(&self, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        check_len(self.dim(), u.len())?;
        let b = self.block_size();
        for (k, (ub, ob)) in u.chunks(b).zip(out.chunks_mut(b)).enumerate() {
            self.eval_g_block(k, ub, ob)?;
        }
        Ok(())
    }

    fn eval_gdot(&self, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        check_len(self.dim(), u.len())?;
        let b = self.block_size();
        for (k, (ub, ob)) in u.chunks(b).zip(out.chunks_mut(b)).enumerate() {
            self.eval_gdot_block(k, ub, ob)?;
        }
        Ok(())
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<(), SystemError> {
    if expected == found {
        Ok(())
    } else {
        Err(SystemError::Dimension { expected, found })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    /// Use system-supplied Jacobians, falling back to finite differences.
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastPath {
    /// Use the closed-form relaxation solve whenever the system offers one.
    Auto,
    ForceNewton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepperConfig {
    pub newton_abs_tol: f64,
    pub newton_rel_tol: f64,
    pub newton_max_iters: usize,
    pub jacobian_mode: JacobianMode,
    pub fast_path: FastPath,
    pub execution: Execution,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            newton_abs_tol: 1e-12,
            newton_rel_tol: 1e-10,
            newton_max_iters: 50,
            jacobian_mode: JacobianMode::Analytic,
            fast_path: FastPath::Auto,
            execution: Execution::default(),
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<(), IntegrateError> {
        let ok = self.newton_abs_tol > 0.0
            && self.newton_rel_tol > 0.0
            && self.newton_abs_tol.is_finite()
            && self.newton_rel_tol.is_finite()
            && self.newton_max_iters >= 1;
        if ok {
            Ok(())
        } else {
            Err(IntegrateError::InvalidArgument(format!(
                "tolerances must be positive and max iterations at least 1: {self:?}"
            )))
        }
    }
}

/// Per-stage diagnostics of one step. Block-level values are aggregated:
/// iterations and residuals take the maximum over blocks, the fast-path flag
/// is set only if every block used it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    pub stage_newton_iters: Vec<usize>,
    pub residual_norms: Vec<f64>,
    pub used_fast_path: Vec<bool>,
    /// Smallest component of each explicit stage predictor.
    pub predictor_min: Vec<f64>,
    /// Smallest component of each solved stage value.
    pub stage_min: Vec<f64>,
}

impl StepStats {
    pub fn stages_completed(&self) -> usize {
        self.stage_min.len()
    }
}

/// Observer invoked by [`integrate`].
pub trait Monitor {
    /// Called once with the initial state.
    fn start(&mut self, _t0: f64, _u0: &[f64]) {}

    /// Called after every completed step; `step` counts from 1.
    fn observe(&mut self, step: usize, t: f64, u: &[f64], stats: &StepStats);

    /// Called when step `step` fails, with the stages completed before the
    /// failure.
    fn observe_failure(&mut self, _step: usize, _stats: &StepStats, _error: &StepError) {}
}
