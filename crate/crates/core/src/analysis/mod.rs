//! Convergence studies, trajectory monitors, limit checks and the
//! mixed-regime comparison.

mod ap;
mod convergence;
mod mixed;
mod monitors;

pub use ap::{ap_limit_check, explicit_limit_step, ApDeviation, ApReport};
pub use convergence::{
    fit_order, refine_reference, reference_solution, run_convergence, run_grid_study, temporal_reference, ConvergenceStudy,
    OrderWindow, Reference, Refinement, REFERENCE_FALLBACK_TOLERANCE, STALL_LEVEL, REFERENCE_MAX_HALVINGS, REFERENCE_NEWTON_TOL, REFERENCE_START_STEPS, REFERENCE_TOLERANCE, ROUNDOFF_GUARD,
};
pub use mixed::{mixed_regime, moment_profiles, MethodOutcome, MixedRegimeConfig, MixedRegimeReport, MomentProfiles};
pub use monitors::{ConservationMonitor, EntropyMonitor, MonitorKind, MonitorReport, PositivityMonitor, Violation};

use thiserror::Error;

use crate::integrator::{IntegrateError, SystemError};
use crate::problems::ProblemError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("reference did not converge after {halvings} halvings (last difference {difference:e})")]
    NoConvergence { halvings: usize, difference: f64 },
    #[error("reference solution failed: {0}")]
    Reference(String),
    #[error("method does not satisfy the limit hypothesis: {0}")]
    Hypothesis(String),
}
