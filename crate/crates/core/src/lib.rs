//! Unconditionally strong-stability-preserving implicit two-derivative
//! Runge-Kutta methods and SSP implicit-explicit multi-derivative Runge-Kutta
//! methods, together with the kinetic and relaxation test problems they are
//! designed for.
//!
//! The crate is organised as
//!
//! * [`tableau`]: coefficient sets in Shu-Osher and Butcher form, conversion,
//!   SSP sign validation and order-condition residuals;
//! * [`integrator`]: the stage solver (Newton or closed-form relaxation) and
//!   the fixed-step driver;
//! * [`problems`]: scalar ODE, ODE relaxation model, hyperbolic relaxation
//!   system, Broadwell model and 1D BGK equation;
//! * [`analysis`]: convergence studies, monitors, asymptotic-limit checks and
//!   reference solutions;
//! * [`par`]: data-parallel helpers with a sequential fallback.
//!
//! Per-cell implicit solves and study sweeps run on rayon when the `parallel`
//! feature is enabled (the default).

pub mod analysis;
pub mod integrator;
pub mod par;
pub mod problems;
pub mod tableau;

pub use integrator::{
    integrate, solve_stage, step, Monitor, RelaxationStructure, StepStats, StepperConfig,
    SystemError, TwoDerivativeSystem,
};
pub use par::Execution;

/// Crate version, recorded in output provenance headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use tableau::{
    builtin_methods, lookup_builtin, ButcherTableau, Method, MethodKind, ShuOsherTableau,
};
