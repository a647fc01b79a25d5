//! Test problems as [`TwoDerivativeSystem`]s.
//!
//! Grid problems store their state cell-major and declare one implicit
//! block per cell; transport is the explicit operator `F` and collisions
//! the stiff operator `G`.

mod bgk;
mod broadwell;
mod grid;
mod hyperbolic;
mod ode_relaxation;
mod scalar;
mod weno;

pub use bgk::{Bgk1d, Macroscopic, MOMENT_RESOLUTION};
pub use broadwell::{Broadwell, SPEEDS as BROADWELL_SPEEDS};
pub use grid::{advect, advect_component, EpsField, SpatialGrid, Transport, VelocityGrid};
pub use hyperbolic::{HyperbolicRelaxation, RelaxationFlux};
pub use ode_relaxation::OdeRelaxation;
pub use scalar::ScalarDecay;
pub use weno::{weno5_flux, weno5_reconstruct, weno5_weights, Wind, LINEAR_WEIGHTS, WENO_EPS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::TwoDerivativeSystem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("unknown problem '{0}' (expected scalar_decay, ode_relaxation, hyperbolic_relaxation, broadwell or bgk)")]
    UnknownProblem(String),
    #[error("problem '{problem}' requires '{key}'")]
    MissingParameter { problem: String, key: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("velocity grid does not resolve the unit Maxwellian (moment error {error:e})")]
    UnresolvedVelocityGrid { error: f64 },
}

/// How the distance between two states is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorNorm {
    /// Sum of component absolute differences.
    SumAbs,
    /// `sqrt(dx * sum |e|^2)`.
    DiscreteL2 { dx: f64 },
    /// `sqrt(dx * dv * sum |e|^2)` over space and velocity.
    DiscreteL2Xv { dx: f64, dv: f64 },
}

impl ErrorNorm {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len(), "states differ in length");
        let sq = || a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        match *self {
            ErrorNorm::SumAbs => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            ErrorNorm::DiscreteL2 { dx } => (dx * sq()).sqrt(),
            ErrorNorm::DiscreteL2Xv { dx, dv } => (dx * dv * sq()).sqrt(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorNorm::SumAbs => "sum-abs",
            ErrorNorm::DiscreteL2 { .. } => "discrete-L2",
            ErrorNorm::DiscreteL2Xv { .. } => "discrete-L2-xv",
        }
    }
}

/// A constructed test problem.
#[derive(Debug, Clone)]
pub enum Problem {
    ScalarDecay(ScalarDecay),
    OdeRelaxation(OdeRelaxation),
    HyperbolicRelaxation(HyperbolicRelaxation),
    Broadwell(Broadwell),
    Bgk(Bgk1d),
}

impl Problem {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::ScalarDecay(_) => "scalar_decay",
            Problem::OdeRelaxation(_) => "ode_relaxation",
            Problem::HyperbolicRelaxation(_) => "hyperbolic_relaxation",
            Problem::Broadwell(_) => "broadwell",
            Problem::Bgk(_) => "bgk",
        }
    }

    pub fn system(&self) -> &dyn TwoDerivativeSystem {
        match self {
            Problem::ScalarDecay(s) => s,
            Problem::OdeRelaxation(s) => s,
            Problem::HyperbolicRelaxation(s) => s,
            Problem::Broadwell(s) => s,
            Problem::Bgk(s) => s,
        }
    }

    pub fn initial_state(&self) -> Vec<f64> {
        match self {
            Problem::ScalarDecay(_) => vec![10.0],
            Problem::OdeRelaxation(_) => OdeRelaxation::initial_state(),
            Problem::HyperbolicRelaxation(s) => s.initial_state(),
            Problem::Broadwell(s) => s.initial_state(),
            Problem::Bgk(s) => s.initial_state(),
        }
    }

    pub fn grid(&self) -> Option<&SpatialGrid> {
        match self {
            Problem::ScalarDecay(_) | Problem::OdeRelaxation(_) => None,
            Problem::HyperbolicRelaxation(s) => Some(s.grid()),
            Problem::Broadwell(s) => Some(s.grid()),
            Problem::Bgk(s) => Some(s.grid()),
        }
    }

    /// Largest transport speed, for grid problems.
    pub fn max_speed(&self) -> Option<f64> {
        match self {
            Problem::ScalarDecay(_) | Problem::OdeRelaxation(_) => None,
            Problem::HyperbolicRelaxation(_) | Problem::Broadwell(_) => Some(1.0),
            Problem::Bgk(s) => Some(s.vgrid().vmax()),
        }
    }

    /// Time step `cfl * dx / max_speed` for grid problems.
    pub fn cfl_dt(&self, cfl: f64) -> Option<f64> {
        Some(cfl * self.grid()?.dx() / self.max_speed()?)
    }

    pub fn error_norm(&self) -> ErrorNorm {
        match self {
            Problem::ScalarDecay(_) | Problem::OdeRelaxation(_) => ErrorNorm::SumAbs,
            Problem::HyperbolicRelaxation(s) => ErrorNorm::DiscreteL2 { dx: s.grid().dx() },
            Problem::Broadwell(s) => ErrorNorm::DiscreteL2 { dx: s.grid().dx() },
            Problem::Bgk(s) => ErrorNorm::DiscreteL2Xv {
                dx: s.grid().dx(),
                dv: s.vgrid().weight(),
            },
        }
    }
}

/// The `[problem]` section of a run configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// `"mixed"` selects the variable Knudsen profile (BGK only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nv: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vmax: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport: Option<Transport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<RelaxationFlux>,
}

pub const DEFAULT_NX: usize = 40;
pub const DEFAULT_NV: usize = 150;
pub const DEFAULT_VMAX: f64 = 15.0;
pub const DEFAULT_EPS0: f64 = 1e-5;

impl ProblemConfig {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Self::default()
        }
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self {
            eps: Some(eps),
            eps_field: None,
            ..self.clone()
        }
    }

    pub fn is_mixed(&self) -> bool {
        self.eps_field.as_deref() == Some("mixed")
    }

    /// Final time, defaulting to the standard setup of each problem.
    pub fn t_end(&self) -> f64 {
        self.t_end.unwrap_or(match self.name.as_str() {
            "scalar_decay" => 2.0,
            "ode_relaxation" => 1.0,
            "bgk" if self.is_mixed() => 0.5,
            _ => 0.1,
        })
    }

    fn eps_value(&self) -> Result<f64, ProblemError> {
        let eps = self.eps.ok_or_else(|| ProblemError::MissingParameter {
            problem: self.name.clone(),
            key: "eps",
        })?;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(ProblemError::InvalidParameter(format!("eps = {eps} must be positive")));
        }
        Ok(eps)
    }

    fn grid(&self) -> Result<SpatialGrid, ProblemError> {
        SpatialGrid::new(self.nx.unwrap_or(DEFAULT_NX), 0.0, 2.0)
    }

    pub fn build(&self) -> Result<Problem, ProblemError> {
        let transport = self.transport.unwrap_or_default();
        Ok(match self.name.as_str() {
            "scalar_decay" => Problem::ScalarDecay(ScalarDecay),
            "ode_relaxation" => Problem::OdeRelaxation(OdeRelaxation::new(self.eps_value()?)),
            "hyperbolic_relaxation" => Problem::HyperbolicRelaxation(HyperbolicRelaxation::new(
                self.eps_value()?,
                self.flux.unwrap_or(RelaxationFlux::Burgers),
                self.grid()?,
                transport,
            )),
            "broadwell" => Problem::Broadwell(Broadwell::new(self.eps_value()?, self.grid()?, transport)),
            "bgk" => {
                let eps = match self.eps_field.as_deref() {
                    Some("mixed") => EpsField::Mixed {
                        eps0: self.eps0.unwrap_or(DEFAULT_EPS0),
                    },
                    Some(other) => {
                        return Err(ProblemError::InvalidParameter(format!(
                            "eps_field = '{other}' (only 'mixed' is known)"
                        )))
                    }
                    None => EpsField::Constant(self.eps_value()?),
                };
                let vgrid = VelocityGrid::new(self.nv.unwrap_or(DEFAULT_NV), self.vmax.unwrap_or(DEFAULT_VMAX))?;
                Problem::Bgk(Bgk1d::new(eps, self.grid()?, vgrid, transport)?)
            }
            other => return Err(ProblemError::UnknownProblem(other.to_string())),
        })
    }
}
