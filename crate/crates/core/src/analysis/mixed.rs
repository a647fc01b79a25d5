use std::fmt::Write as _;

use super::monitors::{MonitorReport, PositivityMonitor};
use super::AnalysisError;
use crate::integrator::{explicit_ssp_rk2_step, integrate, Run, StepperConfig};
use crate::par::{map_indices, Execution};
use crate::problems::{Bgk1d, Problem, ProblemConfig, Transport, DEFAULT_EPS0, DEFAULT_NV, DEFAULT_NX, DEFAULT_VMAX};
use crate::tableau::{lookup_builtin, Method};

/// Setup of the mixed-regime BGK comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedRegimeConfig {
    pub nx: usize,
    pub nv: usize,
    pub vmax: f64,
    pub eps0: f64,
    pub t_end: f64,
    /// IMEX step is `imex_cfl * dx / vmax`.
    pub imex_cfl: f64,
    /// Reference step is `reference_safety * min(min eps, dx / vmax)`.
    pub reference_safety: f64,
    pub methods: Vec<String>,
}

impl Default for MixedRegimeConfig {
    fn default() -> Self {
        Self {
            nx: DEFAULT_NX,
            nv: DEFAULT_NV,
            vmax: DEFAULT_VMAX,
            eps0: DEFAULT_EPS0,
            t_end: 0.5,
            imex_cfl: 1.0 / 24.0,
            reference_safety: 0.5,
            methods: vec!["ssp-imex-mdrk-2".into(), "ssp-imex-mdrk-3".into()],
        }
    }
}

impl MixedRegimeConfig {
    pub fn problem(&self) -> ProblemConfig {
        ProblemConfig {
            eps_field: Some("mixed".into()),
            eps0: Some(self.eps0),
            nx: Some(self.nx),
            nv: Some(self.nv),
            vmax: Some(self.vmax),
            transport: Some(Transport::Upwind),
            t_end: Some(self.t_end),
            ..ProblemConfig::named("bgk")
        }
    }
}

/// Density, velocity and temperature per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentProfiles {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub temperature: Vec<f64>,
}

impl MomentProfiles {
    /// `sqrt(dx * sum_k (drho^2 + du^2 + dT^2))`.
    pub fn distance(&self, other: &MomentProfiles, dx: f64) -> f64 {
        let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        (dx * (sq(&self.rho, &other.rho) + sq(&self.u, &other.u) + sq(&self.temperature, &other.temperature))).sqrt()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,rho,u,T\n");
        for k in 0..self.x.len() {
            let _ = writeln!(
                s,
                "{:.12e},{:.12e},{:.12e},{:.12e}",
                self.x[k], self.rho[k], self.u[k], self.temperature[k]
            );
        }
        s
    }
}

pub fn moment_profiles(bgk: &Bgk1d, f: &[f64]) -> Result<MomentProfiles, AnalysisError> {
    let macros = bgk.macroscopic(f)?;
    Ok(MomentProfiles {
        x: bgk.grid().centers(),
        rho: macros.iter().map(|m| m.rho).collect(),
        u: macros.iter().map(|m| m.u).collect(),
        temperature: macros.iter().map(|m| m.temperature).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub method: String,
    pub dt: f64,
    pub n_steps: usize,
    pub positivity: MonitorReport,
    /// `None` when the run failed.
    pub profiles: Option<MomentProfiles>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedRegimeReport {
    pub dx: f64,
    pub outcomes: Vec<MethodOutcome>,
    pub reference: MomentProfiles,
    pub reference_dt: f64,
    pub reference_steps: usize,
    pub reference_min: f64,
}

impl MixedRegimeReport {
    /// Discrete L2 distance between the profiles of two methods.
    pub fn method_distance(&self, a: usize, b: usize) -> Option<f64> {
        let pa = self.outcomes.get(a)?.profiles.as_ref()?;
        let pb = self.outcomes.get(b)?.profiles.as_ref()?;
        Some(pa.distance(pb, self.dx))
    }

    pub fn reference_distance(&self, a: usize) -> Option<f64> {
        Some(self.outcomes.get(a)?.profiles.as_ref()?.distance(&self.reference, self.dx))
    }
}

/// Runs each IMEX method with a positivity monitor and an explicit SSP-RK2
/// reference whose step resolves the smallest relaxation time.
pub fn mixed_regime(
    setup: &MixedRegimeConfig,
    cfg: &StepperConfig,
    exec: Execution,
) -> Result<MixedRegimeReport, AnalysisError> {
    let methods: Vec<Method> = setup
        .methods
        .iter()
        .map(|name| {
            lookup_builtin(name)
                .map(|b| b.method)
                .ok_or_else(|| AnalysisError::InvalidArgument(format!("unknown method '{name}'")))
        })
        .collect::<Result<_, _>>()?;
    let bgk = match setup.problem().build()? {
        Problem::Bgk(b) => b,
        _ => unreachable!("mixed regime is a BGK setup"),
    };
    let dx = bgk.grid().dx();
    let vmax = bgk.vgrid().vmax();
    let t_end = setup.t_end;
    let n_imex = ((t_end / (setup.imex_cfl * dx / vmax)).ceil() as usize).max(1);
    let eps_min = bgk.eps_cells().iter().copied().fold(f64::INFINITY, f64::min);
    let n_ref = ((t_end / (setup.reference_safety * eps_min.min(dx / vmax))).ceil() as usize).max(1);
    let u0 = bgk.initial_state();

    // Index 0 is the reference; the rest are the IMEX methods.
    let runs = map_indices(exec, methods.len() + 1, |idx| {
        if idx == 0 {
            let dt = t_end / n_ref as f64;
            let mut f = u0.clone();
            let mut fmin = f64::INFINITY;
            for _ in 0..n_ref {
                f = explicit_ssp_rk2_step(&bgk, &f, dt)?;
                fmin = fmin.min(f.iter().copied().fold(f64::INFINITY, f64::min));
            }
            return Ok::<_, AnalysisError>((None, Some(moment_profiles(&bgk, &f)?), fmin));
        }
        let method = &methods[idx - 1];
        let mut monitor = PositivityMonitor::kinetic(&bgk);
        let result = integrate(&bgk, method, &u0, &Run::new(0.0, t_end, n_imex), cfg, &mut [&mut monitor]);
        let (profiles, failure) = match result {
            Ok(traj) => match moment_profiles(&bgk, &traj.final_state) {
                Ok(p) => (Some(p), None),
                Err(e) => (None, Some(e.to_string())),
            },
            Err(e) => (None, Some(e.to_string())),
        };
        let outcome = MethodOutcome {
            method: method.name().to_string(),
            dt: t_end / n_imex as f64,
            n_steps: n_imex,
            positivity: monitor.into_report(),
            profiles,
            failure,
        };
        Ok((Some(outcome), None, f64::NAN))
    });
    let mut outcomes = Vec::with_capacity(methods.len());
    let mut reference = None;
    let mut reference_min = f64::NAN;
    for run in runs {
        match run? {
            (Some(o), _, _) => outcomes.push(o),
            (None, Some(p), fmin) => {
                reference = Some(p);
                reference_min = fmin;
            }
            (None, None, _) => unreachable!(),
        }
    }
    Ok(MixedRegimeReport {
        dx,
        outcomes,
        reference: reference.expect("reference run is index 0"),
        reference_dt: t_end / n_ref as f64,
        reference_steps: n_ref,
        reference_min,
    })
}
