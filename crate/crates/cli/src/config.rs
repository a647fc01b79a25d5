use std::path::{Path, PathBuf};

use serde::Deserialize;
use ssp_mdrk::analysis::{MixedRegimeConfig, OrderWindow};
use ssp_mdrk::integrator::{FastPath, JacobianMode};
use ssp_mdrk::problems::{Problem, ProblemConfig};
use ssp_mdrk::tableau::{lookup_builtin, parse_tableau_toml, Method};
use ssp_mdrk::{Execution, StepperConfig};

use crate::error::CliError;

/// Top-level layout of an experiment file. Each subcommand reads the
/// sections it needs and rejects configs that lack them.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub problem: Option<ProblemConfig>,
    pub method: Option<MethodRef>,
    pub run: Option<RunSection>,
    pub solver: Option<SolverSection>,
    pub convergence: Option<ConvergenceSection>,
    pub ap: Option<ApSection>,
    pub mixed: Option<MixedSection>,
}

/// A built-in method by name, or a tableau file relative to the config.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodRef {
    pub name: Option<String>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub dt: Option<f64>,
    pub n_steps: Option<usize>,
    pub cfl: Option<f64>,
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianChoice {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FastPathChoice {
    Auto,
    ForceNewton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionChoice {
    Sequential,
    Parallel,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub newton_abs_tol: Option<f64>,
    pub newton_rel_tol: Option<f64>,
    pub newton_max_iters: Option<usize>,
    pub jacobian: Option<JacobianChoice>,
    pub fast_path: Option<FastPathChoice>,
    pub execution: Option<ExecutionChoice>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub smallest: Option<usize>,
    pub dt_min: Option<f64>,
    pub dt_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    pub eps: Option<Vec<f64>>,
    pub dt: Option<Vec<f64>>,
    pub nx: Option<Vec<usize>>,
    pub cfl: Option<f64>,
    pub window: Option<WindowSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApSection {
    pub dt: f64,
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedSection {
    pub nx: Option<usize>,
    pub nv: Option<usize>,
    pub vmax: Option<f64>,
    pub eps0: Option<f64>,
    pub t_end: Option<f64>,
    pub imex_cfl: Option<f64>,
    pub reference_safety: Option<f64>,
    pub methods: Option<Vec<String>>,
}

/// A parsed config together with its raw bytes, which feed the manifest hash.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
    pub file: ConfigFile,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: format!("not valid UTF-8: {e}"),
        })?;
        let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(Self {
            path: path.to_path_buf(),
            bytes,
            file,
        })
    }

    fn invalid(&self, message: impl Into<String>) -> CliError {
        CliError::Config {
            path: self.path.clone(),
            message: message.into(),
        }
    }

    pub fn problem(&self) -> Result<&ProblemConfig, CliError> {
        self.file
            .problem
            .as_ref()
            .ok_or_else(|| self.invalid("missing [problem] section"))
    }

    pub fn method(&self) -> Result<Method, CliError> {
        let r = self
            .file
            .method
            .as_ref()
            .ok_or_else(|| self.invalid("missing [method] section"))?;
        match (&r.name, &r.file) {
            (Some(name), None) => lookup_builtin(name)
                .map(|b| b.method)
                .ok_or_else(|| self.invalid(format!("unknown method '{name}'"))),
            (None, Some(file)) => {
                let path = self.path.parent().unwrap_or(Path::new(".")).join(file);
                load_tableau(&path).map(Method::ShuOsher)
            }
            _ => Err(self.invalid("[method] needs exactly one of 'name' or 'file'")),
        }
    }

    pub fn stepper(&self, exec: Execution) -> Result<StepperConfig, CliError> {
        let mut cfg = StepperConfig {
            execution: exec,
            ..StepperConfig::default()
        };
        if let Some(s) = &self.file.solver {
            if let Some(v) = s.newton_abs_tol {
                cfg.newton_abs_tol = v;
            }
            if let Some(v) = s.newton_rel_tol {
                cfg.newton_rel_tol = v;
            }
            if let Some(v) = s.newton_max_iters {
                cfg.newton_max_iters = v;
            }
            if let Some(j) = s.jacobian {
                cfg.jacobian_mode = match j {
                    JacobianChoice::Analytic => JacobianMode::Analytic,
                    JacobianChoice::FiniteDifference => JacobianMode::FiniteDifference,
                };
            }
            if let Some(f) = s.fast_path {
                cfg.fast_path = match f {
                    FastPathChoice::Auto => FastPath::Auto,
                    FastPathChoice::ForceNewton => FastPath::ForceNewton,
                };
            }
            if let Some(e) = s.execution {
                cfg.execution = match e {
                    ExecutionChoice::Sequential => Execution::Sequential,
                    ExecutionChoice::Parallel => exec,
                };
            }
        }
        cfg.validate().map_err(|e| self.invalid(e.to_string()))?;
        Ok(cfg)
    }

    /// Number of steps for `run`: `dt` wins, then `n_steps`, then a CFL step
    /// from `[run]` or `[problem]`.
    pub fn run_steps(&self, problem: &Problem, t_end: f64) -> Result<usize, CliError> {
        let run = self.file.run.clone().unwrap_or_default();
        let cfl = run.cfl.or(self.problem()?.cfl);
        let n = if let Some(dt) = run.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(self.invalid(format!("dt = {dt} must be positive")));
            }
            (t_end / dt).round() as usize
        } else if let Some(n) = run.n_steps {
            n
        } else if let Some(cfl) = cfl {
            if !(cfl > 0.0 && cfl.is_finite()) {
                return Err(self.invalid(format!("cfl = {cfl} must be positive")));
            }
            let dt = problem
                .cfl_dt(cfl)
                .ok_or_else(|| self.invalid(format!("cfl given for '{}', which has no grid", problem.name())))?;
            (t_end / dt).ceil() as usize
        } else {
            return Err(self.invalid("[run] needs one of dt, n_steps or cfl"));
        };
        if n == 0 {
            return Err(self.invalid("the step size exceeds the final time"));
        }
        Ok(n)
    }

    pub fn convergence(&self) -> Result<&ConvergenceSection, CliError> {
        self.file
            .convergence
            .as_ref()
            .ok_or_else(|| self.invalid("missing [convergence] section"))
    }

    pub fn window(&self) -> Result<OrderWindow, CliError> {
        let Some(w) = self.convergence()?.window.as_ref() else {
            return Ok(OrderWindow::default());
        };
        match (w.smallest, w.dt_min, w.dt_max) {
            (Some(k), None, None) if k >= 2 => Ok(OrderWindow::Smallest(k)),
            (None, Some(dt_min), Some(dt_max)) if dt_min <= dt_max => Ok(OrderWindow::Range { dt_min, dt_max }),
            (None, None, None) => Ok(OrderWindow::default()),
            _ => Err(self.invalid("[convergence.window] needs smallest >= 2, or dt_min <= dt_max")),
        }
    }

    pub fn ap(&self) -> Result<&ApSection, CliError> {
        self.file.ap.as_ref().ok_or_else(|| self.invalid("missing [ap] section"))
    }

    pub fn mixed(&self) -> MixedRegimeConfig {
        let d = MixedRegimeConfig::default();
        let m = self.file.mixed.clone().unwrap_or_default();
        MixedRegimeConfig {
            nx: m.nx.unwrap_or(d.nx),
            nv: m.nv.unwrap_or(d.nv),
            vmax: m.vmax.unwrap_or(d.vmax),
            eps0: m.eps0.unwrap_or(d.eps0),
            t_end: m.t_end.unwrap_or(d.t_end),
            imex_cfl: m.imex_cfl.unwrap_or(d.imex_cfl),
            reference_safety: m.reference_safety.unwrap_or(d.reference_safety),
            methods: m.methods.unwrap_or(d.methods),
        }
    }
}

pub fn load_tableau(path: &Path) -> Result<ssp_mdrk::ShuOsherTableau, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_tableau_toml(&text).map_err(|source| CliError::Tableau {
        path: path.to_path_buf(),
        source,
    })
}
