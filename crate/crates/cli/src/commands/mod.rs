mod ap;
mod convergence;
mod mixed;
mod run;
mod verify;

use std::path::{Path, PathBuf};

pub use ap::ap_check;
pub use convergence::convergence;
pub use mixed::mixed_regime;
pub use run::run;
pub use verify::verify_tableaus;

use ssp_mdrk::Execution;

use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::manifest::{Artifacts, RunManifest};

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub execution: Execution,
    pub seed: Option<u64>,
}

impl Context {
    fn load_config(&self, subcommand: &str) -> Result<LoadedConfig, CliError> {
        let path = self
            .config
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("{subcommand} requires --config PATH")))?;
        LoadedConfig::load(path)
    }

    fn artifacts(&self, subcommand: &'static str, config: &LoadedConfig) -> Artifacts {
        Artifacts::new(RunManifest::new(subcommand, self.seed).with_config(&config.path, &config.bytes))
    }

    fn out(&self) -> &Path {
        &self.out
    }
}

/// Writes the artifacts and turns a recorded failure into exit code 1.
fn finish(artifacts: Artifacts, out: &Path) -> Result<(), CliError> {
    let status = artifacts.manifest.status.clone();
    for path in artifacts.write(out)? {
        println!("wrote {}", path.display());
    }
    status.map_err(CliError::Numerical)
}
