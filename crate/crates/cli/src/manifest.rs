use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use sha2::{Digest, Sha256};
use ssp_mdrk::problems::ProblemConfig;

use crate::error::CliError;

/// Provenance written at the top of every artifact.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub config_path: Option<String>,
    pub config_sha256: Option<String>,
    pub method: Option<String>,
    pub problem: Option<String>,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub status: Result<(), String>,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(subcommand: &'static str, seed: Option<u64>) -> Self {
        Self {
            subcommand,
            config_path: None,
            config_sha256: None,
            method: None,
            problem: None,
            seed,
            outputs: Vec::new(),
            status: Ok(()),
            wall_time_s: 0.0,
        }
    }

    pub fn with_config(mut self, path: &Path, bytes: &[u8]) -> Self {
        self.config_path = Some(path.display().to_string());
        self.config_sha256 = Some(sha256_hex(bytes));
        self
    }

    /// Header lines, each starting with `# `. The final line holds the wall
    /// time, the only entry that differs between identical runs.
    pub fn header(&self) -> String {
        let opt = |v: &Option<String>| v.clone().unwrap_or_else(|| "-".into());
        let mut s = String::new();
        let _ = writeln!(s, "# ssp-mdrk {}", ssp_mdrk::VERSION);
        let _ = writeln!(s, "# subcommand: {}", self.subcommand);
        let _ = writeln!(s, "# config: {}", opt(&self.config_path));
        let _ = writeln!(s, "# config_sha256: {}", opt(&self.config_sha256));
        let _ = writeln!(s, "# method: {}", opt(&self.method));
        let _ = writeln!(s, "# problem: {}", opt(&self.problem));
        let seed = self.seed.map_or_else(|| "-".to_string(), |v| v.to_string());
        let _ = writeln!(s, "# seed: {seed}");
        let _ = writeln!(s, "# outputs: {}", self.outputs.join(" "));
        match &self.status {
            Ok(()) => {
                let _ = writeln!(s, "# status: ok");
            }
            Err(reason) => {
                let _ = writeln!(s, "# status: FAILED: {}", reason.replace('\n', " "));
            }
        }
        let _ = writeln!(s, "# wall_time_s: {:.3}", self.wall_time_s);
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// `key=value` pairs of the problem section in key order.
pub fn problem_line(p: &ProblemConfig) -> String {
    match toml::Table::try_from(p) {
        Ok(table) => table
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" "),
        Err(_) => p.name.clone(),
    }
}

/// Artifacts of one subcommand, written together once the work is done so
/// that every file carries the final status.
pub struct Artifacts {
    pub manifest: RunManifest,
    files: Vec<(String, String)>,
    started: Instant,
}

impl Artifacts {
    pub fn new(manifest: RunManifest) -> Self {
        Self {
            manifest,
            files: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, body: String) {
        self.files.push((name.into(), body));
    }

    pub fn fail(&mut self, reason: impl Into<String>) {
        self.manifest.status = Err(reason.into());
    }

    pub fn write(mut self, out: &Path) -> Result<Vec<std::path::PathBuf>, CliError> {
        std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        self.manifest.outputs = self.files.iter().map(|(n, _)| n.clone()).collect();
        self.manifest.outputs.push("manifest.txt".into());
        self.manifest.wall_time_s = self.started.elapsed().as_secs_f64();
        let header = self.manifest.header();
        let mut written = Vec::new();
        for (name, body) in self.files.iter().chain(std::iter::once(&("manifest.txt".to_string(), String::new()))) {
            let path = out.join(name);
            std::fs::write(&path, format!("{header}{body}")).map_err(|e| CliError::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}
