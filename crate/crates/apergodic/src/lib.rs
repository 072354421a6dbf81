//! Experiment harness on top of [`apergodic_core`]: JSON configs, threaded
//! Monte Carlo drivers, CSV/JSON-lines artifacts and run manifests.
//!
//! ```no_run
//! use apergodic::{load_config, run_to_dir, RunOptions};
//!
//! let cfg = load_config("ergodic.json".as_ref()).unwrap();
//! run_to_dir(&cfg, "out".as_ref(), &RunOptions::default()).unwrap();
//! ```

use std::path::Path;

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod parallel;

pub use apergodic_core;
pub use config::ExperimentConfig;
pub use error::{Result, RunError};
pub use output::{Artifact, Artifacts};

/// Run-time overrides that are not part of the config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// Directory of expected CSV artifacts to compare against.
    pub golden: Option<std::path::PathBuf>,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    ExperimentConfig::from_json(&text)
}

/// Apply overrides and run, returning artifacts plus the manifest.
pub fn execute(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Artifacts> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let mut artifacts = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(|| experiments::execute(&cfg))?,
        None => experiments::execute(&cfg)?,
    };
    if let Some(dir) = &opts.golden {
        output::check_golden(&artifacts, dir)?;
    }
    let manifest = output::manifest(&cfg.to_json(), cfg.seed, cfg.experiment.kind(), &artifacts);
    artifacts.push("manifest.jsonl", manifest);
    Ok(artifacts)
}

/// Run and write every artifact into `dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path, opts: &RunOptions) -> Result<Artifacts> {
    let artifacts = execute(cfg, opts)?;
    for a in &artifacts.files {
        output::write_file(&dir.join(&a.name), &a.bytes)?;
    }
    Ok(artifacts)
}

/// Run and write the primary artifact to `path`; the others go next to it
/// as `<stem>.<name>`.
pub fn run_to_file(cfg: &ExperimentConfig, path: &Path, opts: &RunOptions) -> Result<Artifacts> {
    let artifacts = execute(cfg, opts)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    let dir = path.parent().unwrap_or(Path::new(""));
    for (i, a) in artifacts.files.iter().enumerate() {
        let target = if i == 0 { path.to_path_buf() } else { dir.join(format!("{stem}.{}", a.name)) };
        output::write_file(&target, &a.bytes)?;
    }
    Ok(artifacts)
}
