//! Content-addressed run directories and their manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use scopal::config::{sha256_hex, ExperimentConfig};
use scopal::{Error, Result};
use serde::Serialize;

/// Hashes of everything a run reads besides the config.
#[derive(Debug, Default)]
pub struct Inputs {
    files: BTreeMap<String, String>,
}

impl Inputs {
    pub fn add(&mut self, name: &str, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::InvalidParameter(format!("cannot read {name} {}: {e}", path.display())))?;
        self.files.insert(name.to_string(), sha256_hex(&bytes));
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    run_id: &'a str,
    config_hash: String,
    seed: u64,
    interact_seed: u64,
    eval_seed: u64,
    inputs: &'a BTreeMap<String, String>,
    artifacts: BTreeMap<String, String>,
    crate_version: &'static str,
}

/// A run directory under construction. Files are written to a staging
/// directory that is renamed into place by [`RunDir::finish`].
pub struct RunDir {
    subcommand: &'static str,
    run_id: String,
    staging: PathBuf,
    target: PathBuf,
    config: ExperimentConfig,
    inputs: Inputs,
}

impl RunDir {
    /// The run id hashes the subcommand, the config (without the output
    /// root) and the input files. An existing directory with that id is
    /// never touched.
    pub fn create(subcommand: &'static str, config: &ExperimentConfig, inputs: Inputs) -> Result<Self> {
        let canonical = ExperimentConfig {
            out: PathBuf::new(),
            ..config.clone()
        };
        let mut key = format!("{subcommand}\n{}", canonical.to_toml()?);
        for (name, hash) in &inputs.files {
            key.push_str(&format!("\n{name}={hash}"));
        }
        let run_id = format!("{subcommand}-{}", &sha256_hex(key.as_bytes())[..16]);
        let target = config.out.join(&run_id);
        if target.exists() {
            return Err(Error::InvalidParameter(format!(
                "run directory {} already exists; runs are never overwritten",
                target.display()
            )));
        }
        let staging = config.out.join(format!(".{run_id}.partial"));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir_all(&staging)?;
        fs::write(staging.join("config.toml"), canonical.to_toml()?)?;
        Ok(Self {
            subcommand,
            run_id,
            staging,
            target,
            config: canonical,
            inputs,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.staging.join(name)
    }

    /// Writes `manifest.json` and moves the directory into place.
    pub fn finish(self) -> Result<PathBuf> {
        let mut artifacts = BTreeMap::new();
        for entry in fs::read_dir(&self.staging)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            artifacts.insert(name, sha256_hex(&fs::read(entry.path())?));
        }
        let manifest = Manifest {
            subcommand: self.subcommand,
            run_id: &self.run_id,
            config_hash: self.config.hash()?,
            seed: self.config.seed,
            interact_seed: self.config.seed,
            eval_seed: self.config.eval_seed(),
            inputs: &self.inputs.files,
            artifacts,
            crate_version: env!("CARGO_PKG_VERSION"),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.staging.join("manifest.json"), text)?;
        fs::rename(&self.staging, &self.target)?;
        Ok(self.target)
    }
}
