//! Reading and writing instance, policy and report files.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use smp_core::imp::ImpInstance;
use smp_core::l0::RegressionData;
use smp_core::rl::{ImpEnv, Policy, RrEnv, DEFAULT_SUBSAMPLE};
use smp_core::Error;

use crate::config::Problem;

/// JSON files under `path`, sorted by name; a plain file is returned alone.
pub fn instance_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    let entries = std::fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    for entry in entries {
        let p = entry.map_err(|e| Error::io(path, e))?.path();
        if p.extension().is_some_and(|e| e == "json") {
            files.push(p);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::input(format!("no .json instance files in {}", path.display())).into());
    }
    Ok(files)
}

pub fn read_text(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn load_imp(path: &Path) -> Result<ImpInstance> {
    ImpInstance::from_json(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_rr(path: &Path) -> Result<RegressionData> {
    RegressionData::from_json(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// File stem used to name per-instance outputs.
pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into())
}

/// A trained policy together with what it was trained for.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyFile {
    pub problem: Problem,
    /// Largest order-up-to level the IMP action head covers.
    pub max_capacity: Option<u32>,
    /// Penalty the RR rewards were computed with.
    pub lambda: Option<f64>,
    pub policy: Policy,
}

impl PolicyFile {
    pub fn load(path: &Path) -> Result<Self> {
        let file: Self = serde_json::from_str(&read_text(path)?)
            .map_err(Error::from)
            .with_context(|| format!("parsing policy {}", path.display()))?;
        Ok(file)
    }

    fn expect(&self, problem: Problem) -> Result<()> {
        if self.problem != problem {
            return Err(Error::input(format!(
                "policy was trained for `{}` but the problem is `{problem}`",
                self.problem
            ))
            .into());
        }
        Ok(())
    }

    /// Environment over a single instance, checked against the network.
    pub fn imp_env(&self, instance: &ImpInstance) -> Result<ImpEnv> {
        self.expect(Problem::Imp)?;
        let cap = self
            .max_capacity
            .ok_or_else(|| Error::input("policy file lacks max_capacity"))?;
        let env = ImpEnv::with_capacity(vec![instance.clone()], DEFAULT_SUBSAMPLE, cap)?;
        self.policy.check_env(&env)?;
        Ok(env)
    }

    /// Environment over a single data set; rewards use the policy's penalty
    /// unless `lambda` overrides it.
    pub fn rr_env(&self, data: &RegressionData, lambda: f64) -> Result<RrEnv> {
        self.expect(Problem::Rr)?;
        let env = RrEnv::new(std::slice::from_ref(data), lambda)?;
        self.policy.check_env(&env)?;
        Ok(env)
    }
}
