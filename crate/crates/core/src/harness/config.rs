//! TOML run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{AgentSpec, BackendConfig};
use crate::calibration::{load_calibrator_for, CalibrationMethod, CALIBRATOR_EXT};
use crate::confidence::ConfidenceMode;
use crate::engine::{DebateConfig, DebateMode, DEFAULT_ROUNDS};
use crate::error::{Error, Result};
use crate::types::SelectionPolicy;

pub const DEFAULT_FAILURE_BUDGET: f64 = 0.10;

fn default_rounds() -> usize {
    DEFAULT_ROUNDS
}
fn default_retries() -> u32 {
    1
}
fn default_workers() -> usize {
    1
}
fn default_budget() -> f64 {
    DEFAULT_FAILURE_BUDGET
}
fn vanilla() -> CalibrationMethod {
    CalibrationMethod::Vanilla
}

/// Agent list shared by `calibrate` and `debate` config files.
#[derive(Debug, Clone, Deserialize)]
pub struct AgentsFile {
    pub agents: Vec<AgentSpec>,
}

/// On-disk form of a debate run. Calibrators are given as file paths,
/// either per agent or as a directory holding `<agent_id>.cal.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfigFile {
    pub agents: Vec<AgentSpec>,
    #[serde(default = "default_rounds", alias = "rounds_T")]
    pub rounds: usize,
    #[serde(default)]
    pub mode: DebateMode,
    #[serde(default)]
    pub confidence_mode: ConfidenceMode,
    #[serde(default = "vanilla")]
    pub calibration: CalibrationMethod,
    #[serde(default)]
    pub calibrator_dir: Option<PathBuf>,
    #[serde(default)]
    pub calibrators: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub selection_policy: SelectionPolicy,
    #[serde(default)]
    pub global_seed: u64,
    #[serde(default = "default_retries")]
    pub sv_parse_retries: u32,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Largest tolerated fraction of failed debates.
    #[serde(default = "default_budget")]
    pub failure_budget: f64,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Makes relative paths inside `spec` relative to the config file's directory.
fn rebase_agent(mut spec: AgentSpec, base: &Path) -> AgentSpec {
    if let BackendConfig::Scripted(s) = &mut spec.backend {
        s.script = resolve(base, &s.script);
    }
    spec
}

pub fn load_agents_file(path: &Path) -> Result<Vec<AgentSpec>> {
    let file: AgentsFile =
        toml::from_str(&read(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(file.agents.into_iter().map(|a| rebase_agent(a, base)).collect())
}

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self =
            toml::from_str(&read(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        cfg.agents = cfg.agents.into_iter().map(|a| rebase_agent(a, &base)).collect();
        cfg.calibrator_dir = cfg.calibrator_dir.map(|d| resolve(&base, &d));
        for p in cfg.calibrators.values_mut() {
            *p = resolve(&base, p);
        }
        Ok(cfg)
    }

    /// Loads the calibrators the run needs and assembles the engine config.
    pub fn into_debate_config(self) -> Result<DebateConfig> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let mut calibrators = BTreeMap::new();
        if self.confidence_mode.is_enabled() && self.calibration != CalibrationMethod::Vanilla {
            for a in &self.agents {
                let path = match (self.calibrators.get(&a.agent_id), &self.calibrator_dir) {
                    (Some(p), _) => p.clone(),
                    (None, Some(dir)) => dir.join(format!("{}.{CALIBRATOR_EXT}", a.agent_id)),
                    (None, None) => {
                        return Err(Error::Config(format!(
                            "no {} calibrator configured for agent `{}`",
                            self.calibration, a.agent_id
                        )))
                    }
                };
                if !path.exists() {
                    return Err(Error::Config(format!(
                        "calibrator for agent `{}` not found at {}",
                        a.agent_id,
                        path.display()
                    )));
                }
                let (c, _warning) = load_calibrator_for(&path, self.confidence_mode)?;
                calibrators.insert(a.agent_id.clone(), c);
            }
        }
        let cfg = DebateConfig {
            agents: self.agents,
            rounds: self.rounds,
            mode: self.mode,
            confidence_mode: self.confidence_mode,
            calibration: self.calibration,
            calibrators,
            selection_policy: self.selection_policy,
            global_seed: self.global_seed,
            sv_parse_retries: self.sv_parse_retries,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
