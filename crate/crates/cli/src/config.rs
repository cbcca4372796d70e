//! Key-value run configuration; command-line flags override file values.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub beta: Option<String>,
    pub sigma: Option<String>,
    /// A number, `r` (symbolic) or `rho` (symbolic `r - 1`).
    pub r: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand to run when none is given on the command line.
    pub task: Option<String>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub system: SystemConfig,
    pub moment: Option<String>,
    pub degree: Option<u32>,
    pub sense: Option<String>,
    pub scale: Option<String>,
    pub certificate: Option<String>,
    pub file: Option<PathBuf>,
    pub symbols: Option<String>,
    pub t_total: Option<f64>,
    pub t_transient: Option<f64>,
    pub dt: Option<f64>,
}

pub const TASKS: [&str; 8] = ["bound", "certify", "verify", "average", "orbit", "relations", "region", "report"];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(t) = &cfg.task {
            if !TASKS.contains(&t.as_str()) {
                bail!("unknown task {t:?}; expected one of {}", TASKS.join(", "));
            }
        }
        Ok(cfg)
    }

    /// Checks that the fields a task needs are present.
    pub fn require(&self, task: &str) -> Result<()> {
        let missing = match task {
            "bound" if self.moment.is_none() => Some("moment"),
            "bound" if self.degree.is_none() => Some("degree"),
            "certify" if self.certificate.is_none() => Some("certificate"),
            "verify" if self.file.is_none() => Some("file"),
            _ => None,
        };
        match missing {
            Some(f) => bail!("task {task} needs `{f}`"),
            None => Ok(()),
        }
    }
}
