//! TOML run configuration. Every field is optional; command-line flags take
//! precedence over the file.
//!
//! ```toml
//! link = "logit"
//! level = 0.95
//! quantiles = [0.5, 0.9]
//! cdf_at = [20.0, 1000.0]
//! profiles = ["age=20:60:10,male=1"]
//! round_digits = 3
//!
//! [columns]
//! outcome = "vl"
//! censor = "flag"
//! covariates = ["age", "male"]
//!
//! [fit]
//! max_iterations = 200
//! ```

use std::path::{Path, PathBuf};

use cpm_core::{FitOptions, Link};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::input::ColumnLayout;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub link: Option<String>,
    pub fit: FitOptions,
    pub level: f64,
    pub quantiles: Vec<f64>,
    pub cdf_at: Vec<f64>,
    pub profiles: Vec<String>,
    pub columns: ColumnLayout,
    /// Round uncensored outcomes to this many decimals before fitting.
    pub round_digits: Option<u32>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            link: None,
            fit: FitOptions::default(),
            level: 0.95,
            quantiles: Vec::new(),
            cdf_at: Vec::new(),
            profiles: Vec::new(),
            columns: ColumnLayout::default(),
            round_digits: None,
            output: None,
        }
    }
}

pub fn parse_link(s: &str) -> Result<Link> {
    s.parse::<Link>().map_err(CliError::Usage)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(l) = &self.link {
            l.parse::<Link>().map_err(CliError::Config)?;
        }
        for p in self.quantiles.iter().chain(std::iter::once(&self.level)) {
            if !(*p > 0.0 && *p < 1.0) {
                return Err(CliError::Config(format!("probability {p} is not in (0, 1)")));
            }
        }
        if self.cdf_at.iter().any(|y| !y.is_finite()) {
            return Err(CliError::Config("cdf_at values must be finite".into()));
        }
        self.fit.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn link_or(&self, fallback: Link) -> Result<Link> {
        match &self.link {
            Some(l) => parse_link(l),
            None => Ok(fallback),
        }
    }
}
