//! Versioned JSON checkpoints.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::model::ModelState;

pub const CHECKPOINT_FORMAT: &str = "mgcn-dns-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub config: RunConfig,
    pub classes: usize,
    /// Labeled sample indices the model was trained on.
    pub labeled: Vec<usize>,
    pub model: ModelState,
}

impl Checkpoint {
    pub fn new(config: &RunConfig, classes: usize, labeled: Vec<usize>, model: ModelState) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config_hash: config.hash(),
            config: config.clone(),
            classes,
            labeled,
            model,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        let bad = |msg: String| Error::Format {
            file: path.to_path_buf(),
            msg,
        };
        if ck.format != CHECKPOINT_FORMAT {
            return Err(bad(format!("not a checkpoint (format `{}`)", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported checkpoint version {}", ck.version)));
        }
        if ck.config_hash != ck.config.hash() {
            return Err(bad("config hash does not match stored config".into()));
        }
        Ok(ck)
    }
}
