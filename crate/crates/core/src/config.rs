//! Run configuration shared by every harness command.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::Metric;
use crate::model::{DnsMode, ModelConfig};

/// Every field is optional in the JSON file; missing ones take the defaults
/// below (lr 0.1, 2 layers, 5 repeats, τ 0.5, γ 1.0, k 10).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub k: usize,
    pub metric: Metric,
    pub gamma: f64,
    pub tau: f64,
    pub hidden_dim: usize,
    pub layers: usize,
    pub lr: f64,
    pub epochs: usize,
    pub label_ratio: f64,
    pub repeats: usize,
    pub seed: u64,
    pub stratified: bool,
    pub glm: bool,
    pub dns: bool,
    pub dns_mode: DnsMode,
    pub renormalize_after_selection: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let model = ModelConfig::default();
        RunConfig {
            k: 10,
            metric: Metric::Euclidean,
            gamma: model.gamma,
            tau: model.tau,
            hidden_dim: model.hidden_dim,
            layers: model.layers,
            lr: model.lr,
            epochs: model.epochs,
            label_ratio: 0.1,
            repeats: 5,
            seed: 0,
            stratified: true,
            glm: true,
            dns: true,
            dns_mode: DnsMode::Soft,
            renormalize_after_selection: false,
        }
    }
}

fn invalid(field: &'static str, msg: impl Into<String>) -> Error {
    Error::Config {
        field,
        msg: msg.into(),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(invalid("k", "must be >= 1"));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(invalid("gamma", format!("must be > 0, got {}", self.gamma)));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(invalid("tau", format!("must be > 0, got {}", self.tau)));
        }
        if self.hidden_dim < 1 {
            return Err(invalid("hidden_dim", "must be >= 1"));
        }
        if self.layers < 1 {
            return Err(invalid("layers", "must be >= 1"));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(invalid("lr", format!("must be > 0, got {}", self.lr)));
        }
        if self.epochs < 1 {
            return Err(invalid("epochs", "must be >= 1"));
        }
        if !(self.label_ratio > 0.0 && self.label_ratio < 1.0) {
            return Err(invalid("label_ratio", format!("must lie in (0, 1), got {}", self.label_ratio)));
        }
        if self.repeats < 1 {
            return Err(invalid("repeats", "must be >= 1"));
        }
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            hidden_dim: self.hidden_dim,
            layers: self.layers,
            gamma: self.gamma,
            tau: self.tau,
            lr: self.lr,
            epochs: self.epochs,
            glm: self.glm,
            dns: self.dns,
            dns_mode: self.dns_mode,
            topk: self.k,
            renormalize_after_selection: self.renormalize_after_selection,
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex_digest(json.as_bytes())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_json_gives_defaults() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.lr, 0.1);
        assert_eq!(cfg.layers, 2);
        assert_eq!(cfg.repeats, 5);
    }

    #[test]
    fn invalid_field_is_named() {
        match RunConfig::from_json(r#"{"tau": 0}"#) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "tau"),
            other => panic!("unexpected {other:?}"),
        }
        match RunConfig::from_json(r#"{"label_ratio": 1.0}"#) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "label_ratio"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(RunConfig::from_json(r#"{"learning_rate": 0.1}"#).is_err());
    }

    #[test]
    fn enums_use_cli_spelling() {
        let cfg = RunConfig::from_json(r#"{"metric": "cosine", "dns_mode": "hard-topk"}"#).unwrap();
        assert_eq!(cfg.metric, Metric::Cosine);
        assert_eq!(cfg.dns_mode, DnsMode::HardTopk);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let b = RunConfig { tau: 0.4, ..a.clone() };
        assert_eq!(a.hash(), RunConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
