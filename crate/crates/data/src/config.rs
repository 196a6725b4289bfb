use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tide_core::{TideConfig, TrainConfig};

use crate::error::{io_err, DataError, Result};

/// Model and training settings for one generator run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: TideConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        Ok(())
    }
}

/// Parses a JSON document, rejecting unknown keys where the target type does.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| DataError::Config(e.to_string()))
}

pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_json(&text).map_err(|e| DataError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_document_keeps_defaults() {
        let cfg: RunConfig = parse_json(r#"{"model": {"image_size": [32, 32]}, "train": {"max_epochs": 7}}"#).unwrap();
        assert_eq!(cfg.model.image_size, [32, 32]);
        assert_eq!(cfg.model.latent_dim, 6);
        assert_eq!(cfg.train.max_epochs, 7);
        cfg.validate().unwrap();
    }

    #[test]
    fn typo_rejected() {
        let err = parse_json::<RunConfig>(r#"{"train": {"max_epoch": 7}}"#).unwrap_err();
        assert!(err.to_string().contains("max_epoch"), "{err}");
        assert!(parse_json::<RunConfig>(r#"{"trian": {}}"#).is_err());
    }
}
