use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::neuron::DriftModel;
use super::surface::DeviceSurface;
use crate::error::Result;

/// Environment variable naming a default device parameter file.
pub const PARAMS_ENV: &str = "STOCHANNEAL_PARAMS";

const REFERENCE_JSON: &str = include_str!("../../data/reference_params.json");

/// Contents of a device parameter file: the fitted surfaces plus drift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    #[serde(flatten)]
    pub surface: DeviceSurface,
    pub drift: DriftModel,
}

impl DeviceParams {
    /// The shipped reference device (`data/reference_params.json`).
    pub fn reference() -> Self {
        Self::from_json(REFERENCE_JSON).expect("bundled reference parameters are valid")
    }

    pub fn reference_json() -> &'static str {
        REFERENCE_JSON
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let params: DeviceParams = serde_json::from_str(text)?;
        params.surface.validate()?;
        params.drift.validate()?;
        Ok(params)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Hex SHA-256 of raw bytes; used to pin parameter files in manifests.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
