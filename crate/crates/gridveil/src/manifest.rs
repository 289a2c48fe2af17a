//! Run manifest: what was computed, from which inputs, and output checksums.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
}

/// The type-ratio critical probability `θ̲/θ̄` next to the clamp threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShutdownRow {
    pub p_shutdown: f64,
    pub degenerate: bool,
    pub p0_type_ratio: f64,
    pub difference: f64,
}

/// Sweep points where the piecewise closed-form welfare differs from direct welfare.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareMismatch {
    pub tolerance: f64,
    pub count: usize,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InsuranceReport {
    pub eta_high_risk: f64,
    pub eta_low_risk: f64,
    /// `scenario` when given in the file, else the interval the privacy setting maps to.
    pub eta_source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub menu: Option<MenuReport>,
}

/// Diagnostics of the insurer's optimal menu.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MenuReport {
    pub expected_profit: f64,
    pub ic_h_residual: f64,
    pub ir_l_residual: f64,
    pub ic_l_slack: f64,
    pub ir_h_slack: f64,
    pub full_insurance_gap_h: f64,
    pub partial_insurance_margin_l: f64,
    pub lagrange_lambda1: f64,
    pub lagrange_lambda2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub command: String,
    pub scenario: String,
    pub scenario_sha256: String,
    pub seed: u64,
    pub dlc_seed: u64,
    pub grid_points: usize,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// `"overridden"` or the fitted slope.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shutdown: Option<ShutdownRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub piecewise_welfare_mismatch: Option<WelfareMismatch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub insurance: Option<InsuranceReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub outputs: Vec<OutputEntry>,
}

impl RunManifest {
    pub fn new(command: &str, scenario: &str, scenario_sha256: String, seed: u64, dlc_seed: u64, grid_points: usize) -> Self {
        RunManifest {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            scenario: scenario.to_string(),
            scenario_sha256,
            seed,
            dlc_seed,
            grid_points,
            status: "running".into(),
            error: None,
            zeta: None,
            shutdown: None,
            piecewise_welfare_mismatch: None,
            insurance: None,
            notes: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|source| CliError::Io { path: path.clone(), source })?;
        Ok(path)
    }
}
