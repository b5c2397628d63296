use std::fmt;
use std::path::{Path, PathBuf};

use maass::group::{builtin_profile, GroupProfile};
use maass::hejhal::ScanOptions;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Bad flags or inputs; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Everything that determines the numbers a scan produces. Output location
/// and worker count are left out: they do not change results.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub group: u64,
    pub profile: Option<String>,
    pub eps: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub grid_step: f64,
    pub num_y: usize,
    pub seed: u64,
    pub block_width: f64,
}

impl RunConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(config_err(format!("--eps must lie in (0,1), got {}", self.eps)));
        }
        if !(self.r_lo >= 0.0 && self.r_hi > self.r_lo) {
            return Err(config_err(format!("need 0 <= r-lo < r-hi, got [{}, {}]", self.r_lo, self.r_hi)));
        }
        if !(self.grid_step > 0.0) || !(self.block_width > 0.0) {
            return Err(config_err("--grid-step and --block-width must be positive"));
        }
        if self.num_y < 2 {
            return Err(config_err("--num-y must be at least 2"));
        }
        Ok(())
    }

    pub fn scan_options(&self) -> ScanOptions {
        ScanOptions {
            eps: self.eps,
            grid_step: self.grid_step,
            num_y: self.num_y,
            seed: self.seed,
            block_width: self.block_width,
        }
    }

    pub fn hash(&self) -> String {
        config_hash(self)
    }
}

/// First 16 hex digits of the SHA-256 of the JSON form.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serialises");
    hex::encode(&Sha256::digest(&json)[..8])
}

/// The built-in profile for `group`, or the one stored at `path`.
pub fn load_profile(group: Option<u64>, path: Option<&Path>) -> anyhow::Result<GroupProfile> {
    match (group, path) {
        (_, Some(p)) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| config_err(format!("cannot read profile {}: {e}", p.display())))?;
            GroupProfile::from_json(&text).map_err(|e| config_err(format!("bad profile {}: {e}", p.display())))
        }
        (Some(n), None) => builtin_profile(n).map_err(|e| config_err(e.to_string())),
        (None, None) => Err(config_err("give --group or --profile")),
    }
}

pub fn profile_label(path: Option<&PathBuf>) -> Option<String> {
    path.map(|p| p.display().to_string())
}
