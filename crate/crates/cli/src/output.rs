use std::fs;
use std::path::Path;

use anyhow::Context;
use maass::io::load_list;

use crate::config::config_err;

pub fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, &text)
}

pub fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Refuses to overwrite a list produced under a different configuration.
pub fn check_reuse(csv: &Path, hash: &str, force: bool) -> anyhow::Result<()> {
    if force || !csv.exists() {
        return Ok(());
    }
    let old = load_list(csv).map_err(|e| config_err(format!("{} exists and cannot be read: {e}", csv.display())))?;
    if old.meta.config_hash != hash {
        return Err(config_err(format!(
            "{} was written with configuration {} (now {hash}); use --force or another --out",
            csv.display(),
            old.meta.config_hash
        )));
    }
    Ok(())
}
