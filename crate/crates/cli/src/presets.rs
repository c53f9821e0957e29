//! Preset lookup. Presets are `<name>.cfg` files in the preset directory,
//! which is `$STREAMFLOW_PRESET_DIR` when set and the bundled `presets/`
//! directory otherwise.

use crate::error::{io_err, CliError, Result};
use std::path::{Path, PathBuf};
use streamflow::config::KvConfig;

pub const PRESET_DIR_ENV: &str = "STREAMFLOW_PRESET_DIR";

pub fn preset_dir() -> PathBuf {
    match std::env::var_os(PRESET_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets"),
    }
}

/// Names of every `.cfg` preset in `dir`, sorted.
pub fn list_presets(dir: &Path) -> Result<Vec<String>> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    names.sort();
    Ok(names)
}

pub fn preset_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.cfg"))
}

pub fn load_file(path: &Path) -> Result<KvConfig> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    KvConfig::parse(&text).map_err(|source| CliError::Config { path: path.display().to_string(), source })
}

pub fn load_preset(dir: &Path, name: &str) -> Result<KvConfig> {
    let path = preset_path(dir, name);
    if !path.exists() {
        return Err(CliError::Usage(format!("no preset `{name}` in {}", dir.display())));
    }
    load_file(&path)
}
