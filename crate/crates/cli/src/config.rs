//! Strict TOML scenario files.
//!
//! A file holds the sections of a [`ScenarioConfig`] (all optional) and, for
//! comparison tables, an optional `[[cells]]` array. Each cell has a `label`
//! and any scenario sections; those keys override the base file.

use std::path::Path;

use drn_core::ScenarioConfig;
use serde::de::DeserializeOwned;
use toml::{Table, Value};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub base: ScenarioConfig,
    pub cells: Vec<(String, ScenarioConfig)>,
}

fn strict<T: DeserializeOwned>(value: Value, context: &str) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let at = if path == "." {
            String::new()
        } else {
            format!(" at `{path}`")
        };
        CliError::Config(format!("{context}{at}: {}", e.inner()))
    })
}

/// Recursively overlays `patch` on `base`; tables merge, anything else
/// replaces.
pub fn merge(base: &mut Table, patch: Table) {
    for (k, v) in patch {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(p)) => merge(b, p),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn resolve(table: Table, context: &str) -> Result<ScenarioConfig, CliError> {
    let config: ScenarioConfig = strict(Value::Table(table), context)?;
    config
        .validate()
        .map_err(|e| CliError::Config(format!("{context}: {e}")))?;
    Ok(config)
}

pub fn parse_config_str(text: &str, origin: &str) -> Result<ConfigFile, CliError> {
    let mut root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(format!("{origin}: {e}")))?;
    let cells_value = root.remove("cells");
    let base = resolve(root.clone(), origin)?;

    let mut cells = Vec::new();
    if let Some(value) = cells_value {
        let Value::Array(items) = value else {
            return Err(CliError::Config(format!(
                "{origin}: `cells` must be an array of tables"
            )));
        };
        for (i, item) in items.into_iter().enumerate() {
            let Value::Table(mut patch) = item else {
                return Err(CliError::Config(format!(
                    "{origin}: `cells[{i}]` must be a table"
                )));
            };
            let label = match patch.remove("label") {
                Some(Value::String(s)) => s,
                Some(_) => {
                    return Err(CliError::Config(format!(
                        "{origin}: `cells[{i}].label` must be a string"
                    )))
                }
                None => {
                    return Err(CliError::Config(format!(
                        "{origin}: `cells[{i}]` needs a label"
                    )))
                }
            };
            let mut merged = root.clone();
            merge(&mut merged, patch);
            cells.push((
                label.clone(),
                resolve(merged, &format!("{origin}: cells[{i}] ({label})"))?,
            ));
        }
    }
    Ok(ConfigFile { base, cells })
}

/// Reads and validates a scenario file. Missing sections and keys take
/// their defaults; unknown keys are errors naming their path.
pub fn parse_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text, &path.display().to_string())
}
