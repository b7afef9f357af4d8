//! Loading of TOML or JSON configuration files into typed structures.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};

/// Parses `path` as JSON when it ends in `.json`, as TOML otherwise.
pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, path.extension().and_then(|e| e.to_str()) == Some("json"))
        .map_err(|msg| CliError::Input(format!("{}: {msg}", path.display())))
}

/// Parses a configuration string.
pub fn parse<T: DeserializeOwned>(text: &str, json: bool) -> Result<T, String> {
    if json {
        serde_json::from_str(text).map_err(|e| e.to_string())
    } else {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

/// Loads `path` if given, otherwise the type's default.
pub fn load_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    match path {
        Some(p) => load(p),
        None => Ok(T::default()),
    }
}
