//! On-disk cache of collision bound tables keyed by the scan-config hash.

use std::fs;
use std::path::{Path, PathBuf};

use crowding::collision_bounds::{build_tables, config_hash, BoundTable, ScanConfig, N_G_FRACTIONS, THRESHOLDS};
use crowding::gate_dynamics::catalog;

use crate::error::{CliError, CliResult};
use crate::output::Output;

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "CROWDING_CACHE_DIR";

/// Cache directory: `$CROWDING_CACHE_DIR`, else `$XDG_CACHE_HOME/crowding`,
/// else `$HOME/.cache/crowding`, else `.crowding-cache`.
pub fn cache_dir() -> PathBuf {
    if let Some(d) = std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(d);
    }
    if let Some(d) = std::env::var_os("XDG_CACHE_HOME").filter(|v| !v.is_empty()) {
        return PathBuf::from(d).join("crowding");
    }
    if let Some(h) = std::env::var_os("HOME").filter(|v| !v.is_empty()) {
        return PathBuf::from(h).join(".cache").join("crowding");
    }
    PathBuf::from(".crowding-cache")
}

/// Path of the cached table for `cfg` inside `dir`.
pub fn table_path(dir: &Path, cfg: &ScanConfig) -> PathBuf {
    let hash = config_hash(cfg);
    dir.join(format!("bounds-{}.json", &hash[..16]))
}

fn complete(table: &BoundTable) -> bool {
    table.entries.len() == catalog().len() * N_G_FRACTIONS * THRESHOLDS.len()
}

/// How a table was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Cache,
    Built,
}

/// Returns the bound table for `cfg`, from the cache when a valid entry
/// exists and built (and stored) otherwise. Unreadable or mismatching entries
/// are rebuilt with a notice; an unwritable cache is an error.
pub fn load_or_build(cfg: &ScanConfig, use_cache: bool, out: &mut Output) -> CliResult<(BoundTable, Source)> {
    if !use_cache {
        return Ok((build_tables(cfg)?, Source::Built));
    }
    let dir = cache_dir();
    let path = table_path(&dir, cfg);
    if path.exists() {
        match fs::read_to_string(&path)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str::<BoundTable>(&t).map_err(|e| e.to_string()))
        {
            Ok(table) if table.matches(cfg) && complete(&table) => return Ok((table, Source::Cache)),
            Ok(_) => out.note(format!(
                "cached table {} does not match the scan configuration or is incomplete; rebuilding",
                path.display()
            )),
            Err(e) => out.note(format!("cached table {} is unreadable ({e}); rebuilding", path.display())),
        }
    }
    fs::create_dir_all(&dir).map_err(|e| CliError::Cache(format!("{}: {e}", dir.display())))?;
    let table = build_tables(cfg)?;
    let text = serde_json::to_string(&table).map_err(|e| CliError::Cache(e.to_string()))?;
    let tmp = path.with_extension(format!("json.{}.tmp", std::process::id()));
    fs::write(&tmp, text).map_err(|e| CliError::Cache(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, &path).map_err(|e| CliError::Cache(format!("{}: {e}", path.display())))?;
    Ok((table, Source::Built))
}
