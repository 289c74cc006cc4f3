//! CSV tables and JSON sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// SHA-256 of the canonical TOML form of the config.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let digest = Sha256::digest(cfg.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.display().to_string(),
        source: e,
    })
}

/// A table with an `x` column followed by one column per curve.
pub struct Table {
    pub x: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Table {
    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["x".to_string()];
        header.extend(self.columns.iter().map(|(name, _)| name.clone()));
        w.write_record(&header)?;
        for (i, &x) in self.x.iter().enumerate() {
            let mut row = Vec::with_capacity(self.columns.len() + 1);
            row.push(fmt17(x));
            row.extend(self.columns.iter().map(|(_, c)| fmt17(c[i])));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(())
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|(n, _)| n.clone()).collect()
    }
}

#[derive(Debug, Serialize)]
pub struct Sidecar<'a, E: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_sha256: String,
    pub config: &'a ScenarioConfig,
    pub data_file: String,
    pub columns: Vec<String>,
    pub rows: usize,
    pub extra: E,
}

impl<'a, E: Serialize> Sidecar<'a, E> {
    pub fn new(command: &'a str, cfg: &'a ScenarioConfig, data: &Path, table: &Table, extra: E) -> Self {
        Self {
            tool: "bicfreeze",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_sha256: config_hash(cfg),
            config: cfg,
            data_file: data
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            columns: table.column_names(),
            rows: table.x.len(),
            extra,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn export<E: Serialize>(
    dir: &Path,
    stem: &str,
    command: &str,
    cfg: &ScenarioConfig,
    table: &Table,
    extra: E,
) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    table.write_csv(&csv_path)?;
    write_json(&json_path, &Sidecar::new(command, cfg, &csv_path, table, extra))?;
    Ok(vec![csv_path, json_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for &v in &[0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt17(0.308642), "3.0864200000000003e-1");
    }

    #[test]
    fn hash_is_stable_hex() {
        let cfg = ScenarioConfig::from_toml(
            "[model]\nsteps = [{ k = 1.0, omega = 1.0 }]\n[freeze]\nt_freeze = 0.2\n",
        )
        .unwrap();
        let h = config_hash(&cfg);
        assert_eq!(h.len(), 64);
        assert!(h.chars().all(|c| c.is_ascii_hexdigit()));
        assert_eq!(h, config_hash(&cfg.clone()));
        let mut other = cfg.clone();
        other.freeze.t_freeze = 0.3;
        assert_ne!(h, config_hash(&other));
    }
}
