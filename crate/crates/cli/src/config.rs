//! Sectioned `key = value` configuration. Command-line flags always win.
//!
//! ```ini
//! [paths]
//! qrels = data/bench/qrels.txt
//!
//! [bm25]
//! k1 = 0.9
//! b = 0.4
//!
//! [fusion]
//! method = nsf
//! norm = zscore
//! weights = 0.5,0.5
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

use crate::CliError;

#[derive(Debug, Default)]
pub struct Config {
    ini: Ini,
    base: PathBuf,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let ini = Ini::load_from_file(path).map_err(|e| CliError::Data(format!("config {}: {e}", path.display())))?;
        Ok(Self {
            ini,
            base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.ini.section(Some(section)).and_then(|s| s.get(key)).map(str::trim)
    }

    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(section, key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config [{section}] {key} = `{v}`: {e}")))
            })
            .transpose()
    }

    /// Paths in the config are relative to the config file's directory.
    pub fn path(&self, section: &str, key: &str) -> Option<PathBuf> {
        self.raw(section, key).map(|v| self.base.join(v))
    }

    pub fn section(&self, section: &str) -> Vec<(String, String)> {
        self.ini
            .section(Some(section))
            .map(|s| s.iter().map(|(k, v)| (k.to_string(), v.trim().to_string())).collect())
            .unwrap_or_default()
    }
}

/// `flag`, else the config value, else `default`.
pub fn pick<T: FromStr>(flag: Option<T>, cfg: &Config, section: &str, key: &str, default: T) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(v),
        None => Ok(cfg.get(section, key)?.unwrap_or(default)),
    }
}

pub fn pick_path(flag: Option<PathBuf>, cfg: &Config, section: &str, key: &str) -> Result<PathBuf, CliError> {
    flag.or_else(|| cfg.path(section, key))
        .ok_or_else(|| CliError::Usage(format!("missing --{key} (or [{section}] {key} in the config)")))
}
