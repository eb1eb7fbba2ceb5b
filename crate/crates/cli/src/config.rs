//! Optional TOML configuration. Top-level keys apply to every subcommand;
//! a table named after the subcommand overrides them:
//!
//! ```toml
//! threads = 4
//!
//! [transform]
//! seed = 7
//! kind = "translit.perm"
//!
//! [sgns]
//! dim = 100
//! ```
//!
//! Command-line flags win over both.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use toml::Table;

use crate::error::{CliError, CliResult};

#[derive(Debug, Default)]
pub struct Config {
    pub path: Option<PathBuf>,
    table: Table,
}

impl Config {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let table: Table = text
            .parse()
            .map_err(|e| CliError::Usage(format!("{}: invalid config: {e}", path.display())))?;
        Ok(Config {
            path: Some(path.to_owned()),
            table,
        })
    }

    /// `key` from the `[section]` table, else from the top level.
    pub fn get<T: DeserializeOwned>(&self, section: &str, key: &str) -> CliResult<Option<T>> {
        let value = self
            .table
            .get(section)
            .and_then(|s| s.as_table())
            .and_then(|s| s.get(key))
            .or_else(|| self.table.get(key).filter(|v| !v.is_table()));
        match value {
            None => Ok(None),
            Some(v) => v.clone().try_into().map(Some).map_err(|e| {
                CliError::Usage(format!(
                    "{}: bad value for {section}.{key}: {e}",
                    self.path.as_deref().unwrap_or(Path::new("config")).display()
                ))
            }),
        }
    }

    /// Flag value, else config value.
    pub fn pick<T: DeserializeOwned>(&self, section: &str, key: &str, flag: Option<T>) -> CliResult<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(section, key),
        }
    }

    /// Like [`Config::pick`] but the value must come from somewhere.
    pub fn require<T: DeserializeOwned>(&self, section: &str, key: &str, flag: Option<T>) -> CliResult<T> {
        self.pick(section, key, flag)?.ok_or_else(|| {
            CliError::Usage(format!(
                "{section}: --{} is required (flag or config key `{key}`)",
                key.replace('_', "-")
            ))
        })
    }

    pub fn or<T: DeserializeOwned>(&self, section: &str, key: &str, flag: Option<T>, default: T) -> CliResult<T> {
        Ok(self.pick(section, key, flag)?.unwrap_or(default))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> Config {
        Config {
            path: None,
            table: text.parse().unwrap(),
        }
    }

    #[test]
    fn flag_beats_section_beats_top_level() {
        let c = cfg("seed = 1\n[transform]\nseed = 2\n");
        assert_eq!(c.pick::<u64>("transform", "seed", Some(3)).unwrap(), Some(3));
        assert_eq!(c.pick::<u64>("transform", "seed", None).unwrap(), Some(2));
        assert_eq!(c.pick::<u64>("mix", "seed", None).unwrap(), Some(1));
        assert_eq!(c.or::<u64>("sgns", "dim", None, 64).unwrap(), 64);
    }

    #[test]
    fn wrong_type_is_a_usage_error() {
        let c = cfg("[sgns]\ndim = \"big\"\n");
        assert!(matches!(c.get::<usize>("sgns", "dim"), Err(CliError::Usage(_))));
    }

    #[test]
    fn section_name_is_not_a_value() {
        let c = cfg("[transform]\nseed = 2\n");
        assert_eq!(c.get::<u64>("mix", "transform").ok().flatten(), None);
    }
}
