use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Result;

use crate::usage;

/// Values from an optional `key=value` file, consulted for any flag left
/// unset on the command line. Every resolved value is remembered so outputs
/// can echo the effective configuration.
pub struct Settings {
    file: BTreeMap<String, String>,
    pub effective: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut file = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            for (k, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    usage(format!(
                        "{}:{}: expected key=value, got {line:?}",
                        path.display(),
                        k + 1
                    ))
                })?;
                file.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Settings {
            file,
            effective: BTreeMap::new(),
        })
    }

    /// Flag, else config file, else `default`.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        Ok(match self.opt(key, flag)? {
            Some(v) => v,
            None => {
                self.effective.insert(key.to_string(), default.to_string());
                default
            }
        })
    }

    /// Flag, else config file, else nothing.
    pub fn opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(
                    raw.parse::<T>()
                        .map_err(|e| usage(format!("config key {key}: {e}")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &v {
            self.effective.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    /// A required value.
    pub fn need<T>(&mut self, key: &str, flag: Option<T>) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.opt(key, flag)?
            .ok_or_else(|| usage(format!("missing --{key} (flag or config key)")))
    }

    /// A file path. Paths are not echoed in output headers, so the same run
    /// writes the same bytes wherever it writes them.
    pub fn path(&mut self, key: &str, flag: Option<&PathBuf>) -> Result<Option<PathBuf>> {
        let v = flag
            .cloned()
            .or_else(|| self.file.get(key).map(PathBuf::from));
        if let Some(p) = &v {
            if p.as_os_str().is_empty() {
                return Err(usage(format!("empty path for {key}")));
            }
        }
        Ok(v)
    }

    pub fn need_path(&mut self, key: &str, flag: Option<&PathBuf>) -> Result<PathBuf> {
        self.path(key, flag)?.ok_or_else(|| {
            usage(format!(
                "missing --{} (flag or config key)",
                key.replace('_', "-")
            ))
        })
    }

    pub fn note(&mut self, key: &str, value: impl Display) {
        self.effective.insert(key.to_string(), value.to_string());
    }

    pub fn header(&self) -> Vec<(String, String)> {
        self.effective
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    pub fn write_header(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        for (k, v) in &self.effective {
            writeln!(out, "# {k}={v}")?;
        }
        Ok(())
    }
}
