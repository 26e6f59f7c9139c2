//! Run configuration: a TOML file with a `[run]` section shared by all
//! commands and one section per subcommand. Command line flags win over the
//! file, the file wins over built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use robin_spectra::geometry::parse_real;
use toml::{Table, Value};

use crate::error::CliError;

pub struct Settings {
    table: Table,
    section: String,
    echo: BTreeMap<String, String>,
}

impl Settings {
    /// Loads `[run]` and `[section]` from `path`, the latter taking
    /// precedence.
    pub fn load(path: Option<&Path>, section: &str) -> Result<Self, CliError> {
        let mut table = Table::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            let mut file: Table =
                toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
            for name in ["run", section] {
                match file.remove(name) {
                    Some(Value::Table(t)) => table.extend(t),
                    Some(_) => return Err(CliError::Usage(format!("config entry '{name}' must be a section"))),
                    None => {}
                }
            }
            if let Some((key, _)) = file.iter().find(|(_, v)| !v.is_table()) {
                return Err(CliError::Usage(format!("config key '{key}' must live in a section")));
            }
        }
        Ok(Settings { table, section: section.to_string(), echo: BTreeMap::new() })
    }

    /// Whether the config file sets `key`.
    pub fn has(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    fn file_value(&self, key: &str) -> Option<&Value> {
        self.table.get(key)
    }

    fn bad(&self, key: &str, want: &str) -> CliError {
        CliError::Usage(format!("config [{}] {key}: expected {want}", self.section))
    }

    fn record(&mut self, key: &str, shown: String) {
        self.echo.insert(key.to_string(), shown);
    }

    fn real_of(&self, key: &str, v: &Value) -> Result<f64, CliError> {
        match v {
            Value::Float(f) => Ok(*f),
            Value::Integer(i) => Ok(*i as f64),
            Value::String(s) => parse_real(s).map_err(|_| self.bad(key, "a number")),
            _ => Err(self.bad(key, "a number")),
        }
    }

    pub fn real(&mut self, key: &str, cli: Option<&str>, default: Option<f64>) -> Result<f64, CliError> {
        let v = match (cli, self.file_value(key)) {
            (Some(s), _) => parse_real(s).map_err(|_| CliError::Usage(format!("--{key}: bad number '{s}'")))?,
            (None, Some(v)) => self.real_of(key, v)?,
            (None, None) => default.ok_or_else(|| CliError::Usage(format!("missing required parameter '{key}'")))?,
        };
        self.record(key, format!("{v}"));
        Ok(v)
    }

    pub fn reals(&mut self, key: &str, cli: Option<&str>, default: Option<&[f64]>) -> Result<Vec<f64>, CliError> {
        let v = match (cli, self.file_value(key)) {
            (Some(s), _) => s
                .split(',')
                .map(|t| parse_real(t).map_err(|_| CliError::Usage(format!("--{key}: bad number '{t}'"))))
                .collect::<Result<Vec<_>, _>>()?,
            (None, Some(Value::Array(a))) => a.iter().map(|x| self.real_of(key, x)).collect::<Result<Vec<_>, _>>()?,
            (None, Some(v)) => vec![self.real_of(key, v)?],
            (None, None) => default
                .map(<[f64]>::to_vec)
                .ok_or_else(|| CliError::Usage(format!("missing required parameter '{key}'")))?,
        };
        if v.is_empty() {
            return Err(CliError::Usage(format!("'{key}' needs at least one value")));
        }
        let shown: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
        self.record(key, shown.join(","));
        Ok(v)
    }

    pub fn integer(&mut self, key: &str, cli: Option<u64>, default: u64) -> Result<u64, CliError> {
        let v = match (cli, self.file_value(key)) {
            (Some(v), _) => v,
            (None, Some(Value::Integer(i))) if *i >= 0 => *i as u64,
            (None, Some(_)) => return Err(self.bad(key, "a nonnegative integer")),
            (None, None) => default,
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn text(&mut self, key: &str, cli: Option<&str>, default: Option<&str>) -> Result<String, CliError> {
        let v = match (cli, self.file_value(key)) {
            (Some(s), _) => s.to_string(),
            (None, Some(Value::String(s))) => s.clone(),
            (None, Some(_)) => return Err(self.bad(key, "a string")),
            (None, None) => default
                .map(str::to_string)
                .ok_or_else(|| CliError::Usage(format!("missing required parameter '{key}'")))?,
        };
        self.record(key, v.clone());
        Ok(v)
    }

    pub fn path(&mut self, key: &str, cli: Option<&Path>, default: Option<&str>) -> Result<PathBuf, CliError> {
        let s = self.text(key, cli.map(|p| p.to_str().unwrap_or_default()), default)?;
        Ok(PathBuf::from(s))
    }

    /// Drops `key` from the echo, for settings that do not affect results.
    pub fn forget(&mut self, key: &str) {
        self.echo.remove(key);
    }

    /// Effective parameters, sorted by key.
    pub fn echo(&self) -> &BTreeMap<String, String> {
        &self.echo
    }
}
