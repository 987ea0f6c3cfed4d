//! Option layering (command-line flag, then config file, then default) and
//! parsing of the list/range syntax used by `--n`, `--alpha`, `--tf` and
//! `--backend`.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use quasiwkb::experiments::Backend;
use serde::de::DeserializeOwned;

#[derive(Debug)]
pub enum CliError {
    /// Rejected before any solver ran; exit code 2.
    Config(String),
    /// A solver cell failed; exit code 3.
    Solver(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

pub fn config_err(e: impl fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Values from a TOML config file. Keys use the flag names with `_` in place
/// of `-`; every key must be consumed by the command, otherwise it is
/// reported as unknown.
#[derive(Debug, Default)]
pub struct ConfigLayer {
    table: toml::Table,
    used: RefCell<BTreeSet<String>>,
}

impl ConfigLayer {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let table = text.parse::<toml::Table>().map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Ok(Self { table, used: RefCell::default() })
    }

    fn lookup(&self, key: &str) -> Option<&toml::Value> {
        self.used.borrow_mut().insert(key.to_string());
        self.table.get(key)
    }

    pub fn value<T: DeserializeOwned>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError> {
        let from_file = match self.lookup(key) {
            Some(v) => Some(v.clone().try_into::<T>().map_err(|e| config_err(format!("config key '{key}': {e}")))?),
            None => None,
        };
        Ok(flag.or(from_file).unwrap_or(default))
    }

    pub fn optional<T: DeserializeOwned>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        let from_file = self.lookup(key);
        match flag {
            Some(v) => Ok(Some(v)),
            None => from_file
                .map(|v| v.clone().try_into::<T>().map_err(|e| config_err(format!("config key '{key}': {e}"))))
                .transpose(),
        }
    }

    /// List-valued options. The file may hold a string in flag syntax, a
    /// single number, or an array.
    pub fn text(&self, key: &str, flag: Option<String>, default: &str) -> Result<String, CliError> {
        let from_file = self.lookup(key);
        if let Some(f) = flag {
            return Ok(f);
        }
        let Some(v) = from_file else {
            return Ok(default.to_string());
        };
        let scalar = |v: &toml::Value| match v {
            toml::Value::String(s) => Ok(s.clone()),
            toml::Value::Integer(i) => Ok(i.to_string()),
            toml::Value::Float(x) => Ok(x.to_string()),
            other => Err(config_err(format!("config key '{key}': unsupported value {other}"))),
        };
        match v {
            toml::Value::Array(items) => Ok(items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?.join(",")),
            other => scalar(other),
        }
    }

    pub fn finish(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self.table.keys().filter(|k| !used.contains(*k)).map(String::as_str).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(config_err(format!("unknown config keys: {}", unknown.join(", "))))
        }
    }
}

/// `"a..b"` (inclusive) or `"a,b,c"`.
pub fn parse_int_list<T>(what: &str, text: &str) -> Result<Vec<T>, CliError>
where
    T: std::str::FromStr + Copy + Into<u64> + TryFrom<u64>,
{
    let one = |s: &str| s.trim().parse::<T>().map_err(|_| config_err(format!("{what}: cannot parse '{s}'")));
    let values = if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (one(a)?.into(), one(b)?.into());
        if a > b {
            return Err(config_err(format!("{what}: empty range '{text}'")));
        }
        (a..=b).map(|v| T::try_from(v).ok().expect("inside the parsed bounds")).collect()
    } else {
        text.split(',').map(one).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(config_err(format!("{what}: no values")));
    }
    Ok(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Geometric,
}

/// `"a..b"` expanded to `points` values, or an explicit comma list.
pub fn parse_tf_list(text: &str, points: usize, spacing: Spacing) -> Result<Vec<f64>, CliError> {
    let one = |s: &str| -> Result<f64, CliError> {
        let v = s.trim().parse::<f64>().map_err(|_| config_err(format!("tf: cannot parse '{s}'")))?;
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(config_err(format!("tf: {v} is not a positive finite time")))
        }
    };
    if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (one(a)?, one(b)?);
        if b < a || points < 2 {
            return Err(config_err(format!("tf: range '{text}' needs a <= b and at least two points")));
        }
        let last = (points - 1) as f64;
        Ok((0..points)
            .map(|i| match spacing {
                _ if i + 1 == points => b,
                Spacing::Linear => a + (b - a) * i as f64 / last,
                Spacing::Geometric => a * (b / a).powf(i as f64 / last),
            })
            .collect())
    } else {
        text.split(',').map(one).collect()
    }
}

pub fn parse_single_tf(text: &str) -> Result<f64, CliError> {
    match parse_tf_list(text, 2, Spacing::Linear)?.as_slice() {
        [t] => Ok(*t),
        _ => Err(config_err(format!("tf: expected a single value, got '{text}'"))),
    }
}

pub fn parse_backends(text: &str) -> Result<Vec<Backend>, CliError> {
    let names: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Err(config_err("backend list is empty"));
    }
    let mut out = Vec::new();
    for name in names {
        let b: Backend = name.parse().map_err(config_err)?;
        if out.contains(&b) {
            return Err(config_err(format!("backend '{b}' listed twice")));
        }
        out.push(b);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_lists_and_ranges() {
        assert_eq!(parse_int_list::<u32>("n", "2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_int_list::<u8>("alpha", "0,3").unwrap(), vec![0, 3]);
        assert!(parse_int_list::<u32>("n", "5..2").is_err());
        assert!(parse_int_list::<u32>("n", "x").is_err());
    }

    #[test]
    fn tf_ranges_hit_both_ends() {
        let lin = parse_tf_list("1..200", 5, Spacing::Linear).unwrap();
        assert_eq!((lin[0], lin[4]), (1.0, 200.0));
        let geo = parse_tf_list("1..100", 3, Spacing::Geometric).unwrap();
        assert!((geo[1] - 10.0).abs() < 1e-12);
        assert_eq!(parse_tf_list("3,4.5", 100, Spacing::Linear).unwrap(), vec![3.0, 4.5]);
        assert!(parse_tf_list("0..3", 10, Spacing::Linear).is_err());
        assert!(parse_single_tf("1,2").is_err());
    }

    #[test]
    fn backend_lists() {
        assert_eq!(parse_backends("exact, wkb1").unwrap(), vec![Backend::Exact, Backend::Wkb1]);
        assert!(parse_backends("").is_err());
        assert!(parse_backends(",").is_err());
        assert!(parse_backends("exact,exact").is_err());
        assert!(parse_backends("wkb7").is_err());
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let layer = ConfigLayer { table: "n = 3\nalpha = 1".parse().unwrap(), used: RefCell::default() };
        assert_eq!(layer.value("n", Some(5u32), 1).unwrap(), 5);
        assert_eq!(layer.value("alpha", None, 0u8).unwrap(), 1);
        assert_eq!(layer.value("p_th", None, 0.95).unwrap(), 0.95);
        layer.finish().unwrap();
        let stray = ConfigLayer { table: "nn = 3".parse().unwrap(), used: RefCell::default() };
        assert!(stray.finish().is_err());
    }
}
