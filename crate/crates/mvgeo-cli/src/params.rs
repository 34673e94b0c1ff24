//! Layered parameter resolution: command-line flag > config-file entry >
//! built-in default.
//!
//! Config files use the `key = value` grammar. Every key a subcommand
//! understands is consumed through [`Params::value`]; [`Params::finish`]
//! then rejects any file key nobody asked for, so typos fail loudly instead
//! of silently falling back to defaults.

use std::collections::HashSet;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use mvgeo::io::{parse_kv, KvEntry};
use mvgeo::{Error, Result};

#[derive(Debug)]
pub struct Params {
    source: String,
    entries: Vec<KvEntry>,
    used: HashSet<String>,
    resolved: Vec<(String, String)>,
}

impl Params {
    /// Loads a config file (or starts empty). Scalar parameter files must not
    /// repeat keys; repetition is reserved for list-valued grammars.
    pub fn load(config: Option<&Path>) -> Result<Params> {
        let (entries, source) = match config {
            Some(path) => (parse_kv(path)?, path.display().to_string()),
            None => (Vec::new(), String::from("<no config file>")),
        };
        let mut seen = HashSet::new();
        for entry in &entries {
            if !seen.insert(entry.key.clone()) {
                return Err(Error::Config(format!(
                    "{source}:{}: duplicate key `{}`",
                    entry.line, entry.key
                )));
            }
        }
        Ok(Params { source, entries, used: HashSet::new(), resolved: Vec::new() })
    }

    fn file_entry(&mut self, key: &str) -> Option<(String, usize)> {
        self.used.insert(key.to_string());
        self.entries
            .iter()
            .find(|e| e.key == key)
            .map(|e| (e.value.clone(), e.line))
    }

    /// Resolves one parameter; the flag wins over the file, the file over the
    /// default. The final value is recorded for the resolved-config echo.
    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = if let Some(v) = flag {
            self.used.insert(key.to_string());
            v
        } else if let Some((raw, line)) = self.file_entry(key) {
            raw.parse().map_err(|e| Error::Parse {
                location: format!("{}:{line}", self.source),
                message: format!("invalid value {raw:?} for `{key}`: {e}"),
            })?
        } else {
            default
        };
        self.resolved.push((key.to_string(), value.to_string()));
        Ok(value)
    }

    /// Rejects config keys that no parameter consumed and returns the
    /// resolved `key = value` pairs in resolution order.
    pub fn finish(self) -> Result<Vec<(String, String)>> {
        for entry in &self.entries {
            if !self.used.contains(&entry.key) {
                return Err(Error::Config(format!(
                    "{}:{}: unknown key `{}`",
                    self.source, entry.line, entry.key
                )));
            }
        }
        Ok(self.resolved)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn config(text: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(text.as_bytes()).unwrap();
        file
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let file = config("iterations = 7\n");
        let mut p = Params::load(Some(file.path())).unwrap();
        assert_eq!(p.value("iterations", Some(3usize), 100).unwrap(), 3);

        let mut p = Params::load(Some(file.path())).unwrap();
        assert_eq!(p.value("iterations", None::<usize>, 100).unwrap(), 7);

        let mut p = Params::load(None).unwrap();
        assert_eq!(p.value("iterations", None::<usize>, 100).unwrap(), 100);
    }

    #[test]
    fn unknown_keys_are_rejected_by_finish() {
        let file = config("iterations = 7\nmystery = 1\n");
        let mut p = Params::load(Some(file.path())).unwrap();
        p.value("iterations", None::<usize>, 100).unwrap();
        let err = p.finish().unwrap_err();
        let text = err.to_string();
        assert!(text.contains("unknown key `mystery`"), "got: {text}");
        assert!(text.contains(":2"), "should cite the line: {text}");
    }

    #[test]
    fn consumed_flag_marks_the_file_key_as_used() {
        let file = config("seed = 4\n");
        let mut p = Params::load(Some(file.path())).unwrap();
        p.value("seed", Some(9u64), 0).unwrap();
        assert!(p.finish().is_ok());
    }

    #[test]
    fn bad_values_cite_file_and_line() {
        let file = config("\nseed = pony\n");
        let mut p = Params::load(Some(file.path())).unwrap();
        let err = p.value("seed", None::<u64>, 0).unwrap_err();
        match err {
            Error::Parse { location, message } => {
                assert!(location.ends_with(":2"), "location {location}");
                assert!(message.contains("pony"), "message {message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_scalar_keys_are_config_errors() {
        let file = config("seed = 1\nseed = 2\n");
        let err = Params::load(Some(file.path())).unwrap_err();
        assert!(err.to_string().contains("duplicate key `seed`"));
    }

    #[test]
    fn resolution_order_is_preserved_in_the_echo() {
        let mut p = Params::load(None).unwrap();
        p.value("b", None::<f64>, 2.5).unwrap();
        p.value("a", Some(1.0f64), 0.0).unwrap();
        let resolved = p.finish().unwrap();
        let keys: Vec<&str> = resolved.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, ["b", "a"]);
        assert_eq!(resolved[0].1, "2.5");
    }
}
