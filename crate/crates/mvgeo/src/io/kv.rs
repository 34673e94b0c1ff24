//! Line-oriented `key=value` configuration files.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment (full-line
//! or trailing); blank lines are ignored; keys and values are trimmed.
//! Repeated keys are preserved in order, so list-like entries (`plane=...`,
//! `plane=...`) are possible.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// One parsed `key = value` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KvEntry {
    pub key: String,
    pub value: String,
    /// 1-based line number, for error reporting downstream.
    pub line: usize,
}

/// Parses a `key=value` file from disk.
pub fn parse_kv(path: &Path) -> Result<Vec<KvEntry>> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::Data(format!("cannot read {}: {e}", path.display()))
    })?;
    parse_kv_str(&text, &path.display().to_string())
}

/// Parses `key=value` text; `source` names the origin in errors.
pub fn parse_kv_str(text: &str, source: &str) -> Result<Vec<KvEntry>> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(Error::Parse {
                location: format!("{source}:{line}"),
                message: format!("expected key=value, got {content:?}"),
            });
        };
        let key = content[..eq].trim();
        let value = content[eq + 1..].trim();
        if key.is_empty() {
            return Err(Error::Parse {
                location: format!("{source}:{line}"),
                message: "empty key".into(),
            });
        }
        entries.push(KvEntry { key: key.to_string(), value: value.to_string(), line });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_comments_and_blanks() {
        let text = "\n# header\nwidth = 64\nheight=48   # trailing comment\n\nname = two words \n";
        let entries = parse_kv_str(text, "test").unwrap();
        assert_eq!(entries.len(), 3);
        assert_eq!(entries[0], KvEntry { key: "width".into(), value: "64".into(), line: 3 });
        assert_eq!(entries[1], KvEntry { key: "height".into(), value: "48".into(), line: 4 });
        assert_eq!(entries[2], KvEntry { key: "name".into(), value: "two words".into(), line: 6 });
    }

    #[test]
    fn preserves_repeated_keys_in_order() {
        let entries = parse_kv_str("plane = a\nplane = b\nplane = c\n", "test").unwrap();
        let values: Vec<&str> = entries.iter().map(|e| e.value.as_str()).collect();
        assert_eq!(values, ["a", "b", "c"]);
    }

    #[test]
    fn missing_equals_reports_the_line() {
        let err = parse_kv_str("ok = 1\nbroken line\n", "cfg.txt").unwrap_err();
        match err {
            Error::Parse { location, .. } => assert_eq!(location, "cfg.txt:2"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_value_is_allowed_empty_key_is_not() {
        let entries = parse_kv_str("flag =\n", "t").unwrap();
        assert_eq!(entries[0].value, "");
        assert!(parse_kv_str("= 3\n", "t").is_err());
    }
}
