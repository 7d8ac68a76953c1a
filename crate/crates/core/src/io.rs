//! Flat sectioned key-value config parsing and minimal CSV read/write.
//!
//! Config files are INI-style: `key = value` lines, `#` comments, optional
//! `[section]` headers that prefix following keys as `section.key`. All
//! values stay strings until a typed getter is called.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Read(String),
    #[error("{file}: line {line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("missing required key '{0}'")]
    MissingKey(String),
    #[error("key '{key}': cannot parse '{value}' as {ty}")]
    BadValue {
        key: String,
        value: String,
        ty: &'static str,
    },
}

#[derive(Debug, Clone, Default)]
pub struct KvMap {
    map: BTreeMap<String, String>,
    source: String,
}

impl KvMap {
    pub fn from_file(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| IoError::Read(format!("{}: {e}", path.display())))?;
        Self::from_text(&text, &path.display().to_string())
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self, IoError> {
        let mut map = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(IoError::Parse {
                        file: source.into(),
                        line: i + 1,
                        msg: "unterminated section header".into(),
                    });
                }
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| IoError::Parse {
                file: source.into(),
                line: i + 1,
                msg: "expected 'key = value'".into(),
            })?;
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            map.insert(key, v.trim().to_string());
        }
        Ok(KvMap {
            map,
            source: source.to_string(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, IoError> {
        self.get(key).ok_or_else(|| IoError::MissingKey(key.into()))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, IoError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| IoError::BadValue {
                    key: key.into(),
                    value: v.into(),
                    ty: "f64",
                }),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, IoError> {
        self.get_f64(key)?.ok_or_else(|| IoError::MissingKey(key.into()))
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, IoError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| IoError::BadValue {
                    key: key.into(),
                    value: v.into(),
                    ty: "usize",
                }),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(|s| s.as_str())
    }

    /// Space-or-comma separated list of floats.
    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, IoError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => {
                let mut out = Vec::new();
                for tok in v.split(|c: char| c == ',' || c.is_whitespace()) {
                    if tok.is_empty() {
                        continue;
                    }
                    out.push(tok.parse().map_err(|_| IoError::BadValue {
                        key: key.into(),
                        value: tok.into(),
                        ty: "f64 list",
                    })?);
                }
                Ok(Some(out))
            }
        }
    }
}

/// Write a CSV with a header row. Floats use Rust's shortest round-trip
/// formatting, which is deterministic for identical inputs.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| IoError::Read(format!("{}: {e}", path.display())))
}

/// Read a CSV with a header row into column-indexed records.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), IoError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| IoError::Read(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| IoError::Read(format!("{}: empty file", path.display())))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(header.len());
        for tok in line.split(',') {
            row.push(tok.trim().parse::<f64>().map_err(|_| IoError::Parse {
                file: path.display().to_string(),
                line: i + 2,
                msg: format!("bad float '{tok}'"),
            })?);
        }
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let kv = KvMap::from_text("a = 1.5\n[plant]\nb = 2 # trailing\n", "test").unwrap();
        assert_eq!(kv.require_f64("a").unwrap(), 1.5);
        assert_eq!(kv.require_f64("plant.b").unwrap(), 2.0);
        assert!(kv.require("missing").is_err());
    }

    #[test]
    fn float_list() {
        let kv = KvMap::from_text("grid = 300, 400 500\n", "test").unwrap();
        assert_eq!(kv.get_f64_list("grid").unwrap().unwrap(), vec![300.0, 400.0, 500.0]);
    }
}
