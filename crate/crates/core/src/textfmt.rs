//! Flat `key = value ...` text files shared by configs, models, controllers
//! and certificates. `#` starts a comment line; keys may contain dots.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KvDoc {
    entries: Vec<(String, String, usize)>,
}

/// 17 significant digits: round-trips every f64 bit-exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl KvDoc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse { line: i + 1, msg: format!("expected `key = value`, got `{line}`") });
            };
            let key = k.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::Parse { line: i + 1, msg: format!("invalid key `{key}`") });
            }
            if doc.entries.iter().any(|e| e.0 == key) {
                return Err(Error::Parse { line: i + 1, msg: format!("duplicate key `{key}`") });
            }
            doc.entries.push((key.to_string(), v.trim().to_string(), i + 1));
        }
        Ok(doc)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.0.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        if let Some(e) = self.entries.iter_mut().find(|e| e.0 == key) {
            e.1 = value;
        } else {
            self.entries.push((key.to_string(), value, 0));
        }
    }

    pub fn set_floats(&mut self, key: &str, values: &[f64]) {
        let s: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
        self.set(key, s.join(" "));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|e| e.0 == key).map(|e| e.1.as_str())
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.iter().find(|e| e.0 == key).map_or(0, |e| e.2)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Parse { line: 0, msg: format!("missing key `{key}`") })
    }

    pub fn floats(&self, key: &str) -> Result<Vec<f64>> {
        let line = self.line_of(key);
        self.require(key)?
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Parse { line, msg: format!("`{key}`: `{t}` is not a number") })
            })
            .collect()
    }

    pub fn floats_n(&self, key: &str, n: usize) -> Result<Vec<f64>> {
        let v = self.floats(key)?;
        if v.len() != n {
            return Err(Error::Parse {
                line: self.line_of(key),
                msg: format!("`{key}` needs {n} numbers, found {}", v.len()),
            });
        }
        Ok(v)
    }

    pub fn float(&self, key: &str) -> Result<f64> {
        Ok(self.floats_n(key, 1)?[0])
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let line = self.line_of(key);
        self.require(key)?
            .parse()
            .map_err(|_| Error::Parse { line, msg: format!("`{key}` must be a nonnegative integer") })
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.require(key)? {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(Error::Parse {
                line: self.line_of(key),
                msg: format!("`{key}` must be true or false, got `{other}`"),
            }),
        }
    }

    pub fn render(&self, header: &str) -> String {
        let mut s = String::new();
        for line in header.lines() {
            let _ = writeln!(s, "# {line}");
        }
        for (k, v, _) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_render() {
        let doc = KvDoc::parse("# hi\nplant.z0 = 0.7\n\nsls.nf = 4\nname = a b\n").unwrap();
        assert_eq!(doc.float("plant.z0").unwrap(), 0.7);
        assert_eq!(doc.usize("sls.nf").unwrap(), 4);
        assert_eq!(doc.get("name"), Some("a b"));
        assert!(doc.render("x").starts_with("# x\nplant.z0 = 0.7\n"));
    }

    #[test]
    fn parse_errors_carry_lines() {
        match KvDoc::parse("a = 1\nbroken\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(KvDoc::parse("a = 1\na = 2\n").is_err());
        let doc = KvDoc::parse("a = 1 x\n").unwrap();
        assert!(doc.floats("a").is_err());
        assert!(doc.floats_n("missing", 1).is_err());
    }

    proptest! {
        #[test]
        fn floats_round_trip_bit_exact(v in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 1..8)) {
            let mut doc = KvDoc::new();
            doc.set_floats("k", &v);
            let back = KvDoc::parse(&doc.render("")).unwrap().floats("k").unwrap();
            for (a, b) in v.iter().zip(&back) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
