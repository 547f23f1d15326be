//! Sectioned key/value text format shared by platform, scenario, and
//! fault campaign files.
//!
//! Lexical rules: UTF-8 lines; blank lines and lines starting with `#`
//! are ignored; `[name]` opens a section; `key = value` adds an entry to
//! the current section (the value runs to end of line, trimmed). There
//! are no trailing comments. Which sections and keys are meaningful, and
//! which keys may repeat, is decided by each file format on top of this.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct KvError {
    pub line: usize,
    pub message: String,
}

impl KvError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    /// Entries into a strict field set: every key must be in `allowed`,
    /// and only keys in `repeatable` may occur more than once.
    pub fn fields(&self, allowed: &[&str], repeatable: &[&str]) -> Result<Fields, KvError> {
        let mut out = Fields {
            items: Vec::new(),
            section: self.name.clone(),
            section_line: self.line,
        };
        for entry in &self.entries {
            if !allowed.contains(&entry.key.as_str()) {
                return Err(KvError::new(
                    entry.line,
                    format!("unknown key `{}` in section [{}]", entry.key, self.name),
                ));
            }
            if !repeatable.contains(&entry.key.as_str())
                && out.items.iter().any(|e: &Entry| e.key == entry.key)
            {
                return Err(KvError::new(
                    entry.line,
                    format!("duplicate key `{}` in section [{}]", entry.key, self.name),
                ));
            }
            out.items.push(entry.clone());
        }
        Ok(out)
    }
}

#[derive(Debug)]
pub struct Fields {
    items: Vec<Entry>,
    pub section: String,
    pub section_line: usize,
}

impl Fields {
    pub fn required(&self, key: &str) -> Result<&Entry, KvError> {
        self.optional(key).ok_or_else(|| {
            KvError::new(
                self.section_line,
                format!("missing required key `{key}` in section [{}]", self.section),
            )
        })
    }

    pub fn optional(&self, key: &str) -> Option<&Entry> {
        self.items.iter().find(|e| e.key == key)
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.items.iter().filter(move |e| e.key == key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub sections: Vec<Section>,
}

impl Document {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }
}

pub fn parse_document(text: &str) -> Result<Document, KvError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| KvError::new(line_no, "unterminated section header"))?
                .trim();
            if name.is_empty() {
                return Err(KvError::new(line_no, "empty section name"));
            }
            sections.push(Section {
                name: name.to_string(),
                line: line_no,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| KvError::new(line_no, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(KvError::new(line_no, "empty key"));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| KvError::new(line_no, "entry before any [section] header"))?;
        section.entries.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line: line_no,
        });
    }
    Ok(Document { sections })
}

/// Parse an unsigned integer, accepting decimal or 0x-prefixed
/// hexadecimal, with `_` separators allowed in either.
pub fn parse_u64(entry: &Entry) -> Result<u64, KvError> {
    let text = entry.value.replace('_', "");
    let parsed = if let Some(hex) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16)
    } else {
        text.parse()
    };
    parsed.map_err(|_| {
        KvError::new(
            entry.line,
            format!("key `{}`: `{}` is not an unsigned integer", entry.key, entry.value),
        )
    })
}

pub fn parse_u32(entry: &Entry) -> Result<u32, KvError> {
    let v = parse_u64(entry)?;
    u32::try_from(v).map_err(|_| {
        KvError::new(
            entry.line,
            format!("key `{}`: `{}` does not fit in 32 bits", entry.key, entry.value),
        )
    })
}

pub fn parse_bool(entry: &Entry) -> Result<bool, KvError> {
    match entry.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(KvError::new(
            entry.line,
            format!("key `{}`: expected true or false, got `{other}`", entry.key),
        )),
    }
}
