//! The sectioned comma-separated dialect shared by scenario and grid files.
//!
//! ```text
//! # comment
//! [section]
//! header_a,header_b
//! value,value   # trailing comment
//! ```

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Section {
    pub name: String,
    pub header: Vec<String>,
    /// Data rows with their 1-based source line numbers.
    pub rows: Vec<(usize, Vec<String>)>,
    pub line: usize,
}

impl Section {
    /// Column index by header name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize> {
        self.column(name).ok_or_else(|| {
            Error::parse(
                self.line,
                format!("section [{}] lacks column `{name}`", self.name),
            )
        })
    }
}

pub fn parse_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::parse(line_no, "unterminated section name"))?
                .trim();
            if name.is_empty() {
                return Err(Error::parse(line_no, "empty section name"));
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(Error::parse(line_no, format!("duplicate section [{name}]")));
            }
            sections.push(Section {
                name: name.to_string(),
                header: Vec::new(),
                rows: Vec::new(),
                line: line_no,
            });
            continue;
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| Error::parse(line_no, "row outside of any section"))?;
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if section.header.is_empty() {
            section.header = fields;
        } else {
            if fields.len() != section.header.len() {
                return Err(Error::parse(
                    line_no,
                    format!(
                        "expected {} fields in [{}], found {}",
                        section.header.len(),
                        section.name,
                        fields.len()
                    ),
                ));
            }
            section.rows.push((line_no, fields));
        }
    }
    Ok(sections)
}

pub fn parse_f64(line: usize, column: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| Error::parse(line, format!("`{column}`: `{value}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("`{column}` must be finite")));
    }
    Ok(v)
}

pub fn parse_usize(line: usize, column: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::parse(line, format!("`{column}`: `{value}` is not a non-negative integer")))
}

pub fn parse_bool(line: usize, column: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::parse(line, format!("`{column}`: `{value}` is not a boolean"))),
    }
}

/// ASCII identifier tokens: letters, digits, `.`, `_`, `-`.
pub fn is_identifier(token: &str) -> bool {
    !token.is_empty()
        && token
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'))
}
