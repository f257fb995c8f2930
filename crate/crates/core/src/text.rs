//! Helpers shared by the line-oriented text formats.

use std::fmt;

/// A parse failure with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Non-blank lines with `#` comments stripped, numbered from 1.
pub fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// Splits a comma-separated line into exactly `n` fields; the last field
/// keeps any further commas.
pub fn fields(line_no: usize, line: &str, n: usize, what: &str) -> Result<Vec<String>, ParseError> {
    let parts: Vec<String> = line.splitn(n, ',').map(|s| s.trim().to_owned()).collect();
    if parts.len() != n {
        return Err(ParseError::new(
            line_no,
            format!("expected {n} comma-separated fields for {what}, got {}", parts.len()),
        ));
    }
    Ok(parts)
}
