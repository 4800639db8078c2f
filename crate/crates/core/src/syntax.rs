//! Line-level helpers shared by the pack file parsers.

use std::fmt;
use std::path::Path;

/// A syntax error located in a pack file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub file: Option<String>,
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            file: None,
            line,
            message: message.into(),
        }
    }

    pub fn in_file(mut self, path: &Path) -> Self {
        self.file = Some(path.display().to_string());
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.file {
            Some(file) => write!(f, "{file}:{}: {}", self.line, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

impl std::error::Error for ParseError {}

/// A non-blank, comment-stripped source line.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Line<'a> {
    pub number: usize,
    pub depth: usize,
    pub text: &'a str,
}

/// Yields meaningful lines with their indentation depth (two spaces per level).
pub(crate) fn lines(source: &str) -> impl Iterator<Item = Result<Line<'_>, ParseError>> {
    source.lines().enumerate().filter_map(|(i, raw)| {
        let number = i + 1;
        let body = strip_comment(raw).trim_end();
        if body.trim().is_empty() {
            return None;
        }
        let indent = body.len() - body.trim_start().len();
        if body[..indent].contains('\t') {
            return Some(Err(ParseError::new(number, "tabs are not allowed in indentation")));
        }
        if !indent.is_multiple_of(2) {
            return Some(Err(ParseError::new(
                number,
                "indentation must be a multiple of two spaces",
            )));
        }
        Some(Ok(Line {
            number,
            depth: indent / 2,
            text: body.trim_start(),
        }))
    })
}

/// Removes a `#` comment that starts the line or follows whitespace, ignoring
/// `#` inside double-quoted text.
pub(crate) fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    let mut escaped = false;
    let mut prev_space = true;
    for (i, c) in line.char_indices() {
        if escaped {
            escaped = false;
        } else if c == '\\' && in_quotes {
            escaped = true;
        } else if c == '"' {
            in_quotes = !in_quotes;
        } else if c == '#' && !in_quotes && prev_space {
            return &line[..i];
        }
        prev_space = c.is_whitespace();
    }
    line
}

/// Splits `( a b c )` into its inner words. Parentheses may touch the words.
pub(crate) fn paren_group(text: &str) -> Option<Vec<&str>> {
    let inner = text.trim().strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.split_whitespace().collect())
}
