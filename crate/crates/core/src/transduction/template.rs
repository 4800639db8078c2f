use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::matcher::Captures;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TemplatePart {
    /// Output word, copied verbatim. Reaction templates may carry case and
    /// punctuation here.
    Literal(String),
    /// The span captured by the 1-based pattern element `index`.
    Ref { index: usize, invert: bool },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub parts: Vec<TemplatePart>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("template {template} refers to element {index} but only {arity} were captured")]
pub struct TemplateError {
    pub template: String,
    pub index: usize,
    pub arity: usize,
}

impl Template {
    pub fn new(parts: Vec<TemplatePart>) -> Self {
        Template { parts }
    }

    /// Largest element index referenced, or 0.
    pub fn max_ref(&self) -> usize {
        self.parts
            .iter()
            .filter_map(|p| match p {
                TemplatePart::Ref { index, .. } => Some(*index),
                TemplatePart::Literal(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Parses `( words and refs )`. Bare integers are refs, `K!` inverts.
    pub fn parse(text: &str) -> Result<Self, String> {
        let words = crate::syntax::paren_group(text).ok_or_else(|| format!("expected `( ... )`, found {text:?}"))?;
        let parts = words
            .into_iter()
            .map(|w| {
                let (digits, invert) = match w.strip_suffix('!') {
                    Some(d) if !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()) => (d, true),
                    _ => (w, false),
                };
                if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
                    match digits.parse::<usize>() {
                        Ok(index) if index > 0 => Ok(TemplatePart::Ref { index, invert }),
                        _ => Err(format!("template refs are 1-based, found {w:?}")),
                    }
                } else if w == "(" || w == ")" {
                    Err("stray parenthesis in template".to_string())
                } else {
                    Ok(TemplatePart::Literal(w.to_string()))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Template { parts })
    }

    /// Splices captured spans into the template.
    pub fn instantiate(&self, captures: &Captures, deixis: &DeixisMap) -> Result<Vec<String>, TemplateError> {
        let mut out = Vec::new();
        for part in &self.parts {
            match part {
                TemplatePart::Literal(word) => out.push(word.clone()),
                TemplatePart::Ref { index, invert } => {
                    let span = captures.span(*index).ok_or_else(|| TemplateError {
                        template: self.to_string(),
                        index: *index,
                        arity: captures.arity(),
                    })?;
                    out.extend(span.iter().map(|t| {
                        if *invert {
                            deixis.apply(t).to_string()
                        } else {
                            t.to_string()
                        }
                    }));
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for part in &self.parts {
            match part {
                TemplatePart::Literal(w) => write!(f, " {w}")?,
                TemplatePart::Ref { index, invert: false } => write!(f, " {index}")?,
                TemplatePart::Ref { index, invert: true } => write!(f, " {index}!")?,
            }
        }
        f.write_str(" )")
    }
}

/// Flat first/second person substitution used when restating a user's words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeixisMap {
    map: BTreeMap<String, String>,
}

impl Default for DeixisMap {
    fn default() -> Self {
        let pairs = [
            ("i", "you"),
            ("you", "i"),
            ("my", "your"),
            ("your", "my"),
            ("me", "you"),
            ("am", "are"),
            ("are", "am"),
            ("mine", "yours"),
            ("yours", "mine"),
        ];
        DeixisMap {
            map: pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }
}

impl DeixisMap {
    pub fn from_pairs<I, A, B>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        DeixisMap {
            map: pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect(),
        }
    }

    pub fn apply<'a>(&'a self, word: &'a str) -> &'a str {
        self.map.get(word).map(String::as_str).unwrap_or(word)
    }
}
