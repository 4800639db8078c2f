use std::fmt;

use serde::{Deserialize, Serialize};

use super::lexicon::FeatureLexicon;
use super::token::Token;

/// One position in a pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PatternElement {
    /// Matches exactly this word.
    Literal(Token),
    /// Matches any run of tokens; `None` is unbounded, `Some(n)` at most `n`.
    Wildcard(Option<usize>),
    /// Matches a single token carrying the named feature.
    Feature(String),
}

impl PatternElement {
    /// Inclusive bounds on the number of tokens this element may consume.
    pub fn span_bounds(&self, remaining: usize) -> (usize, usize) {
        match self {
            PatternElement::Literal(_) | PatternElement::Feature(_) => (1, 1),
            PatternElement::Wildcard(None) => (0, remaining),
            PatternElement::Wildcard(Some(max)) => (0, (*max).min(remaining)),
        }
    }

    /// Whether a single token satisfies a literal or feature element.
    pub fn accepts(&self, token: &Token, lexicon: &FeatureLexicon) -> bool {
        match self {
            PatternElement::Literal(word) => word == token,
            PatternElement::Feature(name) => lexicon.has_feature(token, name),
            PatternElement::Wildcard(_) => true,
        }
    }

    fn parse(word: &str) -> Result<Self, String> {
        if word == "*" {
            return Ok(PatternElement::Wildcard(None));
        }
        if let Some(bound) = word.strip_prefix('*') {
            return match bound.parse::<usize>() {
                Ok(n) if n > 0 => Ok(PatternElement::Wildcard(Some(n))),
                _ => Err(format!("bad wildcard bound {word:?}")),
            };
        }
        if let Some(name) = word.strip_prefix('.') {
            if name.is_empty() {
                return Err("empty feature name".into());
            }
            return Ok(PatternElement::Feature(name.to_string()));
        }
        let valid = word.chars().all(|c| c.is_alphanumeric() || c == '\'') && !word.chars().any(char::is_uppercase);
        match Token::new(word) {
            Some(token) if valid => Ok(PatternElement::Literal(token)),
            _ => Err(format!("bad pattern word {word:?}")),
        }
    }
}

impl fmt::Display for PatternElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternElement::Literal(word) => write!(f, "{word}"),
            PatternElement::Wildcard(None) => f.write_str("*"),
            PatternElement::Wildcard(Some(n)) => write!(f, "*{n}"),
            PatternElement::Feature(name) => write!(f, ".{name}"),
        }
    }
}

/// An ordered sequence of pattern elements. May be empty, in which case it
/// matches only the empty input.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pattern {
    pub elements: Vec<PatternElement>,
}

impl Pattern {
    pub fn new(elements: Vec<PatternElement>) -> Self {
        Pattern { elements }
    }

    pub fn arity(&self) -> usize {
        self.elements.len()
    }

    /// Parses space-separated element words: `word`, `*`, `*N`, `.feature`.
    pub fn parse_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Result<Self, String> {
        words
            .into_iter()
            .map(PatternElement::parse)
            .collect::<Result<Vec<_>, _>>()
            .map(Pattern::new)
    }

    /// Parses `( elements )`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let words = crate::syntax::paren_group(text).ok_or_else(|| format!("expected `( ... )`, found {text:?}"))?;
        Pattern::parse_words(words)
    }

    /// Feature names used by this pattern that the lexicon does not know.
    pub fn unknown_features<'a>(&'a self, lexicon: &'a FeatureLexicon) -> impl Iterator<Item = &'a str> + 'a {
        self.elements.iter().filter_map(move |e| match e {
            PatternElement::Feature(name) if !lexicon.knows_feature(name) => Some(name.as_str()),
            _ => None,
        })
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for e in &self.elements {
            write!(f, " {e}")?;
        }
        f.write_str(" )")
    }
}
