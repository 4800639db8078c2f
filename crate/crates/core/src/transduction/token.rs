use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

/// A lowercase word with no whitespace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Token(String);

impl Token {
    /// Builds a token, rejecting empty strings, whitespace and uppercase.
    pub fn new(word: impl Into<String>) -> Option<Self> {
        let word = word.into();
        let valid =
            !word.is_empty() && !word.chars().any(char::is_whitespace) && word.chars().all(|c| !c.is_uppercase());
        valid.then_some(Token(word))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Deref for Token {
    type Target = str;

    fn deref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl PartialEq<str> for Token {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for Token {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

impl TryFrom<String> for Token {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Token::new(value.clone()).ok_or_else(|| format!("invalid token {value:?}"))
    }
}

impl From<Token> for String {
    fn from(token: Token) -> String {
        token.0
    }
}

/// Lowercases, strips punctuation other than apostrophes inside a word, and
/// splits on whitespace.
pub fn tokenize(text: &str) -> Vec<Token> {
    text.split_whitespace().filter_map(clean_word).collect()
}

/// Splits raw text at sentence-final punctuation, then tokenizes each
/// sentence. Empty sentences are dropped.
pub fn tokenize_sentences(text: &str) -> Vec<Vec<Token>> {
    text.split(['.', '?', '!', ';'])
        .map(tokenize)
        .filter(|sentence| !sentence.is_empty())
        .collect()
}

fn clean_word(raw: &str) -> Option<Token> {
    let kept: String = raw
        .chars()
        .filter(|c| c.is_alphanumeric() || *c == '\'' || *c == '\u{2019}')
        .map(|c| if c == '\u{2019}' { '\'' } else { c })
        .flat_map(char::to_lowercase)
        .collect();
    // apostrophes survive only between word characters
    let trimmed = kept.trim_matches('\'');
    Token::new(trimmed.to_string())
}

/// Joins tokens with single spaces.
pub fn join_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, token) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}
