use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset, SecondsFormat};
use serde::{Deserialize, Serialize};

use crate::syntax::ParseError;

/// How a transcript's agent turns were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "WOZ")]
    Woz,
    #[serde(rename = "AUTO")]
    Auto,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Woz => "WOZ",
            Condition::Auto => "AUTO",
        })
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "WOZ" => Ok(Condition::Woz),
            "AUTO" => Ok(Condition::Auto),
            other => Err(format!("unknown condition {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Speaker {
    Agent,
    User,
    Feedback,
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Speaker::Agent => "AGENT",
            Speaker::User => "USER",
            Speaker::Feedback => "FEEDBACK",
        })
    }
}

impl FromStr for Speaker {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "AGENT" => Ok(Speaker::Agent),
            "USER" => Ok(Speaker::User),
            "FEEDBACK" => Ok(Speaker::Feedback),
            other => Err(format!("unknown speaker {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub speaker: Speaker,
    pub text: String,
    pub timestamp: DateTime<FixedOffset>,
}

/// A timestamped turn log.
///
/// The exchange format is one `timestamp<TAB>speaker<TAB>text` record per
/// line with RFC 3339 timestamps. Optional `# id: ...` and
/// `# condition: WOZ|AUTO` header lines carry the metadata. Tabs, newlines
/// and backslashes inside text are written as `\t`, `\n` and `\\`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub id: String,
    pub condition: Condition,
    turns: Vec<Turn>,
}

impl Transcript {
    pub fn new(id: impl Into<String>, condition: Condition) -> Self {
        Transcript {
            id: id.into(),
            condition,
            turns: Vec::new(),
        }
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// Appends a turn. Fails if the timestamp is earlier than the last one.
    pub fn push(
        &mut self,
        speaker: Speaker,
        text: impl Into<String>,
        timestamp: DateTime<FixedOffset>,
    ) -> Result<(), String> {
        if let Some(last) = self.turns.last() {
            if timestamp < last.timestamp {
                return Err(format!(
                    "timestamp {} is earlier than the previous turn's {}",
                    timestamp.to_rfc3339(),
                    last.timestamp.to_rfc3339()
                ));
            }
        }
        self.turns.push(Turn {
            index: self.turns.len(),
            speaker,
            text: text.into(),
            timestamp,
        });
        Ok(())
    }

    /// Replaces every turn's text, keeping speakers and timestamps.
    pub fn map_text(&self, mut f: impl FnMut(&str) -> String) -> Transcript {
        Transcript {
            id: self.id.clone(),
            condition: self.condition,
            turns: self
                .turns
                .iter()
                .map(|t| Turn {
                    text: f(&t.text),
                    ..t.clone()
                })
                .collect(),
        }
    }

    pub fn user_turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| t.speaker == Speaker::User)
    }

    /// Parses the exchange format. `default_id` is used when there is no
    /// `# id:` header; the condition defaults to AUTO.
    pub fn parse(default_id: &str, source: &str) -> Result<Transcript, ParseError> {
        let mut transcript = Transcript::new(default_id, Condition::Auto);
        for (i, line) in source.lines().enumerate() {
            let number = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.split_once(':') {
                    match key.trim() {
                        "id" => transcript.id = value.trim().to_string(),
                        "condition" => transcript.condition = value.parse().map_err(|m| ParseError::new(number, m))?,
                        _ => {}
                    }
                }
                continue;
            }
            let mut fields = line.splitn(3, '\t');
            let (Some(ts), Some(speaker), Some(text)) = (fields.next(), fields.next(), fields.next()) else {
                return Err(ParseError::new(number, "expected `timestamp<TAB>speaker<TAB>text`"));
            };
            let timestamp = DateTime::parse_from_rfc3339(ts.trim())
                .map_err(|e| ParseError::new(number, format!("bad timestamp {ts:?}: {e}")))?;
            let speaker = speaker.parse().map_err(|m| ParseError::new(number, m))?;
            transcript
                .push(speaker, unescape(text), timestamp)
                .map_err(|m| ParseError::new(number, m))?;
        }
        Ok(transcript)
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# id: {}", self.id)?;
        writeln!(f, "# condition: {}", self.condition)?;
        for turn in &self.turns {
            writeln!(
                f,
                "{}\t{}\t{}",
                turn.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, true),
                turn.speaker,
                escape(&turn.text)
            )?;
        }
        Ok(())
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}
