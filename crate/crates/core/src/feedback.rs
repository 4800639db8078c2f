//! Verbal-valence feedback given at subsession breaks and in the closing
//! summary.
//!
//! Only the word-valence channel is computed here. Other channels (eye
//! contact, smiling, volume, ...) can be supplied as scores in `[0, 1]`
//! through [`SubsessionStats::external`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::syntax::{self, ParseError};
use crate::transduction::Token;

/// Word valence scores in `[-1, 1]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValenceLexicon {
    scores: BTreeMap<String, f64>,
}

impl ValenceLexicon {
    pub fn new(scores: BTreeMap<String, f64>) -> Result<Self, String> {
        for (word, score) in &scores {
            if !(-1.0..=1.0).contains(score) {
                return Err(format!("valence of {word:?} is {score}, outside [-1, 1]"));
            }
        }
        Ok(ValenceLexicon { scores })
    }

    pub fn score(&self, word: &str) -> Option<f64> {
        self.scores.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Parses `word <tab> score` lines.
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        let mut scores = BTreeMap::new();
        for (i, raw) in source.lines().enumerate() {
            let line = syntax::strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (word, score) = line
                .split_once('\t')
                .ok_or_else(|| ParseError::new(i + 1, "expected `word<TAB>score`"))?;
            let score: f64 = score
                .trim()
                .parse()
                .map_err(|_| ParseError::new(i + 1, format!("bad score {score:?}")))?;
            if !(-1.0..=1.0).contains(&score) {
                return Err(ParseError::new(i + 1, format!("score {score} outside [-1, 1]")));
            }
            scores.insert(word.trim().to_lowercase(), score);
        }
        Ok(ValenceLexicon { scores })
    }
}

impl fmt::Display for ValenceLexicon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (word, score) in &self.scores {
            writeln!(f, "{word}\t{score}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValenceScore {
    pub mean: f64,
    pub scored: usize,
}

/// Mean valence over the tokens the lexicon knows; `(0.0, 0)` if none.
pub fn valence_score(tokens: &[Token], lexicon: &ValenceLexicon) -> ValenceScore {
    let (sum, scored) = tokens
        .iter()
        .filter_map(|t| lexicon.score(t))
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    ValenceScore {
        mean: if scored == 0 { 0.0 } else { sum / scored as f64 },
        scored,
    }
}

/// Counters for one subsession of user behavior.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SubsessionStats {
    pub user_tokens: usize,
    pub valence_sum: f64,
    pub scored_tokens: usize,
    pub turns: usize,
    /// Externally computed channel scores in `[0, 1]`, by channel name.
    pub external: BTreeMap<String, f64>,
}

impl SubsessionStats {
    pub fn record_turn(&mut self, tokens: &[Token], lexicon: &ValenceLexicon) {
        let score = valence_score(tokens, lexicon);
        self.user_tokens += tokens.len();
        self.valence_sum += score.mean * score.scored as f64;
        self.scored_tokens += score.scored;
        self.turns += 1;
    }

    pub fn mean_valence(&self) -> f64 {
        self.valence_sum / self.scored_tokens.max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdviceId {
    Praise,
    NeutralTip,
    PositivityNudge,
}

impl AdviceId {
    pub const ALL: [AdviceId; 3] = [AdviceId::Praise, AdviceId::NeutralTip, AdviceId::PositivityNudge];

    pub fn as_str(self) -> &'static str {
        match self {
            AdviceId::Praise => "praise",
            AdviceId::NeutralTip => "neutral-tip",
            AdviceId::PositivityNudge => "positivity-nudge",
        }
    }
}

impl fmt::Display for AdviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AdviceId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AdviceId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown advice id {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Advice {
    pub id: AdviceId,
    pub text: String,
}

/// Advice text per id, loaded from `advice.txt` (`id | text`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdviceTemplates {
    texts: BTreeMap<AdviceId, String>,
}

impl Default for AdviceTemplates {
    fn default() -> Self {
        let texts = [
            (
                AdviceId::Praise,
                "You came across as warm and positive. Keep sharing that energy!",
            ),
            (
                AdviceId::NeutralTip,
                "You are doing well. Try telling me a little more about how things make you feel.",
            ),
            (
                AdviceId::PositivityNudge,
                "I noticed some heavier feelings. When you can, try to mention things you enjoy too.",
            ),
        ];
        AdviceTemplates {
            texts: texts.into_iter().map(|(id, t)| (id, t.to_string())).collect(),
        }
    }
}

impl AdviceTemplates {
    pub fn advice(&self, id: AdviceId) -> Advice {
        let text = self
            .texts
            .get(&id)
            .cloned()
            .unwrap_or_else(|| AdviceTemplates::default().texts[&id].clone());
        Advice { id, text }
    }

    /// Parses `id | text` lines; ids missing from the file keep their defaults.
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        let mut templates = AdviceTemplates::default();
        for line in syntax::lines(source) {
            let line = line?;
            let (id, text) = line
                .text
                .split_once('|')
                .ok_or_else(|| ParseError::new(line.number, "expected `id | text`"))?;
            let id: AdviceId = id.trim().parse().map_err(|m| ParseError::new(line.number, m))?;
            let text = text.trim();
            if text.is_empty() {
                return Err(ParseError::new(line.number, "empty advice text"));
            }
            templates.texts.insert(id, text.to_string());
        }
        Ok(templates)
    }
}

impl fmt::Display for AdviceTemplates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (id, text) in &self.texts {
            writeln!(f, "{id} | {text}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackConfig {
    /// Mean valence at or above this earns praise.
    pub praise_at: f64,
    /// Mean valence at or below this earns a positivity nudge.
    pub nudge_at: f64,
    /// External channel scores at or above this count as a strength.
    pub channel_ok_at: f64,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        FeedbackConfig {
            praise_at: 0.2,
            nudge_at: -0.2,
            channel_ok_at: 0.5,
        }
    }
}

/// Maps a mean valence to its advice band.
pub fn valence_band(mean_valence: f64, config: &FeedbackConfig) -> AdviceId {
    if mean_valence >= config.praise_at {
        AdviceId::Praise
    } else if mean_valence <= config.nudge_at {
        AdviceId::PositivityNudge
    } else {
        AdviceId::NeutralTip
    }
}

pub fn break_feedback(stats: &SubsessionStats, config: &FeedbackConfig, templates: &AdviceTemplates) -> Advice {
    templates.advice(valence_band(stats.mean_valence(), config))
}

/// One line per externally supplied channel score.
pub fn channel_lines(stats: &SubsessionStats, config: &FeedbackConfig) -> Vec<String> {
    stats
        .external
        .iter()
        .map(|(channel, score)| {
            let name = channel.replace(['-', '_'], " ");
            if *score >= config.channel_ok_at {
                format!("Your {name} was a strength in this part.")
            } else {
                format!("Try to work a little on your {name}.")
            }
        })
        .collect()
}

/// Text shown at a break: the advice, then any external channel lines.
pub fn render_break(advice: &Advice, channel_lines: &[String]) -> String {
    let mut text = format!("Let's take a short break. {}", advice.text);
    for line in channel_lines {
        text.push(' ');
        text.push_str(line);
    }
    text
}

const SUMMARY_INTRO: &str = "Here is what went well today and what to keep working on:";
const SUMMARY_EMPTY: &str = "Thank you for talking with me today.";

/// Enumerates the advice issued during a session, in issue order.
pub fn render_summary(advice: &[Advice]) -> String {
    if advice.is_empty() {
        return SUMMARY_EMPTY.to_string();
    }
    let mut text = SUMMARY_INTRO.to_string();
    for (i, a) in advice.iter().enumerate() {
        text.push_str(&format!("\n{}. ({}) {}", i + 1, a.id, a.text));
    }
    text
}
