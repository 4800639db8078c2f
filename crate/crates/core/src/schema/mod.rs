//! Authored dialogue schemas and the live, editable plans built from them.

mod parse;
mod plan;

use serde::{Deserialize, Serialize};

use crate::content::Tier;
use crate::transduction::{Pattern, Token};

pub use plan::{Plan, PlanEpisode, PlanError, SkipRecord, MAX_SPLICES_PER_SUBSESSION};

/// The gist and reaction trees used to interpret answers to a question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreePair {
    pub gist: String,
    pub reaction: String,
}

/// Something the agent says.
///
/// A say followed by `user` is a question and must name its trees. Says
/// without trees are statements, e.g. self-disclosures in answer schemas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SayEpisode {
    pub text: String,
    /// Canonical gist of what is said.
    pub gist: Vec<Token>,
    pub trees: Option<TreePair>,
    /// If any of these matches a remembered gist, the question is skipped.
    pub answered: Vec<Pattern>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Episode {
    Say(SayEpisode),
    ExpectUser,
    Break,
    End,
}

impl Episode {
    pub fn as_say(&self) -> Option<&SayEpisode> {
        match self {
            Episode::Say(say) => Some(say),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueSchema {
    pub name: String,
    /// Topic schemas carry their topic id; answer and off-track subschemas do not.
    pub topic: Option<String>,
    pub intensity: Option<Tier>,
    pub episodes: Vec<Episode>,
}

/// Questions allowed in one topic schema.
pub const QUESTIONS_PER_TOPIC: std::ops::RangeInclusive<usize> = 3..=5;

impl DialogueSchema {
    /// Say episodes immediately followed by an expected user turn.
    pub fn question_count(&self) -> usize {
        self.episodes
            .windows(2)
            .filter(|w| matches!(w, [Episode::Say(_), Episode::ExpectUser]))
            .count()
    }

    /// Tree names referenced by this schema's questions.
    pub fn tree_names(&self) -> impl Iterator<Item = &str> {
        self.episodes
            .iter()
            .filter_map(|e| e.as_say()?.trees.as_ref())
            .flat_map(|t| [t.gist.as_str(), t.reaction.as_str()])
    }

    /// Structural problems with this schema alone; empty means well formed.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let name = &self.name;
        let ends = self.episodes.iter().filter(|e| matches!(e, Episode::End)).count();
        if self.episodes.len() <= 1 {
            out.push(format!("schema {name} has an empty body"));
        }
        if ends != 1 || !matches!(self.episodes.last(), Some(Episode::End)) {
            out.push(format!("schema {name} must end with exactly one `end`"));
        }
        for (i, ep) in self.episodes.iter().enumerate() {
            let prev = i.checked_sub(1).map(|p| &self.episodes[p]);
            match ep {
                Episode::Say(say) => {
                    if say.text.trim().is_empty() {
                        out.push(format!("schema {name} episode {i}: empty say text"));
                    }
                    if say.gist.is_empty() {
                        out.push(format!("schema {name} episode {i}: say without gist"));
                    }
                }
                Episode::ExpectUser => match prev {
                    Some(Episode::Say(say)) if say.trees.is_some() => {}
                    Some(Episode::Say(_)) => out.push(format!(
                        "schema {name} episode {i}: question before `user` names no trees"
                    )),
                    _ => out.push(format!("schema {name} episode {i}: `user` must follow a say")),
                },
                Episode::Break | Episode::End => {}
            }
        }
        if self.topic.is_some() {
            let body = &self.episodes[..self.episodes.len().saturating_sub(1)];
            let alternates = body
                .chunks(2)
                .all(|pair| matches!(pair, [Episode::Say(_), Episode::ExpectUser]));
            if !alternates {
                out.push(format!("topic schema {name} must alternate say and user"));
            }
            let questions = self.question_count();
            if !QUESTIONS_PER_TOPIC.contains(&questions) {
                out.push(format!(
                    "topic schema {name} asks {questions} questions, expected {}-{}",
                    QUESTIONS_PER_TOPIC.start(),
                    QUESTIONS_PER_TOPIC.end()
                ));
            }
        }
        out
    }
}
