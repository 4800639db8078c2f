//! Pattern language, matcher, templates and transduction trees.
//!
//! User input is interpreted in the context of the agent's last question:
//! the question selects a gist tree, the gist tree turns each clause of the
//! input into a context-independent gist clause, and gist clauses are then
//! run through reaction trees to pick the agent's comment.

mod lexicon;
mod matcher;
mod pattern;
mod template;
mod token;
mod tree;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use lexicon::{FeatureLexicon, LexiconError};
pub use matcher::{match_pattern, Captures};
pub use pattern::{Pattern, PatternElement};
pub use template::{DeixisMap, Template, TemplateError, TemplatePart};
pub use token::{join_tokens, tokenize, tokenize_sentences, Token};
pub use tree::{Directive, Firing, Node, Outcome, TransductionError, TransductionTree, TreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GistKind {
    Statement,
    Question,
    Nil,
}

/// A context-independent restatement of part of a user's input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GistClause {
    pub tokens: Vec<Token>,
    pub kind: GistKind,
}

impl GistClause {
    pub fn nil() -> Self {
        GistClause {
            tokens: Vec::new(),
            kind: GistKind::Nil,
        }
    }

    pub fn statement(text: &str) -> Self {
        GistClause {
            tokens: tokenize(text),
            kind: GistKind::Statement,
        }
    }

    pub fn question(text: &str) -> Self {
        GistClause {
            tokens: tokenize(text),
            kind: GistKind::Question,
        }
    }

    pub fn is_nil(&self) -> bool {
        self.kind == GistKind::Nil
    }

    pub fn text(&self) -> String {
        join_tokens(&self.tokens)
    }
}

/// Names of the trees with fixed roles, and the clause separators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransductionConfig {
    pub question_tree: String,
    pub answer_tree: String,
    pub fallback_tree: String,
    pub separators: BTreeSet<String>,
}

impl Default for TransductionConfig {
    fn default() -> Self {
        TransductionConfig {
            question_tree: "questions".into(),
            answer_tree: "answers".into(),
            fallback_tree: "fallback".into(),
            separators: ["and", "but", "so", "because"].iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// The agent's response to one gist clause.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reaction {
    Utterance {
        words: Vec<String>,
        tree: String,
        path: Vec<usize>,
    },
    SchemaRequest {
        schema: String,
        tree: String,
        path: Vec<usize>,
    },
}

/// Read-only view over loaded trees and lexicon.
#[derive(Debug, Clone, Copy)]
pub struct Transducer<'a> {
    pub trees: &'a TreeSet,
    pub lexicon: &'a FeatureLexicon,
    pub deixis: &'a DeixisMap,
    pub config: &'a TransductionConfig,
}

impl<'a> Transducer<'a> {
    /// Splits each sentence at separator words. Empty fragments are dropped.
    pub fn split_clauses(&self, sentences: &[Vec<Token>]) -> Vec<Vec<Token>> {
        let mut clauses = Vec::new();
        for sentence in sentences {
            let mut current = Vec::new();
            for token in sentence {
                if self.config.separators.contains(token.as_str()) {
                    if !current.is_empty() {
                        clauses.push(std::mem::take(&mut current));
                    }
                } else {
                    current.push(token.clone());
                }
            }
            if !current.is_empty() {
                clauses.push(current);
            }
        }
        clauses
    }

    /// Derives gist clauses for an input given as sentences of tokens.
    ///
    /// Every clause is run through the context tree (when there is one) and
    /// through the question tree; each tree contributes at most one gist per
    /// clause. When nothing fires anywhere, the result is a single nil gist.
    pub fn derive_gists(
        &self,
        context_tree: Option<&str>,
        sentences: &[Vec<Token>],
    ) -> Result<Vec<GistClause>, TransductionError> {
        if let Some(name) = context_tree {
            if !self.trees.contains(name) {
                return Err(TransductionError::UnknownTree(name.to_string()));
            }
        }
        let mut gists = Vec::new();
        for clause in self.split_clauses(sentences) {
            if let Some(name) = context_tree {
                if let Some(words) = self.gist_from(name, &clause)? {
                    gists.push(GistClause {
                        tokens: words,
                        kind: GistKind::Statement,
                    });
                }
            }
            if self.trees.contains(&self.config.question_tree) {
                if let Some(words) = self.gist_from(&self.config.question_tree, &clause)? {
                    gists.push(GistClause {
                        tokens: words,
                        kind: GistKind::Question,
                    });
                }
            }
        }
        if gists.is_empty() {
            gists.push(GistClause::nil());
        }
        Ok(gists)
    }

    /// Convenience for a single flat token sequence.
    pub fn derive_gists_from_tokens(
        &self,
        context_tree: Option<&str>,
        input: &[Token],
    ) -> Result<Vec<GistClause>, TransductionError> {
        self.derive_gists(context_tree, &[input.to_vec()])
    }

    fn gist_from(&self, tree: &str, clause: &[Token]) -> Result<Option<Vec<Token>>, TransductionError> {
        let firing = self.trees.apply(tree, clause, self.lexicon, self.deixis)?;
        Ok(match firing.map(|f| f.outcome) {
            Some(Outcome::Gist(words)) => {
                let tokens = tokenize(&words.join(" "));
                (!tokens.is_empty()).then_some(tokens)
            }
            _ => None,
        })
    }

    /// Picks the agent's reaction to one gist.
    ///
    /// Nil gists go to the fallback tree, questions to the answer tree, and
    /// statements to `reaction_tree` (the tree paired with the question the
    /// user was answering).
    pub fn derive_reaction(
        &self,
        reaction_tree: Option<&str>,
        gist: &GistClause,
    ) -> Result<Option<Reaction>, TransductionError> {
        let tree = match gist.kind {
            GistKind::Nil => self.config.fallback_tree.as_str(),
            GistKind::Question => self.config.answer_tree.as_str(),
            GistKind::Statement => match reaction_tree {
                Some(t) => t,
                None => return Ok(None),
            },
        };
        self.react_with(tree, gist)
    }

    /// Runs a gist through the fallback tree.
    pub fn fallback_reaction(&self, gist: &GistClause) -> Result<Option<Reaction>, TransductionError> {
        self.react_with(&self.config.fallback_tree, gist)
    }

    fn react_with(&self, tree: &str, gist: &GistClause) -> Result<Option<Reaction>, TransductionError> {
        let firing = self.trees.apply(tree, &gist.tokens, self.lexicon, self.deixis)?;
        Ok(firing.and_then(|f| match f.outcome {
            Outcome::Reaction(words) => Some(Reaction::Utterance {
                words,
                tree: f.tree,
                path: f.path,
            }),
            Outcome::SchemaRequest(schema) => Some(Reaction::SchemaRequest {
                schema,
                tree: f.tree,
                path: f.path,
            }),
            Outcome::Gist(_) => None,
        }))
    }
}

/// Which gists of one turn the agent reacts to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactionTargets<'g> {
    pub questions: Vec<&'g GistClause>,
    pub statement: Option<&'g GistClause>,
    pub nil: Option<&'g GistClause>,
}

/// Reacts to the first statement gist plus every distinct question gist.
pub fn select_reaction_targets(gists: &[GistClause]) -> ReactionTargets<'_> {
    let mut questions: Vec<&GistClause> = Vec::new();
    for g in gists.iter().filter(|g| g.kind == GistKind::Question) {
        if !questions.iter().any(|q| q.tokens == g.tokens) {
            questions.push(g);
        }
    }
    ReactionTargets {
        questions,
        statement: gists.iter().find(|g| g.kind == GistKind::Statement),
        nil: gists.iter().find(|g| g.is_nil()),
    }
}
