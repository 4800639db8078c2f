//! The turn loop.
//!
//! A session is three topic schemas joined by breaks. Each user turn is
//! interpreted in the context of the last question asked, stored as gist
//! clauses, answered and reacted to, and then the plan advances to the next
//! expected user turn, emitting feedback at breaks and a summary at the end.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::content::{Content, Curriculum, SESSIONS};
use crate::feedback::{self, Advice, AdviceId, FeedbackConfig, SubsessionStats};
use crate::schema::{Episode, Plan, PlanError, TreePair};
use crate::transduction::{
    select_reaction_targets, tokenize_sentences, GistClause, Reaction, Token, Transducer, TransductionError,
};

/// Said when a fourth off-track subdialogue would be spliced in.
pub const REDIRECT_TEXT: &str = "That is interesting, but let's get back to what we were talking about.";

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("session index {0} is outside 1..={SESSIONS}")]
    SessionIndex(usize),
    #[error("curriculum has no session {index} (it has {available})")]
    NoSuchSession { index: usize, available: usize },
    #[error("topic {0:?} is not in the content pack")]
    MissingTopic(String),
    #[error("schema {0:?} is not in the content pack")]
    MissingSchema(String),
    #[error("the session is over")]
    SessionOver,
    #[error("the session has not reached its end")]
    NotAtEnd,
    #[error("channel score for {channel:?} must be in [0, 1], got {score}")]
    ChannelScore { channel: String, score: f64 },
    #[error(transparent)]
    Transduction(#[from] TransductionError),
}

/// A gist remembered together with the user turn that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredGist {
    pub turn: usize,
    pub gist: GistClause,
}

/// The question whose answer the next user turn is expected to be.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionContext {
    pub episode: usize,
    pub trees: TreePair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub user_id: String,
    /// 1-based.
    pub session_index: usize,
    pub topics: Vec<String>,
    pub plan: Plan,
    pub gist_memory: Vec<StoredGist>,
    /// Gists carried over from earlier sessions with the same user.
    pub prior_memory: Vec<GistClause>,
    pub subsessions: Vec<SubsessionStats>,
    /// 0-based index into `subsessions`.
    pub subsession: usize,
    pub advice: Vec<Advice>,
    pub persona_facts: Vec<String>,
    pub seed: u64,
    pub turns: usize,
    pub context: Option<QuestionContext>,
    pub over: bool,
}

impl SessionState {
    /// Records an externally computed behavior score for the current
    /// subsession.
    pub fn record_channel(&mut self, channel: &str, score: f64) -> Result<(), SessionError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(SessionError::ChannelScore {
                channel: channel.to_string(),
                score,
            });
        }
        self.subsessions[self.subsession]
            .external
            .insert(channel.to_string(), score);
        Ok(())
    }

    /// Every remembered gist, earlier sessions first.
    pub fn memory(&self) -> Vec<GistClause> {
        self.prior_memory
            .iter()
            .cloned()
            .chain(self.gist_memory.iter().map(|g| g.gist.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Utterance,
    Feedback,
    Summary,
    SessionOver,
}

/// Where an output item came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Episode {
        index: usize,
        schema: String,
        source_index: usize,
        question: bool,
        spliced: bool,
    },
    Reaction {
        tree: String,
        path: Vec<usize>,
    },
    Fallback {
        tree: String,
        path: Vec<usize>,
    },
    Redirect,
    Break {
        subsession: usize,
        advice: AdviceId,
    },
    Summary {
        advice: Vec<AdviceId>,
    },
    End,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputItem {
    pub kind: OutputKind,
    pub text: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentOutput {
    /// Gists derived from the user turn; empty for session openings.
    pub gists: Vec<GistClause>,
    pub items: Vec<OutputItem>,
}

impl AgentOutput {
    pub fn session_over(&self) -> bool {
        self.items.last().is_some_and(|i| i.kind == OutputKind::SessionOver)
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|i| i.text.as_str())
    }
}

/// Runs sessions over one content pack.
#[derive(Debug, Clone)]
pub struct Engine {
    content: Arc<Content>,
    feedback: FeedbackConfig,
}

impl Engine {
    pub fn new(content: Arc<Content>) -> Self {
        Engine {
            content,
            feedback: FeedbackConfig::default(),
        }
    }

    pub fn with_feedback(mut self, config: FeedbackConfig) -> Self {
        self.feedback = config;
        self
    }

    pub fn content(&self) -> &Arc<Content> {
        &self.content
    }

    pub fn start_session(
        &self,
        user_id: &str,
        curriculum: &Curriculum,
        session_index: usize,
        seed: u64,
    ) -> Result<(SessionState, AgentOutput), SessionError> {
        self.start_session_with_memory(user_id, curriculum, session_index, seed, Vec::new())
    }

    /// Opens session `session_index`, joining its three topic schemas with
    /// breaks, and emits everything up to the first expected user turn.
    pub fn start_session_with_memory(
        &self,
        user_id: &str,
        curriculum: &Curriculum,
        session_index: usize,
        seed: u64,
        prior_memory: Vec<GistClause>,
    ) -> Result<(SessionState, AgentOutput), SessionError> {
        if !(1..=SESSIONS).contains(&session_index) {
            return Err(SessionError::SessionIndex(session_index));
        }
        let topics = curriculum.session(session_index).ok_or(SessionError::NoSuchSession {
            index: session_index,
            available: curriculum.len(),
        })?;
        let mut schemas = Vec::with_capacity(topics.len());
        for id in topics {
            let topic = self
                .content
                .topic(id)
                .ok_or_else(|| SessionError::MissingTopic(id.clone()))?;
            let schema = self
                .content
                .schema(&topic.schema)
                .ok_or_else(|| SessionError::MissingSchema(topic.schema.clone()))?;
            schemas.push(schema);
        }
        let mut state = SessionState {
            user_id: user_id.to_string(),
            session_index,
            topics: topics.to_vec(),
            plan: Plan::for_session(&schemas),
            gist_memory: Vec::new(),
            prior_memory,
            subsessions: vec![SubsessionStats::default(); schemas.len().max(1)],
            subsession: 0,
            advice: Vec::new(),
            persona_facts: self.content.persona.clone(),
            seed,
            turns: 0,
            context: None,
            over: false,
        };
        let memory = state.memory();
        state.plan.apply_skip_edits(&memory, &self.content.lexicon);
        let mut items = Vec::new();
        self.advance(&mut state, &mut items)?;
        Ok((
            state,
            AgentOutput {
                gists: Vec::new(),
                items,
            },
        ))
    }

    /// Processes one user utterance. On error the state is left untouched.
    pub fn handle_turn(&self, state: &mut SessionState, user_text: &str) -> Result<AgentOutput, SessionError> {
        if state.over {
            return Err(SessionError::SessionOver);
        }
        let mut next = state.clone();
        let output = self.turn(&mut next, user_text)?;
        *state = next;
        Ok(output)
    }

    /// Advice summary and closing line; only valid once the plan has ended.
    pub fn session_summary(&self, state: &SessionState) -> Result<String, SessionError> {
        if !state.plan.at_end() {
            return Err(SessionError::NotAtEnd);
        }
        let mut text = feedback::render_summary(&state.advice);
        if !state.persona_facts.is_empty() {
            let line = &state.persona_facts[(state.seed % state.persona_facts.len() as u64) as usize];
            text.push('\n');
            text.push_str(line);
        }
        Ok(text)
    }

    fn turn(&self, state: &mut SessionState, user_text: &str) -> Result<AgentOutput, SessionError> {
        let content = &*self.content;
        let transducer = content.transducer();
        state.turns += 1;
        let turn = state.turns;

        let sentences = tokenize_sentences(user_text);
        let tokens: Vec<Token> = sentences.iter().flatten().cloned().collect();
        state.subsessions[state.subsession].record_turn(&tokens, &content.valence);

        let context = state.context.clone();
        let gists = transducer.derive_gists(context.as_ref().map(|c| c.trees.gist.as_str()), &sentences)?;
        state.gist_memory.extend(
            gists
                .iter()
                .filter(|g| !g.is_nil())
                .map(|g| StoredGist { turn, gist: g.clone() }),
        );

        let mut items = Vec::new();
        let targets = select_reaction_targets(&gists);
        for question in &targets.questions {
            self.react(state, &transducer, None, question, &mut items)?;
        }
        if let Some(statement) = targets.statement {
            let tree = context.as_ref().map(|c| c.trees.reaction.as_str());
            self.react(state, &transducer, tree, statement, &mut items)?;
        } else if let Some(nil) = targets.nil {
            self.react(state, &transducer, None, nil, &mut items)?;
        }

        let memory = state.memory();
        state.plan.apply_skip_edits(&memory, &content.lexicon);
        self.advance(state, &mut items)?;
        Ok(AgentOutput { gists, items })
    }

    fn react(
        &self,
        state: &mut SessionState,
        transducer: &Transducer<'_>,
        tree: Option<&str>,
        gist: &GistClause,
        items: &mut Vec<OutputItem>,
    ) -> Result<(), SessionError> {
        let reaction = match transducer.derive_reaction(tree, gist)? {
            Some(r) => Some(r),
            None => transducer.fallback_reaction(gist)?,
        };
        match reaction {
            Some(Reaction::Utterance { words, tree, path }) => {
                let provenance = if tree == transducer.config.fallback_tree {
                    Provenance::Fallback { tree, path }
                } else {
                    Provenance::Reaction { tree, path }
                };
                items.push(OutputItem {
                    kind: OutputKind::Utterance,
                    text: render_words(&words),
                    provenance,
                });
            }
            Some(Reaction::SchemaRequest { schema, .. }) => {
                let sub = self
                    .content
                    .schema(&schema)
                    .ok_or_else(|| SessionError::MissingSchema(schema.clone()))?;
                match state.plan.splice(sub) {
                    Ok(()) => {}
                    Err(PlanError::OffTrackLimit { .. }) => items.push(OutputItem {
                        kind: OutputKind::Utterance,
                        text: REDIRECT_TEXT.to_string(),
                        provenance: Provenance::Redirect,
                    }),
                }
            }
            None => {}
        }
        Ok(())
    }

    /// Executes episodes until the plan waits for the user or ends.
    fn advance(&self, state: &mut SessionState, items: &mut Vec<OutputItem>) -> Result<(), SessionError> {
        while let Some(index) = state.plan.advance() {
            let entry = state.plan.episodes[index].clone();
            match entry.episode {
                Episode::Say(say) => {
                    let question = matches!(
                        state.plan.episodes.get(index + 1).map(|e| &e.episode),
                        Some(Episode::ExpectUser)
                    );
                    if let Some(trees) = say.trees {
                        state.context = Some(QuestionContext { episode: index, trees });
                    }
                    items.push(OutputItem {
                        kind: OutputKind::Utterance,
                        text: say.text,
                        provenance: Provenance::Episode {
                            index,
                            schema: entry.schema,
                            source_index: entry.source_index,
                            question,
                            spliced: entry.spliced,
                        },
                    });
                }
                Episode::ExpectUser => return Ok(()),
                Episode::Break => {
                    let stats = &state.subsessions[state.subsession];
                    let advice = feedback::break_feedback(stats, &self.feedback, &self.content.advice);
                    let lines = feedback::channel_lines(stats, &self.feedback);
                    items.push(OutputItem {
                        kind: OutputKind::Feedback,
                        text: feedback::render_break(&advice, &lines),
                        provenance: Provenance::Break {
                            subsession: state.subsession + 1,
                            advice: advice.id,
                        },
                    });
                    state.advice.push(advice);
                    state.subsession = (state.subsession + 1).min(state.subsessions.len() - 1);
                }
                Episode::End => {
                    let text = self.session_summary(state)?;
                    items.push(OutputItem {
                        kind: OutputKind::Summary,
                        text,
                        provenance: Provenance::Summary {
                            advice: state.advice.iter().map(|a| a.id).collect(),
                        },
                    });
                    items.push(OutputItem {
                        kind: OutputKind::SessionOver,
                        text: String::new(),
                        provenance: Provenance::End,
                    });
                    state.over = true;
                    return Ok(());
                }
            }
        }
        Ok(())
    }
}

/// Joins template output into a sentence: capitalizes sentence starts and
/// the pronoun "i". Words made only of punctuation attach to the word before.
pub fn render_words(words: &[String]) -> String {
    let mut out = String::new();
    let mut sentence_start = true;
    for word in words.iter().filter(|w| !w.is_empty()) {
        let punct = word.chars().all(|c| c.is_ascii_punctuation());
        if !out.is_empty() && !punct {
            out.push(' ');
        }
        let is_i = word == "i" || word.starts_with("i'");
        if !punct && (sentence_start || is_i) {
            let mut chars = word.chars();
            if let Some(first) = chars.next() {
                out.extend(first.to_uppercase());
                out.push_str(chars.as_str());
            }
        } else {
            out.push_str(word);
        }
        if punct {
            sentence_start |= word.ends_with(['.', '!', '?']);
        } else {
            sentence_start = word.ends_with(['.', '!', '?']);
        }
    }
    out
}
