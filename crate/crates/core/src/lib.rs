//! A schema-driven dialogue engine for multi-session casual conversation.
//!
//! The engine interprets user utterances into gist clauses through
//! hierarchical pattern transduction, reacts to them, edits its conversation
//! plan, and gives valence-based feedback between topic segments.

pub mod content;
pub mod dialogue;
pub mod evalkit;
pub mod feedback;
pub mod schema;
pub mod service;
pub mod syntax;
pub mod transduction;

pub use content::{compose_curriculum, Content, Curriculum, Tier, Topic};
pub use dialogue::{AgentOutput, Engine, OutputItem, OutputKind, Provenance, SessionError, SessionState};
pub use schema::{DialogueSchema, Episode, Plan};
pub use transduction::{GistClause, GistKind, Token};
