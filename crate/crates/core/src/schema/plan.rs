use serde::{Deserialize, Serialize};

use super::{DialogueSchema, Episode};
use crate::transduction::{match_pattern, FeatureLexicon, GistClause, Token};

/// Off-track subdialogues allowed between two breaks.
pub const MAX_SPLICES_PER_SUBSESSION: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("off-track limit reached: {limit} subdialogues already spliced into this subsession")]
    OffTrackLimit { limit: usize },
}

/// An episode instantiated into a plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEpisode {
    pub episode: Episode,
    /// Schema the episode was copied from.
    pub schema: String,
    /// Position of the episode in that schema.
    pub source_index: usize,
    /// Whether it came in through a splice.
    pub spliced: bool,
    pub skipped: bool,
}

/// Why an episode was skipped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub index: usize,
    /// The remembered gist that answered the question.
    pub gist: Vec<Token>,
    /// Which of the episode's answered patterns matched it.
    pub pattern: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub episodes: Vec<PlanEpisode>,
    /// Index of the next episode to execute.
    pub cursor: usize,
    pub skip_log: Vec<SkipRecord>,
    splices_in_subsession: usize,
}

impl Plan {
    pub fn instantiate(schema: &DialogueSchema) -> Plan {
        Plan {
            episodes: copy_episodes(schema, false).collect(),
            cursor: 0,
            skip_log: Vec::new(),
            splices_in_subsession: 0,
        }
    }

    /// Concatenates topic schemas into one session plan, replacing every
    /// `end` but the last with a break.
    pub fn for_session(schemas: &[&DialogueSchema]) -> Plan {
        let mut episodes = Vec::new();
        for (i, schema) in schemas.iter().enumerate() {
            let last = i + 1 == schemas.len();
            for mut ep in copy_episodes(schema, false) {
                if matches!(ep.episode, Episode::End) && !last {
                    ep.episode = Episode::Break;
                }
                episodes.push(ep);
            }
        }
        Plan {
            episodes,
            cursor: 0,
            skip_log: Vec::new(),
            splices_in_subsession: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn splices_in_subsession(&self) -> usize {
        self.splices_in_subsession
    }

    /// Marks not-yet-reached questions whose answered patterns match any
    /// remembered gist. Returns how many episodes were newly skipped.
    pub fn apply_skip_edits(&mut self, memory: &[GistClause], lexicon: &FeatureLexicon) -> usize {
        let mut newly = 0;
        for index in self.cursor..self.episodes.len() {
            let ep = &self.episodes[index];
            if ep.skipped {
                continue;
            }
            let Episode::Say(say) = &ep.episode else {
                continue;
            };
            let hit = say.answered.iter().enumerate().find_map(|(p, pattern)| {
                memory
                    .iter()
                    .filter(|g| !g.is_nil())
                    .find(|g| match_pattern(pattern, &g.tokens, lexicon).is_some())
                    .map(|g| (p, g.tokens.clone()))
            });
            if let Some((pattern, gist)) = hit {
                self.episodes[index].skipped = true;
                self.skip_log.push(SkipRecord { index, gist, pattern });
                newly += 1;
            }
        }
        newly
    }

    /// Inserts a subschema's episodes (minus its `end`) right at the cursor.
    pub fn splice(&mut self, sub: &DialogueSchema) -> Result<(), PlanError> {
        if self.splices_in_subsession >= MAX_SPLICES_PER_SUBSESSION {
            return Err(PlanError::OffTrackLimit {
                limit: MAX_SPLICES_PER_SUBSESSION,
            });
        }
        let inserted: Vec<PlanEpisode> = copy_episodes(sub, true)
            .filter(|ep| !matches!(ep.episode, Episode::End))
            .collect();
        let count = inserted.len();
        self.episodes.splice(self.cursor..self.cursor, inserted);
        for record in &mut self.skip_log {
            if record.index >= self.cursor {
                record.index += count;
            }
        }
        self.splices_in_subsession += 1;
        Ok(())
    }

    /// Moves the cursor to the next executable episode and returns its index.
    ///
    /// Skipped questions are passed over together with the user turn that
    /// follows them. Passing a break starts a new subsession.
    pub fn advance(&mut self) -> Option<usize> {
        while self.cursor < self.episodes.len() {
            let index = self.cursor;
            self.cursor += 1;
            let ep = &self.episodes[index];
            if ep.skipped {
                if matches!(ep.episode, Episode::Say(_))
                    && matches!(
                        self.episodes.get(self.cursor).map(|e| &e.episode),
                        Some(Episode::ExpectUser)
                    )
                {
                    self.cursor += 1;
                }
                continue;
            }
            if matches!(ep.episode, Episode::Break) {
                self.splices_in_subsession = 0;
            }
            return Some(index);
        }
        None
    }

    /// Whether the plan's `end` has been executed.
    pub fn at_end(&self) -> bool {
        self.cursor > 0 && matches!(self.episodes[self.cursor - 1].episode, Episode::End)
    }

    /// Episodes from the cursor on that are neither skipped nor `end`.
    pub fn remaining(&self) -> usize {
        self.episodes[self.cursor.min(self.episodes.len())..]
            .iter()
            .filter(|e| !e.skipped && !matches!(e.episode, Episode::End))
            .count()
    }
}

fn copy_episodes(schema: &DialogueSchema, spliced: bool) -> impl Iterator<Item = PlanEpisode> + '_ {
    schema.episodes.iter().enumerate().map(move |(i, ep)| PlanEpisode {
        episode: ep.clone(),
        schema: schema.name.clone(),
        source_index: i,
        spliced,
        skipped: false,
    })
}
