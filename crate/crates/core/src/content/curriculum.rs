use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Tier, Topic};

pub const SESSIONS: usize = 10;
pub const TOPICS_PER_SESSION: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CurriculumError {
    #[error("a curriculum needs exactly {expected} topics, got {got}")]
    WrongTopicCount { expected: usize, got: usize },
    #[error("session {session} has {got} topics, expected {TOPICS_PER_SESSION}")]
    SessionSize { session: usize, got: usize },
    #[error("topic {0:?} is scheduled more than once")]
    Repeated(String),
    #[error("topic {0:?} is not in the pack")]
    UnknownTopic(String),
    #[error("mean intensity drops at session {0}")]
    NotMonotone(usize),
}

/// Ordered sessions of topic ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Curriculum {
    pub sessions: Vec<Vec<String>>,
}

impl Curriculum {
    /// Topics for a 1-based session index.
    pub fn session(&self, index: usize) -> Option<&[String]> {
        index
            .checked_sub(1)
            .and_then(|i| self.sessions.get(i))
            .map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    /// Mean tier level per session.
    pub fn mean_intensities(&self, topics: &[Topic]) -> Result<Vec<f64>, CurriculumError> {
        self.sessions
            .iter()
            .map(|session| {
                let mut sum = 0.0;
                for id in session {
                    let topic = topics
                        .iter()
                        .find(|t| &t.id == id)
                        .ok_or_else(|| CurriculumError::UnknownTopic(id.clone()))?;
                    sum += f64::from(topic.tier.level());
                }
                Ok(sum / session.len().max(1) as f64)
            })
            .collect()
    }

    /// Every session has three known topics, no topic repeats, and mean
    /// intensity never drops.
    pub fn check(&self, topics: &[Topic]) -> Result<(), CurriculumError> {
        let mut seen = BTreeSet::new();
        for (i, session) in self.sessions.iter().enumerate() {
            if session.len() != TOPICS_PER_SESSION {
                return Err(CurriculumError::SessionSize {
                    session: i + 1,
                    got: session.len(),
                });
            }
            for id in session {
                if !seen.insert(id.as_str()) {
                    return Err(CurriculumError::Repeated(id.clone()));
                }
            }
        }
        let means = self.mean_intensities(topics)?;
        if let Some(i) = means.windows(2).position(|w| w[1] < w[0]) {
            return Err(CurriculumError::NotMonotone(i + 2));
        }
        Ok(())
    }
}

/// Schedules 30 topics into 10 sessions of 3.
///
/// Topics are shuffled within their tier by `seed`, laid out easy to hard,
/// and cut into consecutive triples. With the 9/15/6 tier split this puts the
/// easy topics in sessions 1-3, medium in 4-8 and hard in 9-10. For any other
/// split the triples of a sorted sequence still have nondecreasing means.
pub fn compose_curriculum(topics: &[Topic], seed: u64) -> Result<Curriculum, CurriculumError> {
    let expected = SESSIONS * TOPICS_PER_SESSION;
    if topics.len() != expected {
        return Err(CurriculumError::WrongTopicCount {
            expected,
            got: topics.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ordered: Vec<&Topic> = Vec::with_capacity(expected);
    for tier in [Tier::Easy, Tier::Medium, Tier::Hard] {
        let mut group: Vec<&Topic> = topics.iter().filter(|t| t.tier == tier).collect();
        group.shuffle(&mut rng);
        ordered.extend(group);
    }
    let curriculum = Curriculum {
        sessions: ordered
            .chunks(TOPICS_PER_SESSION)
            .map(|c| c.iter().map(|t| t.id.clone()).collect())
            .collect(),
    };
    curriculum.check(topics)?;
    Ok(curriculum)
}
