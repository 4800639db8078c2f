use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;

/// Which transcripts each rater reads. Raters and transcripts are
/// identified by 0-based index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub transcripts: usize,
    pub coverage: usize,
    pub load: usize,
    pub seed: u64,
    /// `lists[r]` holds the transcripts given to rater `r`, ascending.
    pub lists: Vec<Vec<usize>>,
}

impl Assignment {
    /// Checks coverage, load and that no rater sees a transcript twice.
    pub fn check(&self) -> Result<(), String> {
        let mut counts = vec![0usize; self.transcripts];
        for (r, list) in self.lists.iter().enumerate() {
            if list.len() > self.load {
                return Err(format!(
                    "rater {r} has {} transcripts, load is {}",
                    list.len(),
                    self.load
                ));
            }
            for (i, &t) in list.iter().enumerate() {
                if t >= self.transcripts {
                    return Err(format!("rater {r} has unknown transcript {t}"));
                }
                if list[..i].contains(&t) {
                    return Err(format!("rater {r} has transcript {t} twice"));
                }
                counts[t] += 1;
            }
        }
        match counts.iter().position(|&n| n < self.coverage) {
            Some(t) => Err(format!(
                "transcript {t} has {} raters, coverage is {}",
                counts[t], self.coverage
            )),
            None => Ok(()),
        }
    }
}

/// Randomized round-robin: transcripts and raters are shuffled by `seed`,
/// then the `coverage * transcripts` slots are dealt to raters cyclically.
/// Consecutive slots of one transcript go to distinct raters and no rater
/// gets more than `ceil(coverage * transcripts / raters)`.
pub fn assign_raters(
    transcripts: usize,
    raters: usize,
    coverage: usize,
    load: usize,
    seed: u64,
) -> Result<Assignment, EvalError> {
    let demand = coverage * transcripts;
    let capacity = load * raters;
    if demand > capacity {
        return Err(EvalError::Infeasible { demand, capacity });
    }
    if transcripts > 0 && coverage > raters {
        return Err(EvalError::TooFewRaters { coverage, raters });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transcript_order: Vec<usize> = (0..transcripts).collect();
    transcript_order.shuffle(&mut rng);
    let mut rater_order: Vec<usize> = (0..raters).collect();
    rater_order.shuffle(&mut rng);

    let mut lists = vec![Vec::new(); raters];
    for slot in 0..demand {
        let t = transcript_order[slot / coverage];
        let r = rater_order[slot % raters];
        lists[r].push(t);
    }
    for list in &mut lists {
        list.sort_unstable();
    }
    Ok(Assignment {
        transcripts,
        coverage,
        load,
        seed,
        lists,
    })
}
