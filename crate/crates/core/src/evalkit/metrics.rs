use serde::{Deserialize, Serialize};

use super::{EvalError, Transcript};
use crate::feedback::{valence_score, ValenceLexicon};
use crate::transduction::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verbosity {
    /// Token count of each USER turn.
    pub per_user_turn: Vec<usize>,
    pub mean: f64,
}

pub fn verbosity(transcript: &Transcript) -> Verbosity {
    let per_user_turn: Vec<usize> = transcript.user_turns().map(|t| tokenize(&t.text).len()).collect();
    let mean = if per_user_turn.is_empty() {
        0.0
    } else {
        per_user_turn.iter().sum::<usize>() as f64 / per_user_turn.len() as f64
    };
    Verbosity { per_user_turn, mean }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// Index of the USER turn in the transcript.
    pub turn: usize,
    pub raw: f64,
    /// Mean of `raw` over the trailing window of USER turns.
    pub smoothed: f64,
}

/// Mean valence per USER turn with a trailing moving average. Early points
/// average over whatever history exists.
pub fn sentiment_trajectory(
    transcript: &Transcript,
    lexicon: &ValenceLexicon,
    window: usize,
) -> Result<Vec<TrajectoryPoint>, EvalError> {
    if window == 0 {
        return Err(EvalError::ZeroWindow);
    }
    let raws: Vec<(usize, f64)> = transcript
        .user_turns()
        .map(|t| (t.index, valence_score(&tokenize(&t.text), lexicon).mean))
        .collect();
    Ok(raws
        .iter()
        .enumerate()
        .map(|(i, &(turn, raw))| {
            let history = &raws[(i + 1).saturating_sub(window)..=i];
            let smoothed = history.iter().map(|(_, r)| r).sum::<f64>() / history.len() as f64;
            TrajectoryPoint { turn, raw, smoothed }
        })
        .collect())
}

/// Plot-ready table of trajectories: `transcript,turn,raw,smoothed`.
pub fn write_trajectories<'a>(series: impl IntoIterator<Item = (&'a str, &'a [TrajectoryPoint])>) -> String {
    let mut out = String::from("transcript,turn,raw,smoothed\n");
    for (id, points) in series {
        for p in points {
            out.push_str(&format!("{id},{},{},{}\n", p.turn, p.raw, p.smoothed));
        }
    }
    out
}
