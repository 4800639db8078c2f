//! Helpers shared by the integration tests: a brute-force matcher, pack
//! loading and scripted sessions.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use gistline::transduction::{FeatureLexicon, Pattern, PatternElement, Token};
use gistline::{compose_curriculum, AgentOutput, Content, Curriculum, Engine, OutputKind, Provenance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn pack_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../packs/default")
}

pub fn load_pack() -> Content {
    Content::load_pack(&pack_dir()).expect("default pack loads")
}

pub fn engine() -> Engine {
    Engine::new(Arc::new(load_pack()))
}

pub fn tok(w: &str) -> Token {
    Token::new(w).expect("nonempty word")
}

pub fn toks(s: &str) -> Vec<Token> {
    s.split_whitespace().map(tok).collect()
}

// ---------------------------------------------------------------------------
// brute-force matcher

/// Every way to cut `n` tokens into `bounds.len()` consecutive spans whose
/// lengths respect the per-element (min, max) bounds, in ascending
/// lexicographic order of the length vector.
pub fn splits(n: usize, bounds: &[(usize, usize)]) -> Vec<Vec<usize>> {
    fn go(n: usize, bounds: &[(usize, usize)], prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let Some((&(lo, hi), rest)) = bounds.split_first() else {
            if n == 0 {
                out.push(prefix.clone());
            }
            return;
        };
        for len in lo..=hi.min(n) {
            prefix.push(len);
            go(n - len, rest, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, bounds, &mut Vec::new(), &mut out);
    out
}

fn element_bounds(e: &PatternElement, n: usize) -> (usize, usize) {
    match e {
        PatternElement::Literal(_) | PatternElement::Feature(_) => (1, 1),
        PatternElement::Wildcard(None) => (0, n),
        PatternElement::Wildcard(Some(k)) => (0, *k),
    }
}

fn element_accepts(e: &PatternElement, span: &[Token], lex: &FeatureLexicon) -> bool {
    match e {
        PatternElement::Literal(w) => span.len() == 1 && &span[0] == w,
        PatternElement::Feature(f) => span.len() == 1 && lex.has_feature(&span[0], f),
        PatternElement::Wildcard(_) => true,
    }
}

/// The span-length vector of the first valid split in lexicographic order,
/// which is what shortest-first left-to-right backtracking finds.
pub fn oracle_match(pattern: &[PatternElement], input: &[Token], lex: &FeatureLexicon) -> Option<Vec<usize>> {
    let bounds: Vec<(usize, usize)> = pattern.iter().map(|e| element_bounds(e, input.len())).collect();
    splits(input.len(), &bounds).into_iter().find(|lengths| {
        let mut start = 0;
        pattern.iter().zip(lengths).all(|(e, &len)| {
            let ok = element_accepts(e, &input[start..start + len], lex);
            start += len;
            ok
        })
    })
}

pub const VOCAB: [&str; 6] = ["i", "have", "seen", "the", "movie", "yes"];

/// Two overlapping features over the test vocabulary.
pub fn oracle_lexicon() -> FeatureLexicon {
    let mut words: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (w, f) in [("i", "f1"), ("yes", "f1"), ("movie", "f2"), ("seen", "f2"), ("i", "f2")] {
        words.entry(w.to_string()).or_default().insert(f.to_string());
    }
    FeatureLexicon::new(words, BTreeMap::new()).unwrap()
}

/// Element alphabet for generated patterns: every vocabulary literal, plain
/// and bounded wildcards, and both features.
pub fn element_alphabet() -> Vec<PatternElement> {
    let mut out: Vec<PatternElement> = VOCAB.iter().map(|w| PatternElement::Literal(tok(w))).collect();
    out.push(PatternElement::Wildcard(None));
    out.push(PatternElement::Wildcard(Some(1)));
    out.push(PatternElement::Wildcard(Some(2)));
    out.push(PatternElement::Wildcard(Some(3)));
    out.push(PatternElement::Feature("f1".into()));
    out.push(PatternElement::Feature("f2".into()));
    out
}

/// All sequences over `alphabet` of length 0..=max_len.
pub fn all_sequences<T: Clone>(alphabet: &[T], max_len: usize) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &layer {
            for a in alphabet {
                let mut s: Vec<T> = seq.clone();
                s.push(a.clone());
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// A random pattern of up to `max_elems` elements and an input of up to
/// `max_tokens` tokens. Half the inputs are built by filling the pattern so
/// that matches are common.
pub fn random_case(rng: &mut ChaCha8Rng, max_elems: usize, max_tokens: usize) -> (Vec<PatternElement>, Vec<Token>) {
    let alphabet = element_alphabet();
    let n = rng.random_range(0..=max_elems);
    let pattern: Vec<PatternElement> = (0..n)
        .map(|_| alphabet[rng.random_range(0..alphabet.len())].clone())
        .collect();
    let word = |rng: &mut ChaCha8Rng| tok(VOCAB[rng.random_range(0..VOCAB.len())]);
    let input = if rng.random_bool(0.5) {
        let mut input = Vec::new();
        for e in &pattern {
            match e {
                PatternElement::Literal(w) => input.push(w.clone()),
                PatternElement::Feature(f) => {
                    let options: Vec<&str> = VOCAB
                        .iter()
                        .copied()
                        .filter(|w| oracle_lexicon().has_feature(w, f))
                        .collect();
                    input.push(tok(options[rng.random_range(0..options.len())]));
                }
                PatternElement::Wildcard(bound) => {
                    let k = rng.random_range(0..=bound.unwrap_or(3));
                    input.extend((0..k).map(|_| word(rng)));
                }
            }
        }
        input.truncate(max_tokens);
        input
    } else {
        let len = rng.random_range(0..=max_tokens);
        (0..len).map(|_| word(rng)).collect()
    };
    (pattern, input)
}

/// Runs both matchers on one case. `Err` describes a disagreement.
pub fn compare(pattern: &[PatternElement], input: &[Token], lex: &FeatureLexicon) -> Result<bool, String> {
    let p = Pattern::new(pattern.to_vec());
    let got = gistline::transduction::match_pattern(&p, input, lex);
    let want = oracle_match(pattern, input, lex);
    let got_lengths = got.as_ref().map(|c| c.lengths());
    if got_lengths != want {
        return Err(format!(
            "pattern {p} input {input:?}: matcher {got_lengths:?}, oracle {want:?}"
        ));
    }
    if let Some(c) = got {
        let joined: Vec<Token> = c.spans.concat();
        if joined != input {
            return Err(format!(
                "pattern {p} input {input:?}: captures do not reassemble the input"
            ));
        }
        return Ok(true);
    }
    Ok(false)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// scripted sessions

pub const UPBEAT: &str = "Yes, I love it. It makes me so happy, it is wonderful.";
pub const GLOOMY: &str = "No. It is terrible, I feel sad and lonely and tired.";
pub const FLAT: &str = "I went to the store on Tuesday.";

/// Picks a reply from how many breaks have passed, so each subsession gets
/// a different valence.
pub fn mood_script(breaks_so_far: usize) -> &'static str {
    [UPBEAT, GLOOMY, FLAT][breaks_so_far % 3]
}

/// Drives one session to the end with `reply`. Returns the opening output
/// followed by one output per turn.
pub fn run_session(
    engine: &Engine,
    curriculum: &Curriculum,
    index: usize,
    seed: u64,
    mut reply: impl FnMut(usize) -> String,
) -> Vec<AgentOutput> {
    let (mut state, first) = engine.start_session("tester", curriculum, index, seed).unwrap();
    let mut outputs = vec![first];
    let mut breaks = 0;
    for _ in 0..200 {
        breaks += outputs
            .last()
            .unwrap()
            .items
            .iter()
            .filter(|i| i.kind == OutputKind::Feedback)
            .count();
        if outputs.last().unwrap().session_over() {
            return outputs;
        }
        let out = engine.handle_turn(&mut state, &reply(breaks)).unwrap();
        outputs.push(out);
    }
    panic!("session {index} did not end");
}

pub fn default_curriculum(engine: &Engine, seed: u64) -> Curriculum {
    compose_curriculum(&engine.content().topics, seed).unwrap()
}

/// Questions asked by topic schemas, grouped by subsession.
pub fn questions_per_subsession(outputs: &[AgentOutput]) -> Vec<usize> {
    let mut counts = vec![0];
    for item in outputs.iter().flat_map(|o| &o.items) {
        match (&item.kind, &item.provenance) {
            (OutputKind::Feedback, _) => counts.push(0),
            (
                OutputKind::Utterance,
                Provenance::Episode {
                    question: true,
                    spliced: false,
                    ..
                },
            ) => *counts.last_mut().unwrap() += 1,
            _ => {}
        }
    }
    counts
}
