use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

use super::Transcript;

/// Lowercased personal names to scrub from transcript text.
pub type NameLexicon = BTreeSet<String>;

/// Labels are drawn from this range.
const LABELS: std::ops::Range<u64> = 100_000..1_000_000;

/// One name per line; blank lines and `#` comments are ignored.
pub fn parse_names(source: &str) -> NameLexicon {
    source
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deidentified {
    pub transcript: Transcript,
    /// The id the transcript had before relabeling.
    pub original_id: String,
}

/// Replaces names with `NAME` and digit runs of five or more with `NUMBER`,
/// and relabels the transcript with a numeric label drawn from `seed`.
///
/// An id that is already all digits is taken to be a label and kept, so
/// applying this twice changes nothing.
pub fn deidentify(transcript: &Transcript, names: &NameLexicon, seed: u64) -> Deidentified {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let label = rng.random_range(LABELS).to_string();
    scrub(transcript, &Scrubber::new(names), label)
}

/// Deidentifies a batch with distinct labels. Returns the scrubbed
/// transcripts and the label to original id mapping.
pub fn deidentify_batch(
    transcripts: &[Transcript],
    names: &NameLexicon,
    seed: u64,
) -> (Vec<Transcript>, BTreeMap<String, String>) {
    let scrubber = Scrubber::new(names);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used: BTreeSet<String> = transcripts
        .iter()
        .filter(|t| is_label(&t.id))
        .map(|t| t.id.clone())
        .collect();
    let mut mapping = BTreeMap::new();
    let mut out = Vec::with_capacity(transcripts.len());
    for transcript in transcripts {
        let label = loop {
            let candidate = rng.random_range(LABELS).to_string();
            if used.insert(candidate.clone()) {
                break candidate;
            }
        };
        let d = scrub(transcript, &scrubber, label);
        mapping.insert(d.transcript.id.clone(), d.original_id);
        out.push(d.transcript);
    }
    (out, mapping)
}

fn is_label(id: &str) -> bool {
    !id.is_empty() && id.bytes().all(|b| b.is_ascii_digit())
}

fn scrub(transcript: &Transcript, scrubber: &Scrubber, label: String) -> Deidentified {
    let mut out = transcript.map_text(|text| scrubber.apply(text));
    if !is_label(&out.id) {
        out.id = label;
    }
    Deidentified {
        transcript: out,
        original_id: transcript.id.clone(),
    }
}

struct Scrubber {
    names: Option<Regex>,
    digits: Regex,
}

impl Scrubber {
    fn new(names: &NameLexicon) -> Self {
        let names = (!names.is_empty()).then(|| {
            let alternation: Vec<String> = names.iter().map(|n| regex::escape(n)).collect();
            Regex::new(&format!(r"(?i)\b(?:{})\b", alternation.join("|"))).expect("escaped names form a valid regex")
        });
        Scrubber {
            names,
            digits: Regex::new("[0-9]{5,}").expect("static regex"),
        }
    }

    fn apply(&self, text: &str) -> String {
        let text = match &self.names {
            Some(re) => re.replace_all(text, "NAME"),
            None => text.into(),
        };
        self.digits.replace_all(&text, "NUMBER").into_owned()
    }
}
