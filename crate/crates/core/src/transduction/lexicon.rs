use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::syntax::{self, ParseError};

/// Word features and feature implications, with the implication closure
/// precomputed per word.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureLexicon {
    word_features: BTreeMap<String, BTreeSet<String>>,
    implications: BTreeMap<String, BTreeSet<String>>,
    closed: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("invalid feature name {0:?}")]
    BadFeature(String),
    #[error("feature implication cycle through {0:?}")]
    Cycle(String),
}

impl FeatureLexicon {
    pub fn new(
        word_features: BTreeMap<String, BTreeSet<String>>,
        implications: BTreeMap<String, BTreeSet<String>>,
    ) -> Result<Self, LexiconError> {
        let all_names = word_features
            .values()
            .flatten()
            .chain(implications.keys())
            .chain(implications.values().flatten());
        for name in all_names {
            if !valid_feature_name(name) {
                return Err(LexiconError::BadFeature(name.clone()));
            }
        }
        check_acyclic(&implications)?;

        let closed = word_features
            .iter()
            .map(|(word, feats)| {
                let mut set = BTreeSet::new();
                for feat in feats {
                    close_into(feat, &implications, &mut set);
                }
                (word.clone(), set)
            })
            .collect();
        Ok(FeatureLexicon {
            word_features,
            implications,
            closed,
        })
    }

    /// Whether `word` carries `feature` directly or through implication.
    pub fn has_feature(&self, word: &str, feature: &str) -> bool {
        self.closed.get(word).is_some_and(|set| set.contains(feature))
    }

    /// Whether the feature name is known to this lexicon at all.
    pub fn knows_feature(&self, feature: &str) -> bool {
        self.word_features.values().any(|f| f.contains(feature))
            || self.implications.contains_key(feature)
            || self.implications.values().any(|f| f.contains(feature))
    }

    pub fn features_of(&self, word: &str) -> impl Iterator<Item = &str> {
        self.closed.get(word).into_iter().flatten().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.word_features.is_empty() && self.implications.is_empty()
    }

    /// Parses `word : feat1 feat2` and `feat1 => feat2` lines. Repeated
    /// entries accumulate.
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        let mut words: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut implications: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut last_line = 0;
        for line in syntax::lines(source) {
            let line = line?;
            last_line = line.number;
            if let Some((lhs, rhs)) = line.text.split_once("=>") {
                let from = lhs.trim();
                let targets: Vec<&str> = rhs.split_whitespace().collect();
                if from.split_whitespace().count() != 1 || targets.is_empty() {
                    return Err(ParseError::new(line.number, "expected `feature => feature ...`"));
                }
                implications
                    .entry(from.to_string())
                    .or_default()
                    .extend(targets.iter().map(|t| t.to_string()));
            } else if let Some((lhs, rhs)) = line.text.split_once(':') {
                let word = lhs.trim();
                let feats: Vec<&str> = rhs.split_whitespace().collect();
                if word.is_empty() || word.split_whitespace().count() != 1 || feats.is_empty() {
                    return Err(ParseError::new(line.number, "expected `word : feature ...`"));
                }
                if word.chars().any(char::is_uppercase) {
                    return Err(ParseError::new(line.number, "lexicon words must be lowercase"));
                }
                words
                    .entry(word.to_string())
                    .or_default()
                    .extend(feats.iter().map(|f| f.to_string()));
            } else {
                return Err(ParseError::new(
                    line.number,
                    "expected `word : features` or `feature => feature`",
                ));
            }
        }
        FeatureLexicon::new(words, implications).map_err(|e| ParseError::new(last_line.max(1), e.to_string()))
    }
}

impl fmt::Display for FeatureLexicon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (word, feats) in &self.word_features {
            let list: Vec<&str> = feats.iter().map(String::as_str).collect();
            writeln!(f, "{word} : {}", list.join(" "))?;
        }
        for (from, to) in &self.implications {
            let list: Vec<&str> = to.iter().map(String::as_str).collect();
            writeln!(f, "{from} => {}", list.join(" "))?;
        }
        Ok(())
    }
}

fn valid_feature_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_')
}

fn close_into(feature: &str, implications: &BTreeMap<String, BTreeSet<String>>, out: &mut BTreeSet<String>) {
    if !out.insert(feature.to_string()) {
        return;
    }
    if let Some(next) = implications.get(feature) {
        for n in next {
            close_into(n, implications, out);
        }
    }
}

fn check_acyclic(implications: &BTreeMap<String, BTreeSet<String>>) -> Result<(), LexiconError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        node: &'a str,
        graph: &'a BTreeMap<String, BTreeSet<String>>,
        marks: &mut BTreeMap<&'a str, Mark>,
    ) -> Result<(), LexiconError> {
        match marks.get(node) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => return Err(LexiconError::Cycle(node.to_string())),
            None => {}
        }
        marks.insert(node, Mark::Active);
        if let Some(next) = graph.get(node) {
            for n in next {
                visit(n, graph, marks)?;
            }
        }
        marks.insert(node, Mark::Done);
        Ok(())
    }
    let mut marks = BTreeMap::new();
    for node in implications.keys() {
        visit(node, implications, &mut marks)?;
    }
    Ok(())
}
