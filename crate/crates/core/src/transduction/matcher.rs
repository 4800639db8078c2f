use serde::{Deserialize, Serialize};

use super::lexicon::FeatureLexicon;
use super::pattern::Pattern;
use super::token::Token;

/// The token span consumed by each pattern element, in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Captures {
    pub spans: Vec<Vec<Token>>,
}

impl Captures {
    pub fn arity(&self) -> usize {
        self.spans.len()
    }

    /// Span for a 1-based element index.
    pub fn span(&self, index: usize) -> Option<&[Token]> {
        index.checked_sub(1).and_then(|i| self.spans.get(i)).map(Vec::as_slice)
    }

    /// The span lengths, one per element.
    pub fn lengths(&self) -> Vec<usize> {
        self.spans.iter().map(Vec::len).collect()
    }
}

/// Matches `pattern` against the whole of `input`.
///
/// Elements are assigned left to right; wildcards try their shortest
/// expansion first and grow on backtracking. The first complete assignment
/// wins, which makes the result the lexicographically smallest vector of
/// span lengths among all valid assignments.
pub fn match_pattern(pattern: &Pattern, input: &[Token], lexicon: &FeatureLexicon) -> Option<Captures> {
    let mut search = Search {
        pattern,
        input,
        lexicon,
        failed: vec![false; (pattern.arity() + 1) * (input.len() + 1)],
        ends: Vec::with_capacity(pattern.arity()),
    };
    if !search.run(0, 0) {
        return None;
    }
    let mut start = 0;
    let spans = search
        .ends
        .iter()
        .map(|&end| {
            let span = input[start..end].to_vec();
            start = end;
            span
        })
        .collect();
    Some(Captures { spans })
}

struct Search<'a> {
    pattern: &'a Pattern,
    input: &'a [Token],
    lexicon: &'a FeatureLexicon,
    // (element, position) states already known to fail
    failed: Vec<bool>,
    ends: Vec<usize>,
}

impl Search<'_> {
    fn state(&self, elem: usize, pos: usize) -> usize {
        elem * (self.input.len() + 1) + pos
    }

    fn run(&mut self, elem: usize, pos: usize) -> bool {
        let Some(element) = self.pattern.elements.get(elem) else {
            return pos == self.input.len();
        };
        let state = self.state(elem, pos);
        if self.failed[state] {
            return false;
        }
        let remaining = self.input.len() - pos;
        let (min, max) = element.span_bounds(remaining);
        if min > remaining {
            self.failed[state] = true;
            return false;
        }
        for len in min..=max {
            if min == 1 && !element.accepts(&self.input[pos], self.lexicon) {
                break;
            }
            self.ends.push(pos + len);
            if self.run(elem + 1, pos + len) {
                return true;
            }
            self.ends.pop();
        }
        self.failed[state] = true;
        false
    }
}
