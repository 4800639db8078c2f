use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::Content;
use crate::transduction::{Directive, Node, Pattern, TransductionConfig};

/// One problem found in a loaded pack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// What the problem is attached to, e.g. `schema pets` or `tree x`.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

impl Content {
    /// Cross-reference checks over the whole pack. An empty list means the
    /// pack is usable.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |subject: String, message: String| out.push(Violation { subject, message });

        check_roles(&self.roles, self, &mut push);

        for topic in &self.topics {
            match self.schemas.get(&topic.schema) {
                None => push(
                    format!("topic {}", topic.id),
                    format!("unknown schema {:?}", topic.schema),
                ),
                Some(schema) => {
                    if schema.topic.is_none() {
                        push(
                            format!("topic {}", topic.id),
                            format!("schema {:?} is not a topic schema", schema.name),
                        );
                    }
                    if schema.intensity.is_some_and(|t| t != topic.tier) {
                        push(
                            format!("topic {}", topic.id),
                            format!("tier {} disagrees with schema {:?}", topic.tier, schema.name),
                        );
                    }
                }
            }
        }

        for schema in self.schemas.values() {
            let subject = format!("schema {}", schema.name);
            for message in schema.violations() {
                push(subject.clone(), message);
            }
            for tree in schema.tree_names() {
                if !self.trees.contains(tree) {
                    push(subject.clone(), format!("unknown tree {tree:?}"));
                }
            }
            for say in schema.episodes.iter().filter_map(|e| e.as_say()) {
                for pattern in &say.answered {
                    for feature in pattern.unknown_features(&self.lexicon) {
                        push(subject.clone(), format!("unknown feature .{feature}"));
                    }
                }
            }
        }

        let mut references: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for tree in self.trees.iter() {
            let subject = format!("tree {}", tree.name);
            let refs = references.entry(tree.name.as_str()).or_default();
            tree.walk(|path, node| {
                let at = format!("{subject} node {path:?}");
                check_node(node, &at, self, &mut push, refs);
            });
        }
        for name in cycle_members(&references) {
            push(format!("tree {name}"), "subtree references form a cycle".to_string());
        }
        out
    }
}

fn check_roles(roles: &TransductionConfig, content: &Content, push: &mut impl FnMut(String, String)) {
    for (role, name) in [
        ("question", &roles.question_tree),
        ("answer", &roles.answer_tree),
        ("fallback", &roles.fallback_tree),
    ] {
        if !content.trees.contains(name) {
            push(format!("{role} tree"), format!("missing tree {name:?}"));
        }
    }
}

fn check_node<'a>(
    node: &'a Node,
    at: &str,
    content: &Content,
    push: &mut impl FnMut(String, String),
    refs: &mut BTreeSet<&'a str>,
) {
    check_pattern(&node.pattern, at, content, push);
    let arity = node.pattern.arity();
    match &node.directive {
        Some(Directive::Gist(t) | Directive::Reaction(t)) if t.max_ref() > arity => push(
            at.to_string(),
            format!(
                "template {t} refers to element {} of a {arity}-element pattern",
                t.max_ref()
            ),
        ),
        Some(Directive::Subtree { tree, scope }) => {
            refs.insert(tree.as_str());
            if !content.trees.contains(tree) {
                push(at.to_string(), format!("unknown subtree {tree:?}"));
            }
            if scope.is_some_and(|k| k > arity) {
                push(
                    at.to_string(),
                    format!("subtree scope {} beyond {arity}-element pattern", scope.unwrap_or(0)),
                );
            }
        }
        Some(Directive::SchemaRequest(name)) if !content.schemas.contains_key(name) => {
            push(at.to_string(), format!("unknown schema {name:?}"))
        }
        _ => {}
    }
}

fn check_pattern(pattern: &Pattern, at: &str, content: &Content, push: &mut impl FnMut(String, String)) {
    for feature in pattern.unknown_features(&content.lexicon) {
        push(at.to_string(), format!("unknown feature .{feature}"));
    }
}

/// Trees that can reach themselves through subtree references.
fn cycle_members<'a>(graph: &BTreeMap<&'a str, BTreeSet<&'a str>>) -> Vec<&'a str> {
    graph
        .keys()
        .filter(|&&start| {
            let mut stack: Vec<&str> = graph[start].iter().copied().collect();
            let mut seen = BTreeSet::new();
            while let Some(n) = stack.pop() {
                if n == start {
                    return true;
                }
                if seen.insert(n) {
                    stack.extend(graph.get(n).into_iter().flatten().copied());
                }
            }
            false
        })
        .copied()
        .collect()
}
