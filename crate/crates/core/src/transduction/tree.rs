use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::lexicon::FeatureLexicon;
use super::matcher::{match_pattern, Captures};
use super::pattern::Pattern;
use super::template::{DeixisMap, Template, TemplateError};
use super::token::Token;
use crate::syntax::{self, Line, ParseError};

/// Subtree references deeper than this are treated as a cycle.
const MAX_SUBTREE_DEPTH: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Directive {
    Gist(Template),
    Reaction(Template),
    /// Continue in another tree, on the whole input or on one captured span.
    Subtree {
        tree: String,
        scope: Option<usize>,
    },
    SchemaRequest(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub pattern: Pattern,
    pub directive: Option<Directive>,
    pub children: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransductionTree {
    pub name: String,
    pub nodes: Vec<Node>,
}

/// What a tree produced for an input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Gist(Vec<String>),
    Reaction(Vec<String>),
    SchemaRequest(String),
}

/// An outcome and where in the content it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Firing {
    pub outcome: Outcome,
    /// Tree that owns the terminal that fired.
    pub tree: String,
    /// Child indices from the tree root down to the firing node.
    pub path: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransductionError {
    #[error("unknown transduction tree {0:?}")]
    UnknownTree(String),
    #[error("subtree references nest deeper than {MAX_SUBTREE_DEPTH} levels starting at {0:?}")]
    TooDeep(String),
    #[error("in tree {tree:?}: {source}")]
    Template {
        tree: String,
        #[source]
        source: TemplateError,
    },
}

/// A named collection of trees. Names are unique.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSet {
    trees: BTreeMap<String, TransductionTree>,
}

impl TreeSet {
    pub fn new() -> Self {
        TreeSet::default()
    }

    /// Adds a tree; returns the tree back if the name is taken.
    pub fn insert(&mut self, tree: TransductionTree) -> Result<(), TransductionTree> {
        if self.trees.contains_key(&tree.name) {
            return Err(tree);
        }
        self.trees.insert(tree.name.clone(), tree);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&TransductionTree> {
        self.trees.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.trees.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &TransductionTree> {
        self.trees.values()
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Runs `input` through tree `name`; returns the first terminal that fires.
    pub fn apply(
        &self,
        name: &str,
        input: &[Token],
        lexicon: &FeatureLexicon,
        deixis: &DeixisMap,
    ) -> Result<Option<Firing>, TransductionError> {
        self.apply_at_depth(name, input, lexicon, deixis, 0)
    }

    fn apply_at_depth(
        &self,
        name: &str,
        input: &[Token],
        lexicon: &FeatureLexicon,
        deixis: &DeixisMap,
        depth: usize,
    ) -> Result<Option<Firing>, TransductionError> {
        if depth > MAX_SUBTREE_DEPTH {
            return Err(TransductionError::TooDeep(name.to_string()));
        }
        let tree = self
            .get(name)
            .ok_or_else(|| TransductionError::UnknownTree(name.to_string()))?;
        let mut path = Vec::new();
        self.apply_nodes(tree, &tree.nodes, input, lexicon, deixis, depth, &mut path)
    }

    #[allow(clippy::too_many_arguments)]
    fn apply_nodes(
        &self,
        tree: &TransductionTree,
        nodes: &[Node],
        input: &[Token],
        lexicon: &FeatureLexicon,
        deixis: &DeixisMap,
        depth: usize,
        path: &mut Vec<usize>,
    ) -> Result<Option<Firing>, TransductionError> {
        for (i, node) in nodes.iter().enumerate() {
            let Some(captures) = match_pattern(&node.pattern, input, lexicon) else {
                continue;
            };
            path.push(i);
            // more specific children get the first chance
            if let Some(firing) = self.apply_nodes(tree, &node.children, input, lexicon, deixis, depth, path)? {
                return Ok(Some(firing));
            }
            if let Some(directive) = &node.directive {
                if let Some(firing) = self.fire(tree, directive, &captures, input, lexicon, deixis, depth, path)? {
                    return Ok(Some(firing));
                }
            }
            path.pop();
        }
        Ok(None)
    }

    #[allow(clippy::too_many_arguments)]
    fn fire(
        &self,
        tree: &TransductionTree,
        directive: &Directive,
        captures: &Captures,
        input: &[Token],
        lexicon: &FeatureLexicon,
        deixis: &DeixisMap,
        depth: usize,
        path: &[usize],
    ) -> Result<Option<Firing>, TransductionError> {
        let instantiate = |t: &Template| {
            t.instantiate(captures, deixis)
                .map_err(|source| TransductionError::Template {
                    tree: tree.name.clone(),
                    source,
                })
        };
        let outcome = match directive {
            Directive::Gist(t) => Outcome::Gist(instantiate(t)?),
            Directive::Reaction(t) => Outcome::Reaction(instantiate(t)?),
            Directive::SchemaRequest(name) => Outcome::SchemaRequest(name.clone()),
            Directive::Subtree { tree: sub, scope } => {
                let scoped = match scope {
                    None => input,
                    Some(k) => match captures.span(*k) {
                        Some(span) => span,
                        None => {
                            return Err(TransductionError::Template {
                                tree: tree.name.clone(),
                                source: TemplateError {
                                    template: format!("subtree {sub} on {k}"),
                                    index: *k,
                                    arity: captures.arity(),
                                },
                            })
                        }
                    },
                };
                return self.apply_at_depth(sub, scoped, lexicon, deixis, depth + 1);
            }
        };
        Ok(Some(Firing {
            outcome,
            tree: tree.name.clone(),
            path: path.to_vec(),
        }))
    }

    /// Parses a tree file. Several trees may share one file.
    pub fn parse_trees(source: &str) -> Result<Vec<TransductionTree>, ParseError> {
        let lines: Vec<Line> = syntax::lines(source).collect::<Result<_, _>>()?;
        let mut trees = Vec::new();
        let mut i = 0;
        while i < lines.len() {
            let line = lines[i];
            let Some(name) = line.text.strip_prefix("tree ") else {
                return Err(ParseError::new(line.number, "expected `tree <name>`"));
            };
            if line.depth != 0 {
                return Err(ParseError::new(line.number, "`tree` must not be indented"));
            }
            let name = name.trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(ParseError::new(line.number, "tree name must be one word"));
            }
            i += 1;
            let (nodes, directive) = parse_block(&lines, &mut i, 1)?;
            if let Some((number, _)) = directive {
                return Err(ParseError::new(number, "terminal directly under a tree header"));
            }
            if nodes.is_empty() {
                return Err(ParseError::new(line.number, format!("tree {name} has no nodes")));
            }
            trees.push(TransductionTree {
                name: name.to_string(),
                nodes,
            });
        }
        Ok(trees)
    }
}

type Block = (Vec<Node>, Option<(usize, Directive)>);

fn parse_block(lines: &[Line], i: &mut usize, depth: usize) -> Result<Block, ParseError> {
    let mut nodes = Vec::new();
    let mut directive: Option<(usize, Directive)> = None;
    while *i < lines.len() && lines[*i].depth >= depth {
        let line = lines[*i];
        if line.depth > depth {
            return Err(ParseError::new(line.number, "unexpected indentation"));
        }
        *i += 1;
        if let Some(rest) = line.text.strip_prefix("match") {
            let pattern = Pattern::parse(rest).map_err(|m| ParseError::new(line.number, m))?;
            let (children, own) = parse_block(lines, i, depth + 1)?;
            if children.is_empty() && own.is_none() {
                return Err(ParseError::new(line.number, "match has no children or terminal"));
            }
            nodes.push(Node {
                pattern,
                directive: own.map(|(_, d)| d),
                children,
            });
        } else {
            let parsed = parse_directive(line.text).map_err(|m| ParseError::new(line.number, m))?;
            if directive.is_some() {
                return Err(ParseError::new(line.number, "a node may have only one terminal"));
            }
            directive = Some((line.number, parsed));
        }
    }
    Ok((nodes, directive))
}

fn parse_directive(text: &str) -> Result<Directive, String> {
    let (keyword, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
    let rest = rest.trim();
    match keyword {
        "gist" => Template::parse(rest).map(Directive::Gist),
        "react" => Template::parse(rest).map(Directive::Reaction),
        "schema" => match rest.split_whitespace().collect::<Vec<_>>()[..] {
            [name] => Ok(Directive::SchemaRequest(name.to_string())),
            _ => Err("expected `schema <name>`".into()),
        },
        "subtree" => match rest.split_whitespace().collect::<Vec<_>>()[..] {
            [name] => Ok(Directive::Subtree {
                tree: name.to_string(),
                scope: None,
            }),
            [name, "on", k] => match k.parse::<usize>() {
                Ok(k) if k > 0 => Ok(Directive::Subtree {
                    tree: name.to_string(),
                    scope: Some(k),
                }),
                _ => Err(format!("bad subtree scope {k:?}")),
            },
            _ => Err("expected `subtree <name> [on K]`".into()),
        },
        other => Err(format!("unknown line keyword {other:?}")),
    }
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Directive::Gist(t) => write!(f, "gist {t}"),
            Directive::Reaction(t) => write!(f, "react {t}"),
            Directive::SchemaRequest(name) => write!(f, "schema {name}"),
            Directive::Subtree { tree, scope: None } => write!(f, "subtree {tree}"),
            Directive::Subtree { tree, scope: Some(k) } => write!(f, "subtree {tree} on {k}"),
        }
    }
}

impl fmt::Display for TransductionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_node(out: &mut String, node: &Node, depth: usize) {
            let pad = "  ".repeat(depth);
            let _ = writeln!(out, "{pad}match {}", node.pattern);
            for child in &node.children {
                write_node(out, child, depth + 1);
            }
            if let Some(d) = &node.directive {
                let _ = writeln!(out, "{pad}  {d}");
            }
        }
        let mut out = format!("tree {}\n", self.name);
        for node in &self.nodes {
            write_node(&mut out, node, 1);
        }
        f.write_str(&out)
    }
}

impl TransductionTree {
    /// Visits every node together with its child-index path.
    pub fn walk<'t>(&'t self, mut visit: impl FnMut(&[usize], &'t Node)) {
        fn go<'t>(nodes: &'t [Node], path: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize], &'t Node)) {
            for (i, node) in nodes.iter().enumerate() {
                path.push(i);
                visit(path, node);
                go(&node.children, path, visit);
                path.pop();
            }
        }
        go(&self.nodes, &mut Vec::new(), &mut visit);
    }

    /// Node at a child-index path.
    pub fn node_at(&self, path: &[usize]) -> Option<&Node> {
        let (first, rest) = path.split_first()?;
        let mut node = self.nodes.get(*first)?;
        for &i in rest {
            node = node.children.get(i)?;
        }
        Some(node)
    }
}
