//! Content packs: topics, schemas, transduction trees and lexicons.
//!
//! A pack directory looks like this:
//!
//! ```text
//! topics.txt        id | title | tier | schema
//! trees/*.tree      transduction trees
//! schemas/*.schema  dialogue schemas
//! lexicon.txt       word features (optional)
//! valence.tsv       word<TAB>score (optional)
//! advice.txt        id | text (optional)
//! persona.txt       one closing line per row (optional)
//! ```

mod curriculum;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::feedback::{AdviceTemplates, ValenceLexicon};
use crate::schema::DialogueSchema;
use crate::syntax::{self, ParseError};
use crate::transduction::{DeixisMap, FeatureLexicon, Transducer, TransductionConfig, TreeSet};

pub use curriculum::{compose_curriculum, Curriculum, CurriculumError, SESSIONS, TOPICS_PER_SESSION};
pub use validate::Violation;

/// Emotional intensity of a topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Easy = 1,
    Medium = 2,
    Hard = 3,
}

impl Tier {
    pub fn level(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Easy => "easy",
            Tier::Medium => "medium",
            Tier::Hard => "hard",
        })
    }
}

impl FromStr for Tier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "easy" | "1" => Ok(Tier::Easy),
            "medium" | "2" => Ok(Tier::Medium),
            "hard" | "3" => Ok(Tier::Hard),
            other => Err(format!("unknown intensity tier {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub id: String,
    pub title: String,
    pub tier: Tier,
    pub schema: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ContentError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("duplicate {kind} name {name:?}")]
    Duplicate { kind: &'static str, name: String },
    #[error("no topics")]
    NoTopics,
}

/// Everything loaded from one pack.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Content {
    pub topics: Vec<Topic>,
    pub trees: TreeSet,
    pub schemas: BTreeMap<String, DialogueSchema>,
    pub lexicon: FeatureLexicon,
    pub valence: ValenceLexicon,
    pub advice: AdviceTemplates,
    pub persona: Vec<String>,
    pub deixis: DeixisMap,
    pub roles: TransductionConfig,
}

impl Content {
    pub fn topic(&self, id: &str) -> Option<&Topic> {
        self.topics.iter().find(|t| t.id == id)
    }

    pub fn schema(&self, name: &str) -> Option<&DialogueSchema> {
        self.schemas.get(name)
    }

    pub fn transducer(&self) -> Transducer<'_> {
        Transducer {
            trees: &self.trees,
            lexicon: &self.lexicon,
            deixis: &self.deixis,
            config: &self.roles,
        }
    }

    pub fn add_schema(&mut self, schema: DialogueSchema) -> Result<(), ContentError> {
        if self.schemas.contains_key(&schema.name) {
            return Err(ContentError::Duplicate {
                kind: "schema",
                name: schema.name,
            });
        }
        self.schemas.insert(schema.name.clone(), schema);
        Ok(())
    }

    pub fn add_trees_from(&mut self, source: &str) -> Result<(), ContentError> {
        for tree in TreeSet::parse_trees(source)? {
            self.trees.insert(tree).map_err(|t| ContentError::Duplicate {
                kind: "tree",
                name: t.name,
            })?;
        }
        Ok(())
    }

    pub fn add_schemas_from(&mut self, source: &str) -> Result<(), ContentError> {
        for schema in DialogueSchema::parse_schemas(source)? {
            self.add_schema(schema)?;
        }
        Ok(())
    }

    /// Loads a pack directory.
    pub fn load_pack(dir: &Path) -> Result<Content, ContentError> {
        let mut content = Content::default();

        let topics_path = dir.join("topics.txt");
        if topics_path.exists() {
            let source = read(&topics_path)?;
            content.topics = parse_topics(&source).map_err(|e| e.in_file(&topics_path))?;
        }
        if content.topics.is_empty() {
            return Err(ContentError::NoTopics);
        }
        for i in 0..content.topics.len() {
            if content.topics[..i].iter().any(|t| t.id == content.topics[i].id) {
                return Err(ContentError::Duplicate {
                    kind: "topic",
                    name: content.topics[i].id.clone(),
                });
            }
        }

        for path in files_with_extension(&dir.join("trees"), "tree")? {
            let source = read(&path)?;
            content.add_trees_from(&source).map_err(|e| locate(e, &path))?;
        }
        for path in files_with_extension(&dir.join("schemas"), "schema")? {
            let source = read(&path)?;
            content.add_schemas_from(&source).map_err(|e| locate(e, &path))?;
        }
        if let Some(source) = read_optional(&dir.join("lexicon.txt"))? {
            content.lexicon = FeatureLexicon::parse(&source).map_err(|e| e.in_file(&dir.join("lexicon.txt")))?;
        }
        if let Some(source) = read_optional(&dir.join("valence.tsv"))? {
            content.valence = ValenceLexicon::parse(&source).map_err(|e| e.in_file(&dir.join("valence.tsv")))?;
        }
        if let Some(source) = read_optional(&dir.join("advice.txt"))? {
            content.advice = AdviceTemplates::parse(&source).map_err(|e| e.in_file(&dir.join("advice.txt")))?;
        }
        if let Some(source) = read_optional(&dir.join("persona.txt"))? {
            content.persona = syntax::lines(&source)
                .map(|l| l.map(|l| l.text.to_string()))
                .collect::<Result<_, _>>()
                .map_err(|e| e.in_file(&dir.join("persona.txt")))?;
        }
        Ok(content)
    }

    /// Writes the content back out in pack layout, one file per tree and
    /// schema.
    pub fn write_pack(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir.join("trees"))?;
        fs::create_dir_all(dir.join("schemas"))?;
        let mut topics = String::new();
        for t in &self.topics {
            topics.push_str(&format!("{} | {} | {} | {}\n", t.id, t.title, t.tier, t.schema));
        }
        fs::write(dir.join("topics.txt"), topics)?;
        for tree in self.trees.iter() {
            fs::write(dir.join("trees").join(format!("{}.tree", tree.name)), tree.to_string())?;
        }
        for schema in self.schemas.values() {
            fs::write(
                dir.join("schemas").join(format!("{}.schema", schema.name)),
                schema.to_string(),
            )?;
        }
        fs::write(dir.join("lexicon.txt"), self.lexicon.to_string())?;
        fs::write(dir.join("valence.tsv"), self.valence.to_string())?;
        fs::write(dir.join("advice.txt"), self.advice.to_string())?;
        fs::write(
            dir.join("persona.txt"),
            self.persona.iter().map(|l| format!("{l}\n")).collect::<String>(),
        )?;
        Ok(())
    }
}

/// Parses `id | title | tier | schema` lines.
pub fn parse_topics(source: &str) -> Result<Vec<Topic>, ParseError> {
    syntax::lines(source)
        .map(|line| {
            let line = line?;
            let fields: Vec<&str> = line.text.split('|').map(str::trim).collect();
            let [id, title, tier, schema] = fields[..] else {
                return Err(ParseError::new(line.number, "expected `id | title | tier | schema`"));
            };
            if [id, title, schema].iter().any(|f| f.is_empty()) || id.contains(char::is_whitespace) {
                return Err(ParseError::new(
                    line.number,
                    "topic id, title and schema must be nonempty",
                ));
            }
            Ok(Topic {
                id: id.to_string(),
                title: title.to_string(),
                tier: tier.parse().map_err(|m| ParseError::new(line.number, m))?,
                schema: schema.to_string(),
            })
        })
        .collect()
}

fn read(path: &Path) -> Result<String, ContentError> {
    fs::read_to_string(path).map_err(|source| ContentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_optional(path: &Path) -> Result<Option<String>, ContentError> {
    if path.exists() {
        read(path).map(Some)
    } else {
        Ok(None)
    }
}

fn files_with_extension(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, ContentError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let entries = fs::read_dir(dir).map_err(|source| ContentError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    paths.sort();
    Ok(paths)
}

fn locate(err: ContentError, path: &Path) -> ContentError {
    match err {
        ContentError::Parse(e) => ContentError::Parse(e.in_file(path)),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiers() {
        assert_eq!("Easy".parse::<Tier>().unwrap(), Tier::Easy);
        assert_eq!("3".parse::<Tier>().unwrap().level(), 3);
        assert!("extreme".parse::<Tier>().is_err());
        assert!(Tier::Easy < Tier::Hard);
    }

    #[test]
    fn topic_lines() {
        let topics = parse_topics("# header\npets | Pets | easy | pets\n").unwrap();
        assert_eq!(topics[0].tier, Tier::Easy);
        let err = parse_topics("pets | Pets | easy\n").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn empty_dir_has_no_topics() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(Content::load_pack(dir.path()), Err(ContentError::NoTopics)));
    }

    #[test]
    fn duplicate_tree_names() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("topics.txt"), "a | A | easy | a\n").unwrap();
        fs::create_dir(dir.path().join("trees")).unwrap();
        let tree = "tree same\n  match ( * )\n    gist ( x )\n";
        fs::write(dir.path().join("trees/one.tree"), tree).unwrap();
        fs::write(dir.path().join("trees/two.tree"), tree).unwrap();
        let err = Content::load_pack(dir.path()).unwrap_err();
        assert!(matches!(err, ContentError::Duplicate { kind: "tree", ref name } if name == "same"));
    }

    #[test]
    fn parse_errors_name_the_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("topics.txt"), "a | A | easy | a\n").unwrap();
        fs::create_dir(dir.path().join("trees")).unwrap();
        fs::write(dir.path().join("trees/bad.tree"), "tree t\n  match ( x\n").unwrap();
        let err = Content::load_pack(dir.path()).unwrap_err().to_string();
        assert!(err.contains("bad.tree:2"), "{err}");
    }
}
