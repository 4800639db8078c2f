use std::fmt;

use super::{DialogueSchema, Episode, SayEpisode, TreePair};
use crate::syntax::{self, ParseError};
use crate::transduction::{tokenize, Pattern};

impl DialogueSchema {
    /// Parses a schema file; a file may hold several schemas.
    pub fn parse_schemas(source: &str) -> Result<Vec<DialogueSchema>, ParseError> {
        let mut schemas: Vec<DialogueSchema> = Vec::new();
        for line in syntax::lines(source) {
            let line = line?;
            let err = |m: String| ParseError::new(line.number, m);
            if line.depth == 0 {
                schemas.push(parse_header(line.text).map_err(err)?);
                continue;
            }
            let Some(schema) = schemas.last_mut() else {
                return Err(err("episode before any `schema` header".into()));
            };
            if line.depth != 1 {
                return Err(err("episodes are indented exactly one level".into()));
            }
            schema.episodes.push(parse_episode(line.text).map_err(err)?);
        }
        Ok(schemas)
    }
}

fn parse_header(text: &str) -> Result<DialogueSchema, String> {
    let mut words = text.split_whitespace();
    if words.next() != Some("schema") {
        return Err("expected `schema <name> ...`".into());
    }
    let name = words.next().ok_or("schema needs a name")?;
    let mut schema = DialogueSchema {
        name: name.to_string(),
        topic: None,
        intensity: None,
        episodes: Vec::new(),
    };
    for attr in words {
        match attr.split_once('=') {
            Some(("topic", id)) if !id.is_empty() => schema.topic = Some(id.to_string()),
            Some(("intensity", tier)) => schema.intensity = Some(tier.parse()?),
            _ => return Err(format!("unknown schema attribute {attr:?}")),
        }
    }
    Ok(schema)
}

fn parse_episode(text: &str) -> Result<Episode, String> {
    match text {
        "user" => return Ok(Episode::ExpectUser),
        "break" => return Ok(Episode::Break),
        "end" => return Ok(Episode::End),
        _ => {}
    }
    let rest = text
        .strip_prefix("say")
        .filter(|r| r.starts_with(char::is_whitespace))
        .ok_or_else(|| format!("unknown episode {text:?}"))?
        .trim_start();
    let (utterance, mut rest) = quoted(rest)?;
    let mut gist = None;
    let mut trees = None;
    let mut answered = Vec::new();
    loop {
        rest = rest.trim_start();
        if rest.is_empty() {
            break;
        }
        let (key, after) = rest
            .split_once('=')
            .ok_or_else(|| format!("expected key=value at {rest:?}"))?;
        let (value, tail) = if after.starts_with('(') {
            let close = after.find(')').ok_or("unclosed `(`")?;
            after.split_at(close + 1)
        } else {
            after.split_at(after.find(char::is_whitespace).unwrap_or(after.len()))
        };
        match key {
            "gist" => {
                let words = syntax::paren_group(value).ok_or("gist must be `( ... )`")?;
                gist = Some(tokenize(&words.join(" ")));
            }
            "trees" => {
                let (g, r) = value.split_once('/').ok_or("trees must be `<gistTree>/<reactTree>`")?;
                if g.is_empty() || r.is_empty() {
                    return Err("trees must be `<gistTree>/<reactTree>`".into());
                }
                trees = Some(TreePair {
                    gist: g.to_string(),
                    reaction: r.to_string(),
                });
            }
            "answered" => answered.push(Pattern::parse(value)?),
            other => return Err(format!("unknown say attribute {other:?}")),
        }
        rest = tail;
    }
    Ok(Episode::Say(SayEpisode {
        text: utterance,
        gist: gist.ok_or("say needs gist=( ... )")?,
        trees,
        answered,
    }))
}

/// Reads a double-quoted string with `\"` and `\\` escapes.
fn quoted(text: &str) -> Result<(String, &str), String> {
    let body = text.strip_prefix('"').ok_or("say text must be double-quoted")?;
    let mut out = String::new();
    let mut chars = body.char_indices();
    while let Some((i, c)) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some((_, e @ ('"' | '\\'))) => out.push(e),
                _ => return Err("bad escape in say text".into()),
            },
            '"' => return Ok((out, &body[i + 1..])),
            c => out.push(c),
        }
    }
    Err("unterminated say text".into())
}

impl fmt::Display for DialogueSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "schema {}", self.name)?;
        if let Some(topic) = &self.topic {
            write!(f, " topic={topic}")?;
        }
        if let Some(tier) = self.intensity {
            write!(f, " intensity={tier}")?;
        }
        writeln!(f)?;
        for ep in &self.episodes {
            match ep {
                Episode::Say(say) => {
                    let text = say.text.replace('\\', "\\\\").replace('"', "\\\"");
                    write!(
                        f,
                        "  say \"{text}\" gist=( {} )",
                        crate::transduction::join_tokens(&say.gist)
                    )?;
                    if let Some(t) = &say.trees {
                        write!(f, " trees={}/{}", t.gist, t.reaction)?;
                    }
                    for p in &say.answered {
                        write!(f, " answered={p}")?;
                    }
                    writeln!(f)?;
                }
                Episode::ExpectUser => writeln!(f, "  user")?,
                Episode::Break => writeln!(f, "  break")?,
                Episode::End => writeln!(f, "  end")?,
            }
        }
        Ok(())
    }
}
