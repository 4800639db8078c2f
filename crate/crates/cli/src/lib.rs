//! Command implementations behind the `gistline` binary.

pub mod http;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use gistline::content::ContentError;
use gistline::evalkit::{self, Condition, Transcript};
use gistline::feedback::ValenceLexicon;
use gistline::{compose_curriculum, Content, Engine, OutputKind};
use serde::Serialize;

/// Environment variable that, when set, replaces the `--store` directory.
pub const STORE_ENV: &str = "GISTLINE_STORE";

/// Loads a pack and refuses it if validation finds problems.
pub fn load_pack(dir: &Path) -> Result<Content> {
    let content = Content::load_pack(dir).map_err(|e: ContentError| anyhow::anyhow!(e))?;
    let problems = content.validate();
    if !problems.is_empty() {
        let list: Vec<String> = problems.iter().map(ToString::to_string).collect();
        bail!("pack {} is invalid:\n  {}", dir.display(), list.join("\n  "));
    }
    Ok(content)
}

/// The store directory: `GISTLINE_STORE` wins over the flag.
pub fn store_dir(flag: Option<PathBuf>, env: Option<std::ffi::OsString>) -> Result<PathBuf> {
    match (env.filter(|v| !v.is_empty()), flag) {
        (Some(v), _) => Ok(PathBuf::from(v)),
        (None, Some(p)) => Ok(p),
        (None, None) => bail!("no store directory: pass --store or set {STORE_ENV}"),
    }
}

pub fn validate(pack: &Path, out: &mut impl Write) -> Result<bool> {
    let content = Content::load_pack(pack)?;
    let problems = content.validate();
    for p in &problems {
        writeln!(out, "{p}")?;
    }
    writeln!(
        out,
        "{} topics, {} schemas, {} trees: {}",
        content.topics.len(),
        content.schemas.len(),
        content.trees.len(),
        if problems.is_empty() {
            "ok".to_string()
        } else {
            format!("{} problem(s)", problems.len())
        }
    )?;
    Ok(problems.is_empty())
}

#[derive(Debug, Serialize)]
struct ComposedSession<'a> {
    index: usize,
    topics: &'a [String],
    mean_intensity: f64,
}

#[derive(Debug, Serialize)]
struct Composed<'a> {
    seed: u64,
    sessions: Vec<ComposedSession<'a>>,
}

/// Writes the 10-session schedule for `seed` as JSON.
pub fn compose(pack: &Path, seed: u64, out: &Path) -> Result<()> {
    let content = load_pack(pack)?;
    let curriculum = compose_curriculum(&content.topics, seed)?;
    let means = curriculum.mean_intensities(&content.topics)?;
    let doc = Composed {
        seed,
        sessions: curriculum
            .sessions
            .iter()
            .zip(means)
            .enumerate()
            .map(|(i, (topics, mean_intensity))| ComposedSession {
                index: i + 1,
                topics,
                mean_intensity,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&doc)? + "\n";
    fs::write(out, json).with_context(|| format!("writing {}", out.display()))
}

pub struct ChatOptions {
    pub session: usize,
    pub seed: u64,
    pub show_gists: bool,
}

/// Runs one session in the terminal. Returns when the session ends or
/// input runs out.
pub fn chat(pack: &Path, opts: &ChatOptions, input: impl BufRead, out: &mut impl Write) -> Result<()> {
    let content = Arc::new(load_pack(pack)?);
    let engine = Engine::new(content.clone());
    let curriculum = compose_curriculum(&content.topics, opts.seed)?;
    let (mut state, first) = engine.start_session("local", &curriculum, opts.session, opts.seed)?;
    let titles: Vec<&str> = state
        .topics
        .iter()
        .map(|id| content.topic(id).map_or(id.as_str(), |t| t.title.as_str()))
        .collect();
    writeln!(out, "session {} of 10: {}", opts.session, titles.join(" / "))?;
    print_items(&first.items, out)?;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let output = engine.handle_turn(&mut state, &line)?;
        if opts.show_gists {
            let gists: Vec<String> = output
                .gists
                .iter()
                .map(|g| format!("{:?} {}", g.kind, g.text()))
                .collect();
            writeln!(out, "  [gists: {}]", gists.join("; "))?;
        }
        print_items(&output.items, out)?;
        if output.session_over() {
            break;
        }
    }
    Ok(())
}

fn print_items(items: &[gistline::OutputItem], out: &mut impl Write) -> Result<()> {
    for item in items {
        match item.kind {
            OutputKind::Utterance => writeln!(out, "agent> {}", item.text)?,
            OutputKind::Feedback => writeln!(out, "\n== feedback ==\n{}\n", item.text)?,
            OutputKind::Summary => writeln!(out, "\n== summary ==\n{}", item.text)?,
            OutputKind::SessionOver => writeln!(out, "== session over ==")?,
        }
        out.flush()?;
    }
    Ok(())
}

/// Transcript files (`*.tsv`, `*.txt`) in a directory, sorted by name.
pub fn read_transcripts(dir: &Path) -> Result<Vec<Transcript>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && matches!(p.extension().and_then(|e| e.to_str()), Some("tsv" | "txt")))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|path| {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("transcript");
            let source = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Transcript::parse(stem, &source).with_context(|| format!("parsing {}", path.display()))
        })
        .collect()
}

/// Scrubs every transcript in `input` into `output` as `<label>.tsv`, and
/// writes the label to original id table to `mapping`.
pub fn deid(names: &Path, input: &Path, output: &Path, mapping: &Path, seed: u64) -> Result<usize> {
    let names =
        evalkit::parse_names(&fs::read_to_string(names).with_context(|| format!("reading {}", names.display()))?);
    let transcripts = read_transcripts(input)?;
    let (scrubbed, map) = evalkit::deidentify_batch(&transcripts, &names, seed);
    fs::create_dir_all(output)?;
    for t in &scrubbed {
        fs::write(output.join(format!("{}.tsv", t.id)), t.to_string())?;
    }
    let mut table = String::from("label\toriginal\n");
    for (label, original) in &map {
        table.push_str(&format!("{label}\t{original}\n"));
    }
    fs::write(mapping, table)?;
    Ok(scrubbed.len())
}

/// Prints `rater,transcript` rows (both 1-based).
pub fn assign(t: usize, r: usize, coverage: usize, load: usize, seed: u64, out: &mut impl Write) -> Result<()> {
    let assignment = evalkit::assign_raters(t, r, coverage, load, seed)?;
    assignment.check().map_err(anyhow::Error::msg)?;
    writeln!(out, "rater,transcript")?;
    for (rater, list) in assignment.lists.iter().enumerate() {
        for transcript in list {
            writeln!(out, "{},{}", rater + 1, transcript + 1)?;
        }
    }
    Ok(())
}

pub struct AggregateOptions<'a> {
    pub sheets: &'a Path,
    pub transcripts: &'a Path,
    pub out: &'a Path,
    pub series: Option<&'a Path>,
    pub valence: Option<&'a Path>,
    pub window: usize,
}

/// Writes the ratings report to `out` and per-turn sentiment trajectories to
/// the series file (default: `<out stem>.series.csv` next to `out`).
pub fn aggregate(opts: &AggregateOptions<'_>, console: &mut impl Write) -> Result<()> {
    let sheets = evalkit::parse_sheets(&fs::read_to_string(opts.sheets)?)
        .with_context(|| format!("parsing {}", opts.sheets.display()))?;
    let transcripts = read_transcripts(opts.transcripts)?;
    let conditions: BTreeMap<String, Condition> = transcripts.iter().map(|t| (t.id.clone(), t.condition)).collect();
    let report = evalkit::aggregate(&sheets, &conditions)?;
    fs::write(opts.out, report.to_csv())?;
    write!(console, "{report}")?;

    let lexicon = match opts.valence {
        Some(path) => ValenceLexicon::parse(&fs::read_to_string(path)?)?,
        None => ValenceLexicon::default(),
    };
    let mut series = Vec::new();
    for t in &transcripts {
        series.push((t.id.as_str(), evalkit::sentiment_trajectory(t, &lexicon, opts.window)?));
    }
    let table = evalkit::write_trajectories(series.iter().map(|(id, points)| (*id, points.as_slice())));
    let series_path = match opts.series {
        Some(p) => p.to_path_buf(),
        None => {
            let stem = opts.out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
            opts.out.with_file_name(format!("{stem}.series.csv"))
        }
    };
    fs::write(&series_path, table)?;
    writeln!(console, "series written to {}", series_path.display())?;
    Ok(())
}
