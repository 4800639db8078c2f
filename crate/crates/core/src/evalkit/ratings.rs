use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Condition, EvalError};
use crate::syntax::ParseError;

pub const SHEET_HEADER: &str = "transcript,rater,natural,encouraging,on_track,relevant,understanding,polite";

/// How the report's standard deviations are computed.
pub const SD_LABEL: &str = "sample standard deviation (n-1) over per-transcript consensus scores";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Natural,
    Encouraging,
    OnTrack,
    Relevant,
    Understanding,
    Polite,
}

impl Criterion {
    pub const ALL: [Criterion; 6] = [
        Criterion::Natural,
        Criterion::Encouraging,
        Criterion::OnTrack,
        Criterion::Relevant,
        Criterion::Understanding,
        Criterion::Polite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Natural => "natural",
            Criterion::Encouraging => "encouraging",
            Criterion::OnTrack => "on-track",
            Criterion::Relevant => "relevant",
            Criterion::Understanding => "understanding",
            Criterion::Polite => "polite",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One rater's scores for one transcript, in [`Criterion::ALL`] order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingSheet {
    pub transcript: String,
    pub rater: String,
    pub scores: [u8; 6],
}

impl RatingSheet {
    pub fn score(&self, criterion: Criterion) -> u8 {
        self.scores[criterion as usize]
    }
}

/// Parses the comma-separated sheet table. The header line is required.
pub fn parse_sheets(source: &str) -> Result<Vec<RatingSheet>, ParseError> {
    let mut lines = source.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if normalize(header) == SHEET_HEADER => {}
        Some((i, _)) => return Err(ParseError::new(i + 1, format!("expected header `{SHEET_HEADER}`"))),
        None => return Err(ParseError::new(1, "empty rating sheet table")),
    }
    lines
        .map(|(i, line)| {
            let number = i + 1;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 8 {
                return Err(ParseError::new(
                    number,
                    format!("expected 8 fields, got {}", fields.len()),
                ));
            }
            if fields[0].is_empty() || fields[1].is_empty() {
                return Err(ParseError::new(number, "transcript and rater ids must be nonempty"));
            }
            let mut scores = [0u8; 6];
            for (slot, (field, criterion)) in scores.iter_mut().zip(fields[2..].iter().zip(Criterion::ALL)) {
                *slot = field
                    .parse::<u8>()
                    .ok()
                    .filter(|s| (1..=5).contains(s))
                    .ok_or_else(|| {
                        ParseError::new(
                            number,
                            format!("{criterion} score {field:?} is not an integer in 1..=5"),
                        )
                    })?;
            }
            Ok(RatingSheet {
                transcript: fields[0].to_string(),
                rater: fields[1].to_string(),
                scores,
            })
        })
        .collect()
}

pub fn write_sheets(sheets: &[RatingSheet]) -> String {
    let mut out = format!("{SHEET_HEADER}\n");
    for s in sheets {
        out.push_str(&format!("{},{}", s.transcript, s.rater));
        for score in s.scores {
            out.push_str(&format!(",{score}"));
        }
        out.push('\n');
    }
    out
}

fn normalize(header: &str) -> String {
    header.split(',').map(str::trim).collect::<Vec<_>>().join(",")
}

/// Per-transcript mean score for each criterion, keyed by transcript id.
///
/// Transcripts without sheets are absent from the result.
pub fn consensus(
    sheets: &[RatingSheet],
    transcripts: &BTreeMap<String, Condition>,
) -> Result<BTreeMap<String, [f64; 6]>, EvalError> {
    let mut sums: BTreeMap<&str, ([u32; 6], u32)> = BTreeMap::new();
    let mut seen: BTreeMap<(&str, &str), ()> = BTreeMap::new();
    for sheet in sheets {
        if !transcripts.contains_key(&sheet.transcript) {
            return Err(EvalError::UnknownTranscript(sheet.transcript.clone()));
        }
        if seen.insert((&sheet.transcript, &sheet.rater), ()).is_some() {
            return Err(EvalError::DuplicateSheet {
                transcript: sheet.transcript.clone(),
                rater: sheet.rater.clone(),
            });
        }
        let entry = sums.entry(&sheet.transcript).or_default();
        for (acc, &s) in entry.0.iter_mut().zip(&sheet.scores) {
            *acc += u32::from(s);
        }
        entry.1 += 1;
    }
    // integer sums keep the result independent of sheet order
    Ok(sums
        .into_iter()
        .map(|(id, (totals, n))| (id.to_string(), totals.map(|t| f64::from(t) / f64::from(n))))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionStat {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub n: usize,
}

impl ConditionStat {
    fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = (n > 0).then(|| values.iter().sum::<f64>() / n as f64);
        let sd = mean.filter(|_| n > 1).map(|m| {
            let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        });
        ConditionStat { mean, sd, n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub criterion: Criterion,
    pub woz: ConditionStat,
    pub auto: ConditionStat,
}

impl ReportRow {
    /// AUTO mean minus WOZ mean.
    pub fn difference(&self) -> Option<f64> {
        Some(self.auto.mean? - self.woz.mean?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub sd: String,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn row(&self, criterion: Criterion) -> &ReportRow {
        &self.rows[criterion as usize]
    }

    /// The criterion with the largest AUTO minus WOZ difference.
    pub fn largest_difference(&self) -> Option<(Criterion, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.difference().map(|d| (r.criterion, d)))
            .fold(None, |best, (c, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((c, d)),
            })
    }

    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_default();
        let mut out = format!("# sd: {}\n", self.sd);
        for w in &self.warnings {
            out.push_str(&format!("# warning: {w}\n"));
        }
        out.push_str("criterion,woz_mean,woz_sd,auto_mean,auto_sd,difference\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.criterion,
                cell(r.woz.mean),
                cell(r.woz.sd),
                cell(r.auto.mean),
                cell(r.auto.sd),
                cell(r.difference())
            ));
        }
        out
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |v: Option<f64>| v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
        writeln!(
            f,
            "{:<14} {:>8} {:>6} {:>9} {:>7} {:>6}",
            "criterion", "WOZ mean", "SD", "AUTO mean", "SD", "diff"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<14} {:>8} {:>6} {:>9} {:>7} {:>6}",
                r.criterion.as_str(),
                cell(r.woz.mean),
                cell(r.woz.sd),
                cell(r.auto.mean),
                cell(r.auto.sd),
                cell(r.difference())
            )?;
        }
        writeln!(f, "SD: {}", self.sd)?;
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Condition-level means and SDs from per-transcript consensus scores.
pub fn summarize(consensus: &[(Condition, [f64; 6])]) -> Report {
    let rows = Criterion::ALL
        .iter()
        .map(|&criterion| {
            let values = |cond: Condition| -> Vec<f64> {
                consensus
                    .iter()
                    .filter(|(c, _)| *c == cond)
                    .map(|(_, s)| s[criterion as usize])
                    .collect()
            };
            ReportRow {
                criterion,
                woz: ConditionStat::of(&values(Condition::Woz)),
                auto: ConditionStat::of(&values(Condition::Auto)),
            }
        })
        .collect();
    Report {
        rows,
        sd: SD_LABEL.to_string(),
        warnings: Vec::new(),
    }
}

/// Consensus per transcript, then condition-level summary. Transcripts
/// nobody rated are left out and named in the warnings.
pub fn aggregate(sheets: &[RatingSheet], transcripts: &BTreeMap<String, Condition>) -> Result<Report, EvalError> {
    let scores = consensus(sheets, transcripts)?;
    let rows: Vec<(Condition, [f64; 6])> = scores.iter().map(|(id, s)| (transcripts[id], *s)).collect();
    let mut report = summarize(&rows);
    for id in transcripts.keys().filter(|id| !scores.contains_key(*id)) {
        report
            .warnings
            .push(format!("transcript {id} has no rating sheets and was excluded"));
    }
    for cond in [Condition::Woz, Condition::Auto] {
        let n = rows.iter().filter(|(c, _)| *c == cond).count();
        if n < 2 {
            report
                .warnings
                .push(format!("{cond} has {n} rated transcript(s); its SD is undefined"));
        }
    }
    Ok(report)
}
