//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.
//!
//!     cargo test -p gistline-core --test acceptance

mod common;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use gistline::evalkit::{self, Condition, Criterion, RatingSheet};
use gistline::feedback::{break_feedback, valence_band, AdviceId, AdviceTemplates, FeedbackConfig, SubsessionStats};
use gistline::service::{ManualClock, Service, ServiceConfig};
use gistline::transduction::{tokenize, tokenize_sentences, PatternElement, Token};
use gistline::{GistKind, OutputKind, Provenance};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn main() {
    let criteria: [Check; 9] = [
        ("matcher-oracle", matcher_oracle),
        ("star-wars-gist", star_wars_gist),
        ("skip-edit", skip_edit),
        ("curriculum", curriculum),
        ("session-shape", session_shape),
        ("determinism-replay", determinism_replay),
        ("aggregation", aggregation),
        ("rater-assignment", rater_assignment),
        ("feedback-bands", feedback_bands),
    ];
    let mut failed = 0;
    println!("\nrunning {} acceptance criteria", criteria.len());
    for (name, run) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name:<20} {detail} [{secs:.2}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name:<20} {detail} [{secs:.2}s]");
            }
        }
    }
    println!("\nacceptance: {} passed; {failed} failed\n", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

/// Exhaustive over short patterns and inputs, then seeded random cases up to
/// 6 elements and 8 tokens, for 10^6 comparisons in all.
fn matcher_oracle() -> Outcome {
    const TOTAL: usize = 1_000_000;
    let start = Instant::now();
    let lex = oracle_lexicon();
    let words: Vec<Token> = VOCAB.iter().map(|w| tok(w)).collect();
    let patterns = all_sequences(&element_alphabet(), 3);
    let inputs = all_sequences(&words, 3);
    let mut cases = 0;
    let mut matched = 0;
    for p in &patterns {
        for i in &inputs {
            matched += usize::from(compare(p, i, &lex)?);
            cases += 1;
        }
    }
    let exhaustive = cases;
    let mut rng = seeded(0x5eed);
    let mut long = 0;
    while cases < TOTAL {
        let (p, i): (Vec<PatternElement>, Vec<Token>) = random_case(&mut rng, 6, 8);
        long += usize::from(p.len() > 3 || i.len() > 3);
        matched += usize::from(compare(&p, &i, &lex)?);
        cases += 1;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    check(long > TOTAL / 4, || format!("only {long} long cases"))?;
    Ok(format!(
        "{cases} cases ({exhaustive} exhaustive, {} sampled), {matched} matches, 100% agreement on status and captures",
        cases - exhaustive
    ))
}

fn star_wars_gist() -> Outcome {
    let content = load_pack();
    let say = content
        .schemas
        .values()
        .flat_map(|s| s.episodes.iter())
        .filter_map(|e| e.as_say())
        .find(|s| s.text == "Have you seen the new Star Wars movie?")
        .ok_or("question not in the shipped pack")?;
    let trees = say.trees.as_ref().ok_or("question has no trees")?;
    let gists = content
        .transducer()
        .derive_gists(Some(&trees.gist), &tokenize_sentences("Yes, I have."))
        .map_err(|e| e.to_string())?;
    check(gists.len() == 1, || format!("{} gists", gists.len()))?;
    check(gists[0].kind == GistKind::Statement, || {
        format!("kind {:?}", gists[0].kind)
    })?;
    let text = gists[0].text();
    check(text == "i have seen the new star wars movie", || {
        format!("gist {text:?}")
    })?;
    Ok(format!("\"Yes, I have.\" -> \"{text}\""))
}

fn skip_edit() -> Outcome {
    const PET_QUESTION: &str = "Do you have any pets at the moment?";
    let engine = engine();
    let curriculum = default_curriculum(&engine, 11);
    let index = (1..=10)
        .find(|&i| curriculum.session(i).unwrap().iter().any(|t| t == "pets"))
        .ok_or("no pets session")?;
    let (mut state, first) = engine
        .start_session("u", &curriculum, index, 1)
        .map_err(|e| e.to_string())?;
    let mut said: Vec<String> = first.texts().map(String::from).collect();
    let mut volunteered = false;
    while !state.over {
        let reply = if said.last().is_some_and(|t| t.ends_with("Are you an animal person?")) {
            volunteered = true;
            "Yes, I have two dogs."
        } else {
            "That is nice."
        };
        let out = engine.handle_turn(&mut state, reply).map_err(|e| e.to_string())?;
        said.extend(out.texts().map(String::from));
    }
    check(volunteered, || "pets topic never opened".into())?;
    check(!said.iter().any(|t| t == PET_QUESTION), || {
        "pet question was asked".into()
    })?;
    let log = &state.plan.skip_log;
    check(log.len() == 1, || format!("{} skip records", log.len()))?;
    let gist: Vec<&str> = log[0].gist.iter().map(Token::as_str).collect();
    let gist = gist.join(" ");
    check(gist == "i have two dogs", || format!("logged gist {gist:?}"))?;
    let skipped = state.plan.episodes[log[0].index]
        .episode
        .as_say()
        .map(|s| s.text.as_str());
    check(skipped == Some(PET_QUESTION), || format!("skipped {skipped:?}"))?;
    Ok(format!("\"{PET_QUESTION}\" skipped, log gist \"{gist}\""))
}

fn curriculum() -> Outcome {
    let content = load_pack();
    let per_tier: Vec<usize> = [gistline::Tier::Easy, gistline::Tier::Medium, gistline::Tier::Hard]
        .iter()
        .map(|t| content.topics.iter().filter(|x| x.tier == *t).count())
        .collect();
    check(per_tier == [9, 15, 6], || format!("tiers {per_tier:?}"))?;
    let want = [1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 3.0, 3.0];
    let mut rng = seeded(7);
    let seeds: Vec<u64> = (0..2000)
        .chain((0..2000).map(|_| rand::Rng::random(&mut rng)))
        .collect();
    for &seed in &seeds {
        let c = gistline::compose_curriculum(&content.topics, seed).map_err(|e| e.to_string())?;
        check(
            c.sessions.len() == 10 && c.sessions.iter().all(|s| s.len() == 3),
            || format!("seed {seed}: shape"),
        )?;
        let mut ids: Vec<&String> = c.sessions.iter().flatten().collect();
        ids.sort();
        ids.dedup();
        check(ids.len() == 30, || {
            format!("seed {seed}: {} distinct topics", ids.len())
        })?;
        let means = c.mean_intensities(&content.topics).map_err(|e| e.to_string())?;
        check(means == want, || format!("seed {seed}: means {means:?}"))?;
    }
    Ok(format!(
        "{} seeds: 10x3, each topic once, means (1,1,1,2,2,2,2,2,3,3)",
        seeds.len()
    ))
}

fn session_shape() -> Outcome {
    let engine = engine();
    let mut sessions = 0;
    for seed in 0..5 {
        let curriculum = default_curriculum(&engine, seed);
        for index in 1..=10 {
            let outputs = run_session(&engine, &curriculum, index, seed, |b| mood_script(b).to_string());
            let items: Vec<_> = outputs.iter().flat_map(|o| &o.items).collect();
            let breaks: Vec<AdviceId> = items
                .iter()
                .filter(|i| i.kind == OutputKind::Feedback)
                .filter_map(|i| match i.provenance {
                    Provenance::Break { advice, .. } => Some(advice),
                    _ => None,
                })
                .collect();
            let summaries: Vec<_> = items.iter().filter(|i| i.kind == OutputKind::Summary).collect();
            let at = format!("seed {seed} session {index}");
            check(breaks.len() == 2, || format!("{at}: {} feedback items", breaks.len()))?;
            check(summaries.len() == 1, || format!("{at}: {} summaries", summaries.len()))?;
            let text = &summaries[0].text;
            let mut pos = 0;
            for id in &breaks {
                let marker = format!("({id})");
                let found = text[pos..]
                    .find(&marker)
                    .ok_or_else(|| format!("{at}: {marker} not in order"))?;
                pos += found + marker.len();
            }
            let counts = questions_per_subsession(&outputs);
            check(counts.len() == 3 && counts.iter().all(|n| (3..=5).contains(n)), || {
                format!("{at}: questions per subsession {counts:?}")
            })?;
            sessions += 1;
        }
    }
    Ok(format!(
        "{sessions} scripted sessions: 2 feedback, 1 summary with advice ids in order, 3-5 questions per subsession"
    ))
}

fn determinism_replay() -> Outcome {
    let engine = engine();
    let curriculum = default_curriculum(&engine, 21);
    let script = |b: usize| format!("{} What about you?", mood_script(b));
    let a = serde_json::to_string(&run_session(&engine, &curriculum, 5, 3, script)).unwrap();
    let b = serde_json::to_string(&run_session(&engine, &curriculum, 5, 3, script)).unwrap();
    check(a == b, || "engine outputs differ between identical runs".into())?;

    let config = || ServiceConfig {
        base_seed: Some(9),
        no_sync: true,
    };
    let replies = [
        "My name is Ann.",
        "I live alone.",
        "Where are you from?",
        "I like music.",
        "No.",
        "Yes, I do!",
    ];
    let transcript = |kill_at: Option<usize>| -> Result<(String, Vec<String>), String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let open = |clock: Arc<ManualClock>| Service::open(engine.clone(), dir.path(), config(), clock);
        let mut service = open(Arc::new(ManualClock::default())).map_err(|e| e.to_string())?;
        let user = service.create_user("ann").map_err(|e| e.to_string())?;
        let id = service.start_session(&user).map_err(|e| e.to_string())?.session_id;
        let mut outs = Vec::new();
        for (turn, text) in replies.iter().enumerate() {
            if Some(turn) == kill_at {
                // restart from the log; the clock keeps going where it was
                let resume = service.events(&user).map_err(|e| e.to_string())?.last().unwrap().at;
                drop(service);
                let clock = ManualClock::starting_at(resume + chrono::Duration::seconds(1));
                service = open(Arc::new(clock)).map_err(|e| e.to_string())?;
            }
            let out = service.post_turn(&id, text).map_err(|e| e.to_string())?;
            outs.push(serde_json::to_string(&out).unwrap());
        }
        Ok((service.transcript(&id).map_err(|e| e.to_string())?.to_string(), outs))
    };
    let (t1, o1) = transcript(None)?;
    let (t2, o2) = transcript(None)?;
    check(t1 == t2 && o1 == o2, || {
        "service transcripts differ between identical runs".into()
    })?;
    for kill_at in 1..replies.len() {
        let (_, o3) = transcript(Some(kill_at))?;
        check(o3 == o1, || {
            format!("restart before turn {kill_at} changed the responses")
        })?;
    }
    Ok(format!(
        "identical runs bit-identical ({} transcript bytes); restart before each of {} turns reproduces every next response",
        t1.len(),
        replies.len() - 1
    ))
}

// reported per-criterion means, in report order
const WOZ_MEANS: [f64; 6] = [3.7, 4.1, 3.8, 3.8, 3.8, 4.2];
const AUTO_MEANS: [f64; 6] = [3.9, 4.2, 4.3, 3.8, 3.9, 4.3];

fn aggregation() -> Outcome {
    check(
        Criterion::ALL
            == [
                Criterion::Natural,
                Criterion::Encouraging,
                Criterion::OnTrack,
                Criterion::Relevant,
                Criterion::Understanding,
                Criterion::Polite,
            ],
        || "criterion order".into(),
    )?;
    let (woz, auto) = (WOZ_MEANS, AUTO_MEANS);
    let mut consensus = Vec::new();
    for _ in 0..8 {
        consensus.push((Condition::Woz, woz));
        consensus.push((Condition::Auto, auto));
    }
    let report = evalkit::summarize(&consensus);
    let on_track = report
        .row(Criterion::OnTrack)
        .difference()
        .ok_or("no on-track difference")?;
    check((on_track - 0.5).abs() < 1e-9, || {
        format!("on-track difference {on_track}")
    })?;
    let (largest, diff) = report.largest_difference().ok_or("no differences")?;
    check(largest == Criterion::OnTrack, || {
        format!("largest difference is {largest}")
    })?;
    for row in &report.rows {
        if row.criterion != Criterion::OnTrack {
            let d = row.difference().unwrap();
            check(d < diff - 1e-9, || {
                format!("{} difference {d} ties on-track", row.criterion)
            })?;
        }
    }

    // synthetic sheets; expected values worked out by hand as fractions
    let sheet = |t: &str, r: &str, s: u8| RatingSheet {
        transcript: t.into(),
        rater: r.into(),
        scores: [s; 6],
    };
    let sheets = vec![
        sheet("w1", "a", 4),
        sheet("w1", "b", 4),
        sheet("w1", "c", 5),
        sheet("w2", "a", 2),
        sheet("w2", "d", 3),
        sheet("w3", "b", 5),
        sheet("w3", "c", 5),
        sheet("w3", "d", 5),
        sheet("x1", "a", 3),
        sheet("x1", "e", 3),
        sheet("x1", "f", 3),
        sheet("x2", "b", 4),
        sheet("x2", "e", 5),
    ];
    let conditions: BTreeMap<String, Condition> = [
        ("w1", Condition::Woz),
        ("w2", Condition::Woz),
        ("w3", Condition::Woz),
        ("x1", Condition::Auto),
        ("x2", Condition::Auto),
        ("unrated", Condition::Auto),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let report = evalkit::aggregate(&sheets, &conditions).map_err(|e| e.to_string())?;
    // WOZ consensus 13/3, 5/2, 5: mean 71/18, sample variance 181/108
    // AUTO consensus 3, 9/2: mean 15/4, sample variance 9/8
    let want = [
        (71.0 / 18.0, (181.0f64 / 108.0).sqrt()),
        (15.0 / 4.0, (9.0f64 / 8.0).sqrt()),
    ];
    for row in &report.rows {
        for ((stat, (mean, sd)), cond) in [&row.woz, &row.auto].into_iter().zip(want).zip(["WOZ", "AUTO"]) {
            let (m, s) = (stat.mean.unwrap_or(f64::NAN), stat.sd.unwrap_or(f64::NAN));
            check((m - mean).abs() < 1e-9 && (s - sd).abs() < 1e-9, || {
                format!("{} {cond}: mean {m} sd {s}, want {mean} {sd}", row.criterion)
            })?;
        }
    }
    check(report.warnings.iter().any(|w| w.contains("unrated")), || {
        format!("warnings {:?}", report.warnings)
    })?;
    Ok(format!(
        "reported means give on-track difference {on_track:.3} (largest); synthetic sheets match hand values within 1e-9; {}",
        report.sd
    ))
}

fn rater_assignment() -> Outcome {
    match evalkit::assign_raters(16, 6, 3, 3, 0) {
        Err(
            e @ evalkit::EvalError::Infeasible {
                demand: 48,
                capacity: 18,
            },
        ) => {
            let msg = e.to_string();
            check(msg.contains("48") && msg.contains("18"), || msg.clone())?;
        }
        other => return Err(format!("(16,6,3,3) gave {other:?}")),
    }
    for seed in 0..100u64 {
        let a = evalkit::assign_raters(16, 6, 3, 8, seed).map_err(|e| format!("seed {seed}: {e}"))?;
        a.check().map_err(|e| format!("seed {seed}: {e}"))?;
        // independent recount
        check(a.lists.len() == 6, || format!("seed {seed}: {} raters", a.lists.len()))?;
        let mut per = [0usize; 16];
        for list in &a.lists {
            check(list.len() <= 8, || format!("seed {seed}: load {}", list.len()))?;
            let mut sorted = list.clone();
            sorted.dedup();
            check(sorted.len() == list.len(), || format!("seed {seed}: repeat in a list"))?;
            for &t in list {
                per[t] += 1;
            }
        }
        check(per.iter().all(|&n| n >= 3), || format!("seed {seed}: coverage {per:?}"))?;
    }
    Ok("(16,6,3,3) rejected as 48 > 18; (16,6,3,8) valid for 100 seeds".into())
}

fn feedback_bands() -> Outcome {
    let config = FeedbackConfig::default();
    let cases = [
        (0.5, AdviceId::Praise),
        (0.0, AdviceId::NeutralTip),
        (-0.3, AdviceId::PositivityNudge),
        (0.2, AdviceId::Praise),
        (-0.2, AdviceId::PositivityNudge),
        (0.19999, AdviceId::NeutralTip),
        (-0.19999, AdviceId::NeutralTip),
    ];
    for (v, want) in cases {
        let got = valence_band(v, &config);
        check(got == want, || format!("{v} -> {got}, want {want}"))?;
    }
    // the same boundaries reached through recorded turns
    let lexicon = gistline::feedback::ValenceLexicon::parse("up\t0.2\ndown\t-0.2\n").unwrap();
    for (text, want) in [
        ("up", AdviceId::Praise),
        ("down", AdviceId::PositivityNudge),
        ("up down", AdviceId::NeutralTip),
    ] {
        let mut stats = SubsessionStats::default();
        stats.record_turn(&tokenize(text), &lexicon);
        let got = break_feedback(&stats, &config, &AdviceTemplates::default()).id;
        check(got == want, || format!("turn {text:?} -> {got}, want {want}"))?;
    }
    Ok("{+0.5, 0.0, -0.3} -> {praise, neutral-tip, positivity-nudge}; +0.2 praise, -0.2 positivity-nudge".into())
}
