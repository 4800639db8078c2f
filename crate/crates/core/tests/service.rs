mod common;

use std::fs;
use std::path::Path;
use std::sync::Arc;

use chrono::{TimeZone, Utc};
use common::*;
use gistline::evalkit::{Speaker, Transcript};
use gistline::service::{EventKind, ManualClock, Service, ServiceConfig, ServiceError};
use gistline::Tier;

fn config() -> ServiceConfig {
    ServiceConfig {
        base_seed: Some(42),
        no_sync: true,
    }
}

fn open(root: &Path) -> Service {
    Service::open(engine(), root, config(), Arc::new(ManualClock::default())).unwrap()
}

/// A clock that starts well after anything an earlier run wrote.
fn later_clock() -> Arc<ManualClock> {
    Arc::new(ManualClock::starting_at(
        Utc.with_ymd_and_hms(2030, 1, 1, 0, 0, 0).unwrap().fixed_offset(),
    ))
}

fn reply(turn: usize) -> String {
    match turn % 4 {
        0 => "Yes, I really enjoy that. Where are you from?".into(),
        1 => "No, not really.".into(),
        2 => "I have two dogs and a garden.".into(),
        _ => "It was a hard year, I was sad.".into(),
    }
}

/// Runs the user's next session to the end and returns its id.
fn finish_session(service: &Service, user: &str) -> String {
    let start = service.start_session(user).unwrap();
    let mut turn = 0;
    loop {
        let out = service.post_turn(&start.session_id, &reply(turn)).unwrap();
        turn += 1;
        if out.session_over() {
            return start.session_id;
        }
        assert!(turn < 200);
    }
}

#[test]
fn create_user_validates_and_ids_differ() {
    let dir = tempfile::tempdir().unwrap();
    let service = open(dir.path());
    assert!(matches!(service.create_user("  "), Err(ServiceError::EmptyName)));
    let a = service.create_user("pat").unwrap();
    let b = service.create_user("pat").unwrap();
    assert_ne!(a, b);
    let p = service.progress(&a).unwrap();
    assert_eq!((p.sessions_completed, p.total_sessions), (0, 10));
    let next = p.next_session.unwrap();
    assert_eq!(next.index, 1);
    assert_eq!(next.topics.len(), 3);
    assert!(next.topics.iter().all(|t| t.tier == Tier::Easy));
    assert!(matches!(service.progress("nobody"), Err(ServiceError::UnknownUser(_))));
}

#[test]
fn ten_sessions_then_complete() {
    let dir = tempfile::tempdir().unwrap();
    let service = open(dir.path());
    let user = service.create_user("pat").unwrap();
    for i in 1..=10 {
        let id = finish_session(&service, &user);
        assert!(id.ends_with(&format!("-{i}")));
        assert_eq!(service.progress(&user).unwrap().sessions_completed, i);
    }
    let p = service.progress(&user).unwrap();
    assert_eq!(p.sessions_completed, 10);
    assert!(p.next_session.is_none());
    assert!(matches!(
        service.start_session(&user),
        Err(ServiceError::ProgramComplete(_))
    ));

    // the whole history replays
    drop(service);
    let again = Service::open(engine(), dir.path(), config(), later_clock()).unwrap();
    assert_eq!(again.progress(&user).unwrap(), p);
}

#[test]
fn errors_for_unknown_and_finished_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let service = open(dir.path());
    let user = service.create_user("pat").unwrap();
    assert!(matches!(
        service.post_turn("nope-1", "hi"),
        Err(ServiceError::UnknownSession(_))
    ));
    assert!(matches!(
        service.post_turn(&format!("{user}-1"), "hi"),
        Err(ServiceError::UnknownSession(_))
    ));
    let id = finish_session(&service, &user);
    assert!(matches!(
        service.post_turn(&id, "hello?"),
        Err(ServiceError::SessionOver(_))
    ));
}

#[test]
fn start_resumes_an_open_session() {
    let dir = tempfile::tempdir().unwrap();
    let service = open(dir.path());
    let user = service.create_user("pat").unwrap();
    let first = service.start_session(&user).unwrap();
    assert!(!first.resumed);
    let out = service.post_turn(&first.session_id, "My name is Pat.").unwrap();
    let again = service.start_session(&user).unwrap();
    assert!(again.resumed);
    assert_eq!(again.session_id, first.session_id);
    assert_eq!(again.output, out);
}

#[test]
fn same_seed_and_script_give_identical_transcripts() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let service = open(dir.path());
        let user = service.create_user("pat").unwrap();
        let mut out = Vec::new();
        for _ in 0..2 {
            let id = finish_session(&service, &user);
            out.push(service.transcript(&id).unwrap().to_string());
        }
        (user, out)
    };
    let (ua, a) = run();
    let (ub, b) = run();
    assert_eq!(ua, ub);
    assert_eq!(a, b);
    let parsed = Transcript::parse("x", &a[0]).unwrap();
    assert!(parsed.turns().iter().filter(|t| t.speaker == Speaker::Feedback).count() >= 3);
}

#[test]
fn restart_mid_session_gives_the_same_next_response() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let a = open(dir_a.path());
    let b = open(dir_b.path());
    let user = a.create_user("pat").unwrap();
    assert_eq!(b.create_user("pat").unwrap(), user);
    let id = a.start_session(&user).unwrap().session_id;
    b.start_session(&user).unwrap();
    for turn in 0..5 {
        assert_eq!(
            a.post_turn(&id, &reply(turn)).unwrap(),
            b.post_turn(&id, &reply(turn)).unwrap()
        );
    }
    // "kill" a and bring it back from its log
    drop(a);
    let a = Service::open(engine(), dir_a.path(), config(), later_clock()).unwrap();
    assert_eq!(a.session_state(&id).unwrap(), b.session_state(&id).unwrap());
    for turn in 5..8 {
        assert_eq!(
            a.post_turn(&id, &reply(turn)).unwrap(),
            b.post_turn(&id, &reply(turn)).unwrap()
        );
    }
}

fn events_path(root: &Path, user: &str) -> std::path::PathBuf {
    root.join("users").join(user).join("events.jsonl")
}

#[test]
fn crash_after_user_turn_is_repaired_on_open() {
    let dir = tempfile::tempdir().unwrap();
    let service = open(dir.path());
    let user = service.create_user("pat").unwrap();
    let id = service.start_session(&user).unwrap().session_id;
    service.post_turn(&id, "My name is Pat.").unwrap();
    let expected = service.post_turn(&id, "I live with my daughter.").unwrap();
    drop(service);

    // drop the final agent output, as if the process died right after
    // logging the user's turn
    let path = events_path(dir.path(), &user);
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    assert!(lines.last().unwrap().contains("\"agent-output\""));
    lines.pop();
    fs::write(&path, lines.join("\n") + "\n").unwrap();

    let service = Service::open(engine(), dir.path(), config(), later_clock()).unwrap();
    assert_eq!(service.last_output(&id).unwrap(), expected);
    let events = service.events(&user).unwrap();
    assert!(matches!(events.last().unwrap().kind, EventKind::AgentOutput { .. }));
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), text.lines().count());
}

#[test]
fn torn_last_line_is_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let service = open(dir.path());
    let user = service.create_user("pat").unwrap();
    let id = service.start_session(&user).unwrap().session_id;
    let expected = service.post_turn(&id, "My name is Pat.").unwrap();
    drop(service);
    let path = events_path(dir.path(), &user);
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("{\"at\":\"2024-01-01T09:");
    fs::write(&path, &text).unwrap();
    let service = Service::open(engine(), dir.path(), config(), later_clock()).unwrap();
    assert_eq!(service.last_output(&id).unwrap(), expected);
}

#[test]
fn tampered_output_is_a_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let service = open(dir.path());
    let user = service.create_user("pat").unwrap();
    let id = service.start_session(&user).unwrap().session_id;
    service.post_turn(&id, "My name is Pat.").unwrap();
    drop(service);
    let path = events_path(dir.path(), &user);
    let text = fs::read_to_string(&path).unwrap().replace("pleasure", "delight");
    fs::write(&path, text).unwrap();
    let err = Service::open(engine(), dir.path(), config(), later_clock()).unwrap_err();
    assert!(matches!(err, ServiceError::ReplayDivergence { .. }), "{err}");
}

#[test]
fn crash_before_session_ended_marker_is_repaired() {
    let dir = tempfile::tempdir().unwrap();
    let service = open(dir.path());
    let user = service.create_user("pat").unwrap();
    let id = finish_session(&service, &user);
    drop(service);
    let path = events_path(dir.path(), &user);
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    assert!(lines.last().unwrap().contains("\"session-ended\""));
    lines.pop();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let service = Service::open(engine(), dir.path(), config(), later_clock()).unwrap();
    assert_eq!(service.progress(&user).unwrap().sessions_completed, 1);
    assert!(matches!(
        service.post_turn(&id, "hi"),
        Err(ServiceError::SessionOver(_))
    ));
}

#[test]
fn transcript_lists_every_turn_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let service = open(dir.path());
    let user = service.create_user("pat").unwrap();
    let id = finish_session(&service, &user);
    let t = service.transcript(&id).unwrap();
    assert_eq!(t.id, id);
    assert!(t.turns().iter().enumerate().all(|(i, turn)| turn.index == i));
    assert!(t.turns().windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
    assert_eq!(t.turns()[0].speaker, Speaker::Agent);
    assert_eq!(t.turns().last().unwrap().speaker, Speaker::Feedback);
    let users = t.user_turns().count();
    assert_eq!(users, service.session_state(&id).unwrap().turns);
}

#[test]
fn concurrent_sessions_do_not_interfere() {
    let dir = tempfile::tempdir().unwrap();
    let service = Arc::new(open(dir.path()));
    let users: Vec<String> = (0..4).map(|i| service.create_user(&format!("u{i}")).unwrap()).collect();
    let handles: Vec<_> = users
        .iter()
        .cloned()
        .map(|user| {
            let service = service.clone();
            std::thread::spawn(move || {
                let id = finish_session(&service, &user);
                service.transcript(&id).unwrap().turns().len()
            })
        })
        .collect();
    for h in handles {
        assert!(h.join().unwrap() > 10);
    }

    // many posts to one session from several threads are applied one at a time
    let user = service.create_user("busy").unwrap();
    let id = service.start_session(&user).unwrap().session_id;
    let posts: Vec<_> = (0..6)
        .map(|_| {
            let service = service.clone();
            let id = id.clone();
            std::thread::spawn(move || service.post_turn(&id, "Fine.").is_ok())
        })
        .collect();
    let ok = posts.into_iter().map(|h| h.join().unwrap()).filter(|&b| b).count();
    assert_eq!(service.session_state(&id).unwrap().turns, ok);
    drop(service);
    let reopened = Service::open(engine(), dir.path(), config(), later_clock()).unwrap();
    assert_eq!(reopened.session_state(&id).unwrap().turns, ok);
}

#[test]
fn star_wars_turn_through_the_service() {
    let dir = tempfile::tempdir().unwrap();
    let service = open(dir.path());
    let user = service.create_user("pat").unwrap();
    for _ in 0..10 {
        let start = service.start_session(&user).unwrap();
        let mut last = start.output;
        loop {
            if last.texts().any(|t| t == "Have you seen the new Star Wars movie?") {
                let out = service.post_turn(&start.session_id, "Yes, I have.").unwrap();
                assert_eq!(out.gists[0].text(), "i have seen the new star wars movie");
                let texts: Vec<&str> = out.texts().collect();
                assert_eq!(
                    texts[0],
                    "Wasn't it exciting? My granddaughter took me and I loved every minute."
                );
                assert_eq!(texts[1], "What kind of music do you like?");
                return;
            }
            if last.session_over() {
                break;
            }
            last = service.post_turn(&start.session_id, "Okay.").unwrap();
        }
    }
    panic!("the arts topic never came up");
}
