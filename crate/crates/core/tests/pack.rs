use std::path::PathBuf;
use std::sync::Arc;

use gistline::{compose_curriculum, Content, Engine, GistKind, OutputKind, Tier};

fn pack_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../packs/default")
}

fn load() -> Content {
    Content::load_pack(&pack_dir()).expect("default pack loads")
}

#[test]
fn default_pack_validates() {
    let content = load();
    let problems = content.validate();
    assert!(problems.is_empty(), "{problems:#?}");
}

#[test]
fn default_pack_has_ten_per_tier() {
    let content = load();
    let count = |t: Tier| content.topics.iter().filter(|x| x.tier == t).count();
    assert_eq!(content.topics.len(), 30);
    assert_eq!(count(Tier::Easy), 9);
    assert_eq!(count(Tier::Medium), 15);
    assert_eq!(count(Tier::Hard), 6);
}

#[test]
fn every_topic_schema_asks_three_to_five_questions() {
    let content = load();
    for topic in &content.topics {
        let schema = content.schema(&topic.schema).unwrap();
        let asks = schema.episodes.iter().filter(|e| e.as_say().is_some()).count();
        assert!((3..=5).contains(&asks), "{} has {asks}", topic.id);
    }
}

#[test]
fn write_then_load_round_trips() {
    let content = load();
    let dir = tempfile::tempdir().unwrap();
    content.write_pack(dir.path()).unwrap();
    let again = Content::load_pack(dir.path()).unwrap();
    assert_eq!(again.topics, content.topics);
    assert_eq!(again.schemas, content.schemas);
    assert_eq!(again.trees.len(), content.trees.len());
    for tree in content.trees.iter() {
        assert_eq!(again.trees.get(&tree.name), Some(tree));
    }
    assert_eq!(again.lexicon, content.lexicon);
    assert_eq!(again.valence, content.valence);
    assert_eq!(again.advice, content.advice);
    assert_eq!(again.persona, content.persona);
}

#[test]
fn sample_gists_from_topic_trees() {
    let content = load();
    let t = content.transducer();
    let gist = |tree: &str, text: &str| {
        let s = gistline::transduction::tokenize_sentences(text);
        t.derive_gists(Some(tree), &s)
            .unwrap()
            .into_iter()
            .map(|g| (g.kind, g.text()))
            .collect::<Vec<_>>()
    };
    assert_eq!(
        gist("the-arts-1-gist", "Yes, I have seen it."),
        [(GistKind::Statement, "i have seen the new star wars movie".to_string())]
    );
    assert_eq!(
        gist("pets-2-gist", "I have two dogs and a cat."),
        [(GistKind::Statement, "i have two dogs".to_string())]
    );
    assert_eq!(
        gist("where-from-1-gist", "I grew up in Ohio. Where did you grow up?"),
        [
            (GistKind::Statement, "i grew up in ohio".to_string()),
            (GistKind::Question, "where are you from".to_string()),
        ]
    );
}

#[test]
fn scripted_session_runs_to_the_end() {
    let content = Arc::new(load());
    let engine = Engine::new(content.clone());
    let curriculum = compose_curriculum(&content.topics, 7).unwrap();
    let (mut state, first) = engine.start_session("u", &curriculum, 1, 3).unwrap();
    assert!(!first.items.is_empty());
    let mut kinds = Vec::new();
    for _ in 0..40 {
        let out = engine.handle_turn(&mut state, "Yes, I like that a lot.").unwrap();
        kinds.extend(out.items.iter().map(|i| i.kind));
        if out.session_over() {
            break;
        }
    }
    assert!(state.over);
    assert_eq!(kinds.iter().filter(|k| **k == OutputKind::Feedback).count(), 2);
    assert_eq!(kinds.iter().filter(|k| **k == OutputKind::Summary).count(), 1);
    assert_eq!(kinds.last(), Some(&OutputKind::SessionOver));
}
