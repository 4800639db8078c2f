//! Shared workloads for the criterion benches.

use std::path::PathBuf;
use std::sync::Arc;

use gistline::{Content, Engine};

pub fn default_pack_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../packs/default")
}

pub fn default_engine() -> Engine {
    let content = Content::load_pack(&default_pack_dir()).expect("default pack loads");
    Engine::new(Arc::new(content))
}

/// Replies cycled through by the session benchmark.
pub const REPLIES: [&str; 4] = [
    "Yes, I love it. It makes me so happy.",
    "I have two dogs and a cat.",
    "Where are you from?",
    "No, I am not sure about that.",
];
