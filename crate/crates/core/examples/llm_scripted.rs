//! The LLM participant loop, offline.
//!
//! A scripted chat client stands in for the model. The session prints
//! every prompt the model would receive, how each reply was parsed, and
//! the resulting record. Swap `ScriptedChat` for `HttpChatClient` (with an
//! `LlmConfig` pointing at a chat-completions endpoint) to run it live.
//!
//!     cargo run --example llm_scripted

use std::sync::Arc;

use hintbandit::session::StepClock;
use hintbandit::simulant::{parse_llm_reply, run_llm_session, LlmConfig, ScriptedChat};
use hintbandit::synthetic::{SyntheticWorld, WorldSpec};
use hintbandit::{Condition, Engine, Normalizer, SessionConfig};

fn main() {
    let world = SyntheticWorld::generate(WorldSpec::default());
    let engine = Engine::new(Arc::new(world.word_store()), Arc::new(Normalizer::default()));

    let replies = [
        "1. has feathers\n2. cannot fly\n3. swims well\n4. lives in Antarctica\n5. eats fish\nGet Hints",
        "1. huddles for warmth\n2. lays eggs\n3. black and white\nGet Hints",
        "1. waddles\nGive Up",
    ];
    let client = ScriptedChat::replying(replies);
    let llm = LlmConfig::new("http://localhost/v1/chat/completions", "scripted");
    let config = SessionConfig::new("llm-demo", "penguin", Condition::Hinted, 7);
    let mut clock = StepClock::new(1_700_000_000_000, 1_000);
    let record = run_llm_session(&client, &llm, &engine, config, &mut clock).expect("session runs");

    for (turn, messages) in client.requests() {
        let prompt = &messages.last().expect("at least one message").content;
        println!("--- turn {turn} prompt ---\n{prompt}");
        println!("--- parsed reply ---\n{:?}\n", parse_llm_reply(replies[turn]));
    }

    println!("features: {}", record.features().count());
    for hint in record.hints() {
        println!(
            "hint {} from {:<9} loss {:?}: {}",
            hint.t,
            hint.arm.as_str(),
            hint.loss.map(|l| l.value()),
            hint.words.join(", ")
        );
    }
    println!("ended: {:?}", record.end().map(|e| e.reason));
}
