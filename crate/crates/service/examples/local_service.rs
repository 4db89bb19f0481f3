//! The session service in-process, driven over real HTTP.
//!
//! Starts the router on an ephemeral port with a generated world as its
//! word store, then plays one short hinted session the way the browser
//! page does: create, type features, ask for hints, finish.
//!
//!     cargo run -p hintbandit-service --example local_service

use std::future::IntoFuture;
use std::sync::Arc;

use hintbandit::synthetic::{SyntheticWorld, WorldSpec};
use hintbandit::{Engine, Normalizer, SessionRecord};
use hintbandit_service::api::AppState;
use hintbandit_service::config::SessionDefaults;
use hintbandit_service::corpus::CorpusWriter;
use hintbandit_service::router;
use serde_json::{json, Value};

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let state = Arc::new(AppState::new(
        CorpusWriter::new(dir.path().join("sessions.jsonl")),
        SessionDefaults::default(),
        Arc::new(hintbandit::session::unix_millis),
    ));
    let world = SyntheticWorld::generate(WorldSpec::default());
    state.set_engine(Engine::new(Arc::new(world.word_store()), Arc::new(Normalizer::default())));

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    tokio::spawn(axum::serve(listener, router(state, None)).into_future());
    println!("serving on {base}");

    let http = reqwest::Client::new();
    let created: Value = http
        .post(format!("{base}/sessions"))
        .json(&json!({"participant_id": "demo", "concept": "penguin", "condition": "hinted"}))
        .send()
        .await?
        .json()
        .await?;
    let id = created["session_id"].as_str().unwrap_or_default().to_string();
    println!("session {id}, seed {}", created["config"]["seed"]);

    let post = |path: &'static str, body: Value| {
        let req = http.post(format!("{base}/sessions/{id}/{path}")).json(&body);
        async move { req.send().await?.json::<Value>().await }
    };
    for phrase in ["has feathers", "cannot fly", "Has feathers"] {
        let event = post("features", json!({ "phrase": phrase })).await?;
        println!("feature {phrase:<14} duplicate={}", event["is_duplicate"]);
    }
    for _ in 0..2 {
        let hint = post("hints", json!({})).await?;
        println!("hint {} ({}): {}", hint["t"], hint["arm"], hint["words"]);
        post("features", json!({ "phrase": "eats fish" })).await?;
    }
    let record: SessionRecord = serde_json::from_value(post("finish", json!({})).await?)?;
    println!(
        "finished: {} features, {} hints, losses {:?}",
        record.features().count(),
        record.hints().count(),
        record.hints().map(|h| h.loss.map(|l| l.value())).collect::<Vec<_>>()
    );
    let saved = std::fs::read_to_string(dir.path().join("sessions.jsonl"))?;
    println!("persisted {} line(s)", saved.lines().count());
    Ok(())
}
