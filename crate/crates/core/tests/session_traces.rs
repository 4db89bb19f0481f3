//! Scripted session traces: loss assignment, replay and the record format.

mod common;

use common::{grid_engine, T0};
use hintbandit::bandit::Loss;
use hintbandit::session::{EndReason, Resolution, SessionError, SessionEvent};
use hintbandit::{Condition, Engine, SessionConfig, SessionRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hinted(seed: u64) -> SessionConfig {
    let mut c = SessionConfig::new("p01", "penguin", Condition::Hinted, seed);
    c.hint_size = 2;
    c
}

enum Step {
    F(&'static str),
    H,
}

/// Runs the steps one second apart and finalizes; returns hint losses.
fn run(engine: &Engine, steps: &[Step]) -> (SessionRecord, Vec<(Option<Loss>, Option<Resolution>)>) {
    let mut s = engine.start(hinted(11), T0).unwrap();
    let mut now = T0;
    for step in steps {
        now += 1000;
        match step {
            Step::F(p) => {
                s.submit_feature(p, now).unwrap();
            }
            Step::H => {
                s.request_hint(now).unwrap();
            }
        }
    }
    let record = s.finalize(now + 1000).unwrap();
    let losses = record.hints().map(|h| (h.loss, h.resolved_by)).collect();
    (record, losses)
}

use Step::*;

#[test]
fn hint_then_feature_then_hint() {
    let (_, l) = run(&grid_engine(), &[F("black feathers"), H, F("eats fish"), H]);
    assert_eq!(l[0], (Some(Loss::Zero), Some(Resolution::NextHint)));
}

#[test]
fn hint_then_hint() {
    let (_, l) = run(&grid_engine(), &[F("black feathers"), H, H]);
    assert_eq!(l[0], (Some(Loss::One), Some(Resolution::NextHint)));
}

#[test]
fn hint_then_duplicate_then_hint() {
    let (r, l) = run(&grid_engine(), &[F("black feathers"), H, F("Black feather!"), H]);
    let dup = r.features().nth(1).unwrap();
    assert!(dup.is_duplicate);
    assert_eq!(l[0], (Some(Loss::One), Some(Resolution::NextHint)));
}

#[test]
fn last_hint_resolved_at_session_end() {
    let (_, l) = run(&grid_engine(), &[F("black feathers"), H, F("swims")]);
    assert_eq!(l, vec![(Some(Loss::Zero), Some(Resolution::SessionEnd))]);
    let (_, l) = run(&grid_engine(), &[F("black feathers"), H]);
    assert_eq!(l, vec![(Some(Loss::One), Some(Resolution::SessionEnd))]);
}

#[test]
fn features_before_a_hint_do_not_count_for_it() {
    let (r, l) = run(
        &grid_engine(),
        &[F("black feathers"), F("cold ice"), H, H, F("lays eggs"), H],
    );
    assert_eq!(l[0].0, Some(Loss::One));
    assert_eq!(l[1].0, Some(Loss::Zero));
    assert_eq!(l[2].0, Some(Loss::One));
    let snapshot = r.bandit_final.as_ref().unwrap();
    let losses: Vec<Option<Loss>> = snapshot.pulls.iter().map(|p| p.loss).collect();
    assert_eq!(losses, vec![Some(Loss::One), Some(Loss::Zero), Some(Loss::One)]);
}

#[test]
fn unhinted_sessions_refuse_hints_and_have_no_bandit() {
    let engine = grid_engine();
    let mut s = engine
        .start(SessionConfig::new("p", "penguin", Condition::Unhinted, 1), T0)
        .unwrap();
    assert_eq!(s.request_hint(T0 + 1), Err(SessionError::Unhinted));
    let r = s.finalize(T0 + 2).unwrap();
    assert!(r.bandit_final.is_none());
    assert_eq!(r.end().unwrap().reason, EndReason::Finished);
}

const PHRASES: [&str; 12] = [
    "black feathers", "white belly", "eats fish", "eats krill", "swims", "lives on ice",
    "cold", "has wings", "Black feathers", "dives", "sea", "lays an egg",
];

/// A random but reproducible script of features, hints and an ending.
pub fn random_record(engine: &Engine, seed: u64) -> SessionRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let condition = if seed.is_multiple_of(3) { Condition::Unhinted } else { Condition::Hinted };
    let mut config = SessionConfig::new(&format!("p{seed}"), "penguin", condition, seed);
    config.hint_size = rng.random_range(1..4);
    let mut s = engine.start(config, T0).unwrap();
    let mut now = T0;
    for _ in 0..rng.random_range(0..25) {
        now += rng.random_range(0..5000);
        if condition == Condition::Hinted && rng.random_bool(0.3) {
            match s.request_hint(now) {
                Ok(_) | Err(SessionError::AllArmsUnavailable) => {}
                Err(e) => panic!("{e}"),
            }
        } else {
            let p = PHRASES[rng.random_range(0..PHRASES.len())];
            s.submit_feature(p, now).unwrap();
        }
    }
    let reason = [EndReason::Finished, EndReason::GaveUp, EndReason::Expired][rng.random_range(0..3)];
    s.finalize_with(now + 10, reason).unwrap()
}

#[test]
fn replay_reproduces_records_byte_for_byte() {
    let engine = grid_engine();
    for seed in 0..200 {
        let record = random_record(&engine, seed);
        let json = record.to_json_line();
        let parsed: SessionRecord = serde_json::from_str(&json).unwrap();
        let replayed = grid_engine().replay(&parsed).unwrap();
        assert_eq!(replayed.to_json_line(), json, "seed {seed}");
        assert_eq!(replayed, record, "seed {seed}");
    }
}

#[test]
fn records_read_back_from_jsonl_are_bit_identical() {
    let engine = grid_engine();
    for seed in 0..200 {
        let record = random_record(&engine, seed);
        let parsed: SessionRecord = serde_json::from_str(&record.to_json_line()).unwrap();
        assert_eq!(parsed, record, "seed {seed}");
    }
}

#[test]
fn replay_rejects_records_without_an_end() {
    let engine = grid_engine();
    let mut record = random_record(&engine, 1);
    record.events.retain(|e| !matches!(e, SessionEvent::End(_)));
    assert!(matches!(engine.replay(&record), Err(SessionError::Replay(_))));
}

/// Set `UPDATE_GOLDEN=1` to rewrite the fixture after inspecting a change.
#[test]
fn golden_record() {
    let (record, _) = run(
        &grid_engine(),
        &[F("Black feathers"), H, F("eats fish"), F("black feather"), H, H, F("swims in the sea")],
    );
    let line = record.to_json_line();
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/scripted_session.jsonl");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(path, format!("{line}\n")).unwrap();
    }
    let golden = std::fs::read_to_string(path).expect("golden fixture present");
    assert_eq!(golden.trim_end(), line);
}
