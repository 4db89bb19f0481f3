//! The counterbalanced study plan and what the normalizer makes of phrases.
//!
//! Each participant does two practice sessions, then two main blocks; the
//! concept/condition pairing alternates across participants. Features are
//! compared as normalized word types, so "Has feathers" and "feathered"
//! count as the same idea while "swims" and "swimming" collapse too.
//!
//!     cargo run --example study_design

use hintbandit::session::{counterbalance_assign, practice_configs};
use hintbandit::{Condition, Normalizer};

fn main() {
    println!("{:<12} {:<8} {:<12} {:<9}", "participant", "block", "concept", "condition");
    for index in 0..4 {
        let pid = format!("p{index:03}");
        for practice in practice_configs(&pid, Condition::Hinted, index as u64) {
            println!("{pid:<12} {:<8} {:<12} {:<9}", "practice", practice.concept, practice.condition.to_string());
        }
        for block in counterbalance_assign(index) {
            println!("{pid:<12} {:<8} {:<12} {:<9}", block.block, block.concept, block.condition.to_string());
        }
    }

    let normalizer = Normalizer::default();
    println!();
    for phrase in ["Has feathers", "feathered", "It swims!", "swimming in the sea", "is a bird"] {
        println!("{phrase:<22} -> {:?}", normalizer.normalize_phrase(phrase));
    }
}
