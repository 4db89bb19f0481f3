//! A seeded batch of mock participants, hinted against unhinted.
//!
//! Each mock participant knows 40 facts spread over four clusters of a
//! generated world and recalls only facts near its current cue; it asks
//! for a hint after ten features on one cue. Hints move the cue, so
//! hinted participants reach knowledge the unhinted ones never recall.
//!
//!     cargo run --release --example mock_batch

use std::sync::Arc;

use hintbandit::analysis::feature_count;
use hintbandit::session::StepClock;
use hintbandit::simulant::{run_batch, run_mock_session, BatchPlan};
use hintbandit::stats::median;
use hintbandit::synthetic::{SyntheticWorld, WorldSpec};
use hintbandit::{ArmId, Condition, Engine, Normalizer};

fn main() {
    let world = SyntheticWorld::generate(WorldSpec::default());
    let engine = Engine::new(Arc::new(world.word_store()), Arc::new(Normalizer::default()));
    let plan = BatchPlan::new(&["penguin"], &[Condition::Hinted, Condition::Unhinted], 50, 1);

    let records = run_batch(&plan, |cell| {
        let profile = world.desk_profile(&cell.concept, cell.seed);
        let mut clock = StepClock::new(1_700_000_000_000, 3_000);
        run_mock_session(&engine, cell.config(), &profile, &mut clock).expect("mock session runs")
    });

    println!("{:<9} {:>3} {:>15} {:>13}", "condition", "n", "median features", "median hints");
    for condition in [Condition::Hinted, Condition::Unhinted] {
        let cell: Vec<_> = records.iter().filter(|r| r.config.condition == condition).collect();
        let features: Vec<f64> = cell.iter().map(|r| feature_count(r) as f64).collect();
        let hints: Vec<f64> = cell.iter().map(|r| r.hints().count() as f64).collect();
        println!(
            "{:<9} {:>3} {:>15.1} {:>13.1}",
            condition.to_string(),
            cell.len(),
            median(&features).unwrap_or(f64::NAN),
            median(&hints).unwrap_or(f64::NAN),
        );
    }

    println!();
    println!("hints by arm (hinted sessions)");
    for arm in ArmId::ALL {
        let pulls = records.iter().flat_map(|r| r.hints()).filter(|h| h.arm == arm).count();
        let productive = records
            .iter()
            .flat_map(|r| r.hints())
            .filter(|h| h.arm == arm && h.loss.is_some_and(|l| l.value() == 0.0))
            .count();
        println!("  {:<10} {pulls:>5} pulls, {productive:>5} followed by a new feature", arm.as_str());
    }
}
