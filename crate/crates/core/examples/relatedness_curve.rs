//! How related produced features are to a hint, before and after it.
//!
//! Mock participants that type back some of the hint words right after
//! each hint make the features at offsets 0..2 far closer to the hint than
//! features produced without hints; the effect fades as their cue drifts.
//! The z-scores are relative to the unhinted baseline for the same
//! concept, so features unrelated to the hint sit near 0.
//!
//!     cargo run --release --example relatedness_curve

use std::sync::Arc;

use hintbandit::analysis::{relatedness_curve, Corpus, DEFAULT_WINDOW};
use hintbandit::session::StepClock;
use hintbandit::simulant::{run_batch, run_mock_session, BatchPlan};
use hintbandit::synthetic::{SyntheticWorld, WorldSpec};
use hintbandit::{Condition, Engine, Normalizer};

fn main() {
    let world = SyntheticWorld::generate(WorldSpec::default());
    let normalizer = Arc::new(Normalizer::default());
    let engine = Engine::new(Arc::new(world.word_store()), normalizer.clone());
    let plan = BatchPlan::new(&["penguin"], &[Condition::Hinted, Condition::Unhinted], 60, 1);

    let records = run_batch(&plan, |cell| {
        let mut profile = world.focused_profile(&cell.concept, 12, 2, cell.seed);
        profile.copy_hint_words = 3;
        let mut clock = StepClock::new(1_700_000_000_000, 3_000);
        run_mock_session(&engine, cell.config(), &profile, &mut clock).expect("mock session runs")
    });
    let corpus = Corpus::new(records);

    let curve = relatedness_curve(&corpus, "penguin", world.space(), &normalizer, DEFAULT_WINDOW)
        .expect("both conditions present");
    println!("{:>6} {:>8} {:>6}", "offset", "mean z", "n");
    for p in &curve.points {
        let z = p.mean_z.map_or("-".to_string(), |z| format!("{z:.2}"));
        let bar = p.mean_z.map_or(String::new(), |z| "#".repeat((z.abs() * 4.0).round() as usize));
        println!("{:>6} {z:>8} {:>6}  {bar}", p.offset, p.n);
    }
}
