//! From a JSONL corpus to per-session CSV and summary statistics.
//!
//! Writes a small simulated corpus to a temporary file, loads it back the
//! way the `analyze` command does, and prints the per-session table, arm
//! preference and the weight/performance correlation.
//!
//!     cargo run --release --example analysis_export

use std::io::Write;
use std::sync::Arc;

use hintbandit::analysis::{arm_preference_summary, weight_performance_correlation, write_sessions_csv, Corpus};
use hintbandit::session::StepClock;
use hintbandit::simulant::{run_batch, run_mock_session, BatchPlan};
use hintbandit::synthetic::{SyntheticWorld, WorldSpec};
use hintbandit::{ArmId, Condition, Engine, Normalizer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = SyntheticWorld::generate(WorldSpec::default());
    let engine = Engine::new(Arc::new(world.word_store()), Arc::new(Normalizer::default()));
    let plan = BatchPlan::new(&["penguin", "journalist"], &[Condition::Hinted, Condition::Unhinted], 6, 100);
    let records = run_batch(&plan, |cell| {
        let profile = world.desk_profile(&cell.concept, cell.seed);
        let mut clock = StepClock::new(1_700_000_000_000, 3_000);
        run_mock_session(&engine, cell.config(), &profile, &mut clock)
    });

    let dir = std::env::temp_dir().join(format!("hintbandit-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("sessions.jsonl");
    let mut file = std::fs::File::create(&path)?;
    for record in records {
        writeln!(file, "{}", record?.to_json_line())?;
    }
    drop(file);

    let corpus = Corpus::load_jsonl(&path)?;
    println!("loaded {} records from {}\n", corpus.len(), path.display());
    write_sessions_csv(&corpus, std::io::stdout().lock())?;

    let preference = arm_preference_summary(&corpus);
    println!("\n{:<10} {:>12} {:>5}", "arm", "mean weight", "wins");
    for (i, arm) in preference.arms.iter().enumerate() {
        println!("{:<10} {:>12.3} {:>5}", arm.as_str(), preference.mean_final_weight[i], preference.wins[i]);
    }
    match weight_performance_correlation(&corpus, ArmId::Semantic) {
        Ok(c) => println!("\nsemantic weight vs feature count: r = {:.3}, p = {:.3}, n = {}", c.r, c.p_value, c.n),
        Err(e) => println!("\nsemantic weight vs feature count: {e}"),
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
