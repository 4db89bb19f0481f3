//! Seeded mock-simulant batches on the default synthetic world.

use std::sync::Arc;

use hintbandit::analysis::Corpus;
use hintbandit::session::StepClock;
use hintbandit::simulant::{run_batch, run_mock_session, BatchPlan};
use hintbandit::synthetic::{SyntheticWorld, WorldSpec};
use hintbandit::{Condition, Engine, Normalizer};

use super::T0;

pub struct World {
    pub world: SyntheticWorld,
    pub engine: Engine,
}

pub fn default_world() -> World {
    let world = SyntheticWorld::generate(WorldSpec::default());
    let engine = Engine::new(Arc::new(world.word_store()), Arc::new(Normalizer::default()));
    World { world, engine }
}

/// `n` hinted and `n` unhinted penguin sessions of desk-scale participants
/// (40 known facts, stuck after 10 features on a cue, always attending to
/// hints), one simulated action every 3 s.
pub fn desk_batch(w: &World, n: usize, seed: u64) -> Corpus {
    let plan = BatchPlan::new(&["penguin"], &[Condition::Hinted, Condition::Unhinted], n, seed);
    Corpus::new(run_batch(&plan, |cell| {
        let profile = w.world.desk_profile("penguin", cell.seed);
        let mut clock = StepClock::new(T0, 3000);
        run_mock_session(&w.engine, cell.config(), &profile, &mut clock).unwrap()
    }))
}

/// Sessions whose knowledge is spread over the twelve clusters nearest the
/// concept, with participants that type back three words of each hint
/// before resuming recall from the adopted cue.
pub fn curve_batch(w: &World, n: usize, seed: u64) -> Corpus {
    let plan = BatchPlan::new(&["penguin"], &[Condition::Hinted, Condition::Unhinted], n, seed);
    Corpus::new(run_batch(&plan, |cell| {
        let mut profile = w.world.focused_profile("penguin", 12, 2, cell.seed);
        profile.copy_hint_words = 3;
        let mut clock = StepClock::new(T0, 3000);
        run_mock_session(&w.engine, cell.config(), &profile, &mut clock).unwrap()
    }))
}
