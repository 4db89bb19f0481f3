//! What each hint generator proposes for the same participant.
//!
//! A generated world stands in for real word vectors: clusters of words
//! around each concept. The participant has already produced a few words
//! from the concept's own cluster; the semantic arm stays close to them,
//! the diversity arm moves away from everything known, and the frequency
//! arm ignores geometry altogether.
//!
//!     cargo run --example hint_arms

use hintbandit::analysis::min_linkage_distance;
use hintbandit::arms::{DiversityArm, FrequencyArm, SemanticArm};
use hintbandit::synthetic::{SyntheticWorld, WorldSpec};
use hintbandit::{ArmContext, HintArm};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let world = SyntheticWorld::generate(WorldSpec::default());
    let store = world.word_store();
    let home = SyntheticWorld::concept_cluster("penguin").expect("builtin concept");
    let produced: Vec<&str> = world.clusters()[home].iter().take(4).map(String::as_str).collect();

    let arms: [&dyn HintArm; 3] = [&SemanticArm, &FrequencyArm, &DiversityArm::default()];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    println!("produced so far: {}", produced.join(", "));
    println!();
    println!("{:<10} {:>10}  words", "arm", "distance");
    for arm in arms {
        let mut ctx = ArmContext::new("penguin", &store);
        ctx.extend_said(produced.iter().copied(), &store);
        match arm.generate(&mut ctx, &store, 5, &mut rng) {
            Ok(hint) => {
                let d = hint
                    .words
                    .iter()
                    .filter_map(|w| min_linkage_distance(&[w], &produced, store.space()))
                    .sum::<f64>()
                    / hint.words.len() as f64;
                println!("{:<10} {d:>10.3}  {}", hint.arm.as_str(), hint.words.join(" "));
            }
            Err(e) => println!("{:<10} {e}", arm.id().as_str()),
        }
    }
    println!();
    println!("distance: mean over hint words of the distance to the nearest produced word");
}
