//! Many simulated sessions over a concept × condition design.

use rayon::prelude::*;

use crate::session::{Condition, SessionConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BatchPlan {
    pub concepts: Vec<String>,
    pub conditions: Vec<Condition>,
    /// Sessions per (concept, condition) cell.
    pub n: usize,
    /// Session `i` of the whole batch gets seed `seed + i`.
    pub seed: u64,
    /// Sessions run concurrently; 0 means one per available core.
    pub parallelism: usize,
}

impl BatchPlan {
    pub fn new(concepts: &[&str], conditions: &[Condition], n: usize, seed: u64) -> Self {
        Self {
            concepts: concepts.iter().map(|c| c.to_string()).collect(),
            conditions: conditions.to_vec(),
            n,
            seed,
            parallelism: 0,
        }
    }

    /// Every session of the batch, grouped by concept, then condition.
    pub fn cells(&self) -> Vec<BatchCell> {
        let mut out = Vec::with_capacity(self.concepts.len() * self.conditions.len() * self.n);
        for concept in &self.concepts {
            for &condition in &self.conditions {
                for index in 0..self.n {
                    let seed = self.seed.wrapping_add(out.len() as u64);
                    out.push(BatchCell {
                        participant_id: format!("sim-{concept}-{condition}-{index:03}"),
                        concept: concept.clone(),
                        condition,
                        index,
                        seed,
                    });
                }
            }
        }
        out
    }
}

/// One session of a batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchCell {
    pub participant_id: String,
    pub concept: String,
    pub condition: Condition,
    /// Position within its (concept, condition) cell.
    pub index: usize,
    pub seed: u64,
}

impl BatchCell {
    pub fn config(&self) -> SessionConfig {
        SessionConfig::new(&self.participant_id, &self.concept, self.condition, self.seed)
    }
}

/// Runs `run` for every cell of `plan`, concurrently up to
/// `plan.parallelism`. Results come back in [`BatchPlan::cells`] order
/// regardless of scheduling.
pub fn run_batch<R, F>(plan: &BatchPlan, run: F) -> Vec<R>
where
    R: Send,
    F: Fn(&BatchCell) -> R + Sync,
{
    let cells = plan.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.parallelism)
        .build()
        .expect("thread pool");
    pool.install(|| cells.par_iter().map(&run).collect())
}
