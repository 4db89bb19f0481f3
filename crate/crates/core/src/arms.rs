//! The hint generators the bandit chooses between.
//!
//! Each arm maps the session history held in an [`ArmContext`] to a list of
//! at most `size` new words. Arms are stateless: everything they remember
//! (words said, words heard, semantic sources consumed) lives in the
//! context, and all randomness comes from the caller's RNG.
//!
//! Exclusions are the same for every arm: a hint never contains a word the
//! participant already produced or has already been shown.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::index;
use rand::Rng;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingSpace, StoreError, WordId, WordStore};

pub const DEFAULT_HINT_SIZE: usize = 5;
pub const DEFAULT_POOL_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArmId {
    Semantic,
    Frequency,
    Diversity,
}

impl ArmId {
    pub const ALL: [ArmId; 3] = [ArmId::Semantic, ArmId::Frequency, ArmId::Diversity];

    pub fn as_str(self) -> &'static str {
        match self {
            ArmId::Semantic => "semantic",
            ArmId::Frequency => "frequency",
            ArmId::Diversity => "diversity",
        }
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ArmId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ArmId::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown arm `{s}`"))
    }
}

/// The arm cannot produce a hint from the current context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("{arm} arm has no usable input")]
pub struct ArmUnavailable {
    pub arm: ArmId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hint {
    pub arm: ArmId,
    pub words: Vec<String>,
}

/// Per-session history visible to the arms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ArmContext {
    pub concept: String,
    /// Word types produced by the participant that are in the candidate vocabulary.
    pub said: BTreeSet<String>,
    /// Every word shown so far, seeded with the concept when it is a candidate.
    pub heard: BTreeSet<String>,
    /// Semantic-arm sources already used.
    pub removed_from_said: BTreeSet<String>,
}

impl ArmContext {
    pub fn new(concept: &str, store: &WordStore) -> Self {
        let concept = concept.to_lowercase();
        let mut heard = BTreeSet::new();
        if store.candidates().contains(&concept) {
            heard.insert(concept.clone());
        }
        Self {
            concept,
            heard,
            ..Self::default()
        }
    }

    /// Adds produced words, keeping only those in the candidate vocabulary.
    /// Returns the words that were new to `said`.
    pub fn extend_said<'a>(
        &mut self,
        words: impl IntoIterator<Item = &'a str>,
        store: &WordStore,
    ) -> Vec<String> {
        let mut added = Vec::new();
        for w in words {
            if store.candidates().contains(w) && self.said.insert(w.to_string()) {
                added.push(w.to_string());
            }
        }
        added
    }

    pub fn is_excluded(&self, word: &str) -> bool {
        self.said.contains(word) || self.heard.contains(word)
    }

    fn remaining_candidates<'s>(&'s self, store: &'s WordStore) -> impl Iterator<Item = usize> + 's {
        let vocab = store.candidates();
        (0..vocab.len()).filter(move |&i| !self.is_excluded(vocab.word(i)))
    }
}

/// A hint generator. Adding an arm means implementing this trait and
/// registering it in an [`ArmSet`].
pub trait HintArm: Send + Sync {
    fn id(&self) -> ArmId;

    /// Produces a hint and records its words in `ctx.heard`. On
    /// [`ArmUnavailable`] the context is left untouched.
    fn generate(
        &self,
        ctx: &mut ArmContext,
        store: &WordStore,
        size: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Hint, ArmUnavailable>;
}

/// Nearest neighbors of the least frequent not-yet-used said word.
#[derive(Debug, Clone, Copy, Default)]
pub struct SemanticArm;

/// Frequency-proportional sampling without replacement.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrequencyArm;

/// Squared-distance weighted sampling away from everything known.
#[derive(Debug, Clone, Copy)]
pub struct DiversityArm {
    pub pool_cap: usize,
}

impl Default for DiversityArm {
    fn default() -> Self {
        Self {
            pool_cap: DEFAULT_POOL_CAP,
        }
    }
}

impl HintArm for SemanticArm {
    fn id(&self) -> ArmId {
        ArmId::Semantic
    }

    fn generate(
        &self,
        ctx: &mut ArmContext,
        store: &WordStore,
        size: usize,
        _rng: &mut dyn RngCore,
    ) -> Result<Hint, ArmUnavailable> {
        semantic_pull(ctx, store, size)
    }
}

impl HintArm for FrequencyArm {
    fn id(&self) -> ArmId {
        ArmId::Frequency
    }

    fn generate(
        &self,
        ctx: &mut ArmContext,
        store: &WordStore,
        size: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Hint, ArmUnavailable> {
        frequency_pull(ctx, store, size, rng)
    }
}

impl HintArm for DiversityArm {
    fn id(&self) -> ArmId {
        ArmId::Diversity
    }

    fn generate(
        &self,
        ctx: &mut ArmContext,
        store: &WordStore,
        size: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Hint, ArmUnavailable> {
        diversity_pull(ctx, store, size, self.pool_cap, rng)
    }
}

/// Ordered arm registry; bandit arm `i` is `arms()[i]`.
pub struct ArmSet {
    arms: Vec<Box<dyn HintArm>>,
}

impl fmt::Debug for ArmSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.arms.iter().map(|a| a.id())).finish()
    }
}

impl ArmSet {
    pub fn empty() -> Self {
        Self { arms: Vec::new() }
    }

    /// Semantic, Frequency, Diversity, in that order.
    pub fn standard(pool_cap: usize) -> Self {
        Self::empty()
            .with(SemanticArm)
            .with(FrequencyArm)
            .with(DiversityArm { pool_cap })
    }

    pub fn with(mut self, arm: impl HintArm + 'static) -> Self {
        self.arms.push(Box::new(arm));
        self
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn get(&self, i: usize) -> &dyn HintArm {
        self.arms[i].as_ref()
    }

    pub fn ids(&self) -> Vec<ArmId> {
        self.arms.iter().map(|a| a.id()).collect()
    }

    pub fn index_of(&self, id: ArmId) -> Option<usize> {
        self.arms.iter().position(|a| a.id() == id)
    }
}

/// Semantic arm: take the least frequent said word not used as a source
/// before (ties lexicographic) and return its `size` nearest candidates
/// outside said and heard.
pub fn semantic_pull(
    ctx: &mut ArmContext,
    store: &WordStore,
    size: usize,
) -> Result<Hint, ArmUnavailable> {
    let unavailable = ArmUnavailable {
        arm: ArmId::Semantic,
    };
    let source = ctx
        .said
        .iter()
        .filter(|w| !ctx.removed_from_said.contains(*w))
        .min_by_key(|w| (store.frequencies().count(w).unwrap_or(u64::MAX), w.as_str()))
        .cloned()
        .ok_or(unavailable)?;
    let words = store
        .nearest_neighbors_where(&source, size, |w| ctx.is_excluded(w))
        .map_err(|_| unavailable)?;
    if words.is_empty() {
        return Err(unavailable);
    }
    ctx.removed_from_said.insert(source);
    ctx.heard.extend(words.iter().cloned());
    Ok(Hint {
        arm: ArmId::Semantic,
        words,
    })
}

/// Frequency arm: draw `size` words without replacement, each draw
/// proportional to corpus count among the remaining candidates.
pub fn frequency_pull(
    ctx: &mut ArmContext,
    store: &WordStore,
    size: usize,
    rng: &mut dyn RngCore,
) -> Result<Hint, ArmUnavailable> {
    let vocab = store.candidates();
    let mut pool: Vec<(usize, u64)> = ctx
        .remaining_candidates(store)
        .map(|i| (i, vocab.count(i)))
        .collect();
    if pool.is_empty() {
        return Err(ArmUnavailable {
            arm: ArmId::Frequency,
        });
    }
    let words: Vec<String> = if pool.len() <= size {
        pool.iter().map(|(i, _)| vocab.word(*i).to_string()).collect()
    } else {
        let mut total: u64 = pool.iter().map(|(_, c)| c).sum();
        let mut picked = Vec::with_capacity(size);
        for _ in 0..size {
            let mut r = rng.random_range(0..total);
            let pos = pool
                .iter()
                .position(|(_, c)| {
                    if r < *c {
                        true
                    } else {
                        r -= c;
                        false
                    }
                })
                .expect("r < total");
            let (i, c) = pool.remove(pos);
            total -= c;
            picked.push(vocab.word(i).to_string());
        }
        picked
    };
    ctx.heard.extend(words.iter().cloned());
    Ok(Hint {
        arm: ArmId::Frequency,
        words,
    })
}

/// Diversity arm: k-means++ style seeding over the remaining candidates.
///
/// The pool is subsampled uniformly to `pool_cap` words when larger. Each
/// of the `size` draws picks a pool word with probability proportional to
/// its squared distance to the nearest known word (said, heard, and words
/// drawn so far). If nothing is known yet one uniformly chosen pool word
/// seeds the known set. Output order is draw order.
pub fn diversity_pull(
    ctx: &mut ArmContext,
    store: &WordStore,
    size: usize,
    pool_cap: usize,
    rng: &mut dyn RngCore,
) -> Result<Hint, ArmUnavailable> {
    let vocab = store.candidates();
    let space = store.space();
    let mut pool: Vec<usize> = ctx.remaining_candidates(store).collect();
    if pool.is_empty() {
        return Err(ArmUnavailable {
            arm: ArmId::Diversity,
        });
    }
    if pool.len() > pool_cap.max(1) {
        let mut chosen = index::sample(rng, pool.len(), pool_cap.max(1)).into_vec();
        chosen.sort_unstable();
        pool = chosen.into_iter().map(|j| pool[j]).collect();
    }
    let pool_ids: Vec<WordId> = pool.iter().map(|&i| vocab.word_id(i)).collect();

    let mut known: Vec<WordId> = ctx
        .said
        .iter()
        .chain(ctx.heard.iter())
        .filter_map(|w| space.id(w))
        .collect();
    if known.is_empty() {
        known.push(pool_ids[rng.random_range(0..pool_ids.len())]);
    }
    let mut min_sq: Vec<f64> = pool_ids
        .iter()
        .map(|&p| {
            known
                .iter()
                .map(|&k| space.squared_distance_ids(p, k))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    let mut taken = vec![false; pool.len()];
    let mut words = Vec::with_capacity(size.min(pool.len()));
    for _ in 0..size.min(pool.len()) {
        let pick = sample_density(&min_sq, &taken, rng);
        taken[pick] = true;
        let new_id = pool_ids[pick];
        for (j, &p) in pool_ids.iter().enumerate() {
            if !taken[j] {
                min_sq[j] = min_sq[j].min(space.squared_distance_ids(p, new_id));
            }
        }
        words.push(vocab.word(pool[pick]).to_string());
    }
    ctx.heard.extend(words.iter().cloned());
    Ok(Hint {
        arm: ArmId::Diversity,
        words,
    })
}

/// Index drawn with probability proportional to `weights` over untaken
/// entries, uniform among untaken entries when all their weights are zero.
fn sample_density(weights: &[f64], taken: &[bool], rng: &mut dyn RngCore) -> usize {
    let total: f64 = weights
        .iter()
        .zip(taken)
        .filter(|(_, t)| !**t)
        .map(|(w, _)| *w)
        .sum();
    if total > 0.0 {
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last = None;
        for (i, (w, t)) in weights.iter().zip(taken).enumerate() {
            if *t || *w <= 0.0 {
                continue;
            }
            acc += w;
            last = Some(i);
            if target < acc {
                return i;
            }
        }
        return last.expect("positive total implies a positive entry");
    }
    let free: Vec<usize> = (0..taken.len()).filter(|&i| !taken[i]).collect();
    free[rng.random_range(0..free.len())]
}

#[derive(Debug, thiserror::Error)]
pub enum WordSetError {
    #[error("word set is empty")]
    EmptySet,
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Distance from `word` to the closest member of `set`.
pub fn word_set_distance<'a>(
    word: &str,
    set: impl IntoIterator<Item = &'a str>,
    space: &EmbeddingSpace,
) -> Result<f64, WordSetError> {
    let mut best: Option<f64> = None;
    for other in set {
        let d = space.distance(word, other)?;
        best = Some(best.map_or(d, |b: f64| b.min(d)));
    }
    best.ok_or(WordSetError::EmptySet)
}
