//! Adaptive hinting for feature-listing sessions.
//!
//! A participant lists properties of a concept ("penguin": *has feathers*,
//! *is black and white*, ...). When they get stuck they can ask for a hint:
//! five words chosen by one of several hint generators. Which generator is
//! used is decided by an EXP3 adversarial bandit whose loss for a hint is 0
//! when the participant produces at least one new feature afterwards and 1
//! otherwise.
//!
//! The crate is organized around that loop:
//!
//! - [`embedding`]: word vectors, corpus frequencies, the candidate
//!   vocabulary and exact nearest-neighbor queries.
//! - [`arms`]: the three hint generators (semantic neighbors, frequency
//!   sampling, diversity cover).
//! - [`bandit`]: EXP3 with a two-phase pull/resolve protocol.
//! - [`text`]: phrase normalization (case folding, stopwords, lemmas, stems).
//! - [`session`]: the session engine producing replayable [`session::SessionRecord`]s.
//! - [`analysis`] and [`stats`]: per-session metrics, relatedness curves,
//!   arm preference and CSV export.
//! - [`simulant`]: a deterministic mock participant and an LLM-driven one.
//! - [`synthetic`]: generated embedding worlds for tests and examples.

pub mod analysis;
pub mod arms;
pub mod bandit;
pub mod embedding;
pub mod session;
pub mod simulant;
pub mod stats;
pub mod synthetic;
pub mod text;

pub use arms::{ArmContext, ArmId, ArmSet, ArmUnavailable, Hint, HintArm};
pub use bandit::{Exp3, Loss};
pub use embedding::{CandidateVocabulary, EmbeddingSpace, FrequencyTable, WordStore};
pub use session::{Condition, Engine, Session, SessionConfig, SessionRecord};
pub use text::Normalizer;
