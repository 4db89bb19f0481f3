//! A deterministic participant with radius-limited recall.
//!
//! The mock knows a fixed list of feature phrases, each with a position in
//! embedding space. It recalls the unsaid phrase nearest to its current
//! cue (initially the concept) as long as one lies within `recall_radius`,
//! and gets stuck after `stuck_after` features on the same cue. Stuck, it
//! gives up (unhinted) or asks for a hint (hinted). A hint can move the
//! cue to the hint word closest to something it still knows, which is how
//! a good hint "unsticks" it.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{squared_distance, EmbeddingSpace};
use crate::session::{Clock, Condition, EndReason, Engine, SessionConfig, SessionError, SessionRecord, Source};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeItem {
    pub phrase: String,
    pub position: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockProfile {
    pub knowledge: Vec<KnowledgeItem>,
    pub recall_radius: f64,
    /// Features produced from one cue before the participant is stuck.
    pub stuck_after: usize,
    /// Probability of adopting a hint word as the new cue.
    pub hint_attention: f64,
    /// How many words of each hint are typed back verbatim as features
    /// before recall resumes.
    #[serde(default)]
    pub copy_hint_words: usize,
    /// Consecutive hints without a feature in between before giving up.
    #[serde(default = "default_max_failed_hints")]
    pub max_failed_hints: usize,
}

fn default_max_failed_hints() -> usize {
    5
}

impl MockProfile {
    pub fn validate(&self) -> Result<(), String> {
        if self.knowledge.is_empty() {
            return Err("knowledge must not be empty".into());
        }
        if !(0.0..=1.0).contains(&self.hint_attention) {
            return Err(format!("hint_attention {} outside [0, 1]", self.hint_attention));
        }
        if self.recall_radius.is_nan() || self.recall_radius < 0.0 {
            return Err("recall_radius must be nonnegative".into());
        }
        let dim = self.knowledge[0].position.len();
        if self.knowledge.iter().any(|k| k.position.len() != dim) {
            return Err("knowledge positions differ in dimension".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockAction {
    Feature(String),
    GetHints,
    GiveUp,
}

#[derive(Debug, Clone)]
pub struct MockParticipant {
    profile: MockProfile,
    condition: Condition,
    cue: Vec<f32>,
    said: Vec<bool>,
    since_cue_change: usize,
    failed_hints: usize,
    copies: VecDeque<String>,
    rng: ChaCha8Rng,
}

impl MockParticipant {
    /// `cue` is the starting cue, normally the concept's vector.
    pub fn new(profile: MockProfile, condition: Condition, cue: Vec<f32>, seed: u64) -> Self {
        let n = profile.knowledge.len();
        Self {
            profile,
            condition,
            cue,
            said: vec![false; n],
            since_cue_change: 0,
            failed_hints: 0,
            copies: VecDeque::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn cue(&self) -> &[f32] {
        &self.cue
    }

    pub fn remaining(&self) -> usize {
        self.said.iter().filter(|s| !**s).count()
    }

    fn nearest_unsaid(&self, point: &[f32]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, item) in self.profile.knowledge.iter().enumerate() {
            if self.said[i] {
                continue;
            }
            let d = squared_distance(point, &item.position);
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((i, d));
            }
        }
        best.map(|(i, d)| (i, d.sqrt()))
    }

    /// The next thing the participant does.
    pub fn step(&mut self) -> MockAction {
        if let Some(word) = self.copies.pop_front() {
            self.since_cue_change += 1;
            self.failed_hints = 0;
            return MockAction::Feature(word);
        }
        if self.remaining() == 0 {
            return MockAction::GiveUp;
        }
        if self.since_cue_change < self.profile.stuck_after {
            if let Some((i, d)) = self.nearest_unsaid(&self.cue) {
                if d <= self.profile.recall_radius {
                    self.said[i] = true;
                    self.since_cue_change += 1;
                    self.failed_hints = 0;
                    return MockAction::Feature(self.profile.knowledge[i].phrase.clone());
                }
            }
        }
        match self.condition {
            Condition::Unhinted => MockAction::GiveUp,
            Condition::Hinted if self.failed_hints >= self.profile.max_failed_hints => MockAction::GiveUp,
            Condition::Hinted => {
                self.failed_hints += 1;
                MockAction::GetHints
            }
        }
    }

    /// Reacts to a hint: queues verbatim copies and, with probability
    /// `hint_attention`, moves the cue to the hint word nearest to any
    /// unsaid knowledge item. Words missing from `space` are ignored.
    pub fn observe_hint(&mut self, words: &[String], space: &EmbeddingSpace) {
        self.copies
            .extend(words.iter().take(self.profile.copy_hint_words).cloned());
        let attend = self.rng.random::<f64>() < self.profile.hint_attention;
        if !attend {
            return;
        }
        let mut best: Option<(&[f32], f64)> = None;
        for w in words {
            let Some(v) = space.vector(w) else { continue };
            if let Some((_, d)) = self.nearest_unsaid(v) {
                if best.is_none_or(|(_, b)| d < b) {
                    best = Some((v, d));
                }
            }
        }
        if let Some((v, _)) = best {
            self.cue = v.to_vec();
            self.since_cue_change = 0;
        }
    }
}

/// One step of `participant`; see [`MockParticipant::step`].
pub fn mock_step(participant: &mut MockParticipant) -> MockAction {
    participant.step()
}

/// Salt separating the participant's random stream from the session's.
const PARTICIPANT_SALT: u64 = 0x6d6f_636b_7061_7274;

/// Runs a full mock session. The participant's randomness is derived from
/// `config.seed`, so `(profile, config, clock)` fixes the record.
pub fn run_mock_session(
    engine: &Engine,
    config: SessionConfig,
    profile: &MockProfile,
    clock: &mut dyn Clock,
) -> Result<SessionRecord, SessionError> {
    profile.validate().map_err(SessionError::InvalidConfig)?;
    let space = engine.store().space();
    let cue = space
        .vector(&config.concept)
        .map(<[f32]>::to_vec)
        .unwrap_or_else(|| profile.knowledge[0].position.clone());
    let mut participant = MockParticipant::new(
        profile.clone(),
        config.condition,
        cue,
        config.seed ^ PARTICIPANT_SALT,
    );
    let mut session = engine.start(config, clock.now_ms())?;
    let mut record = loop {
        let now = clock.now_ms();
        if session.is_expired(now) {
            break session.finalize_with(now, EndReason::Expired)?;
        }
        match participant.step() {
            MockAction::Feature(phrase) => {
                session.submit_feature(&phrase, now)?;
            }
            MockAction::GetHints => match session.request_hint(now) {
                Ok(hint) => participant.observe_hint(&hint.words, space),
                Err(SessionError::AllArmsUnavailable) => {
                    break session.finalize_with(now, EndReason::GaveUp)?;
                }
                Err(e) => return Err(e),
            },
            MockAction::GiveUp => break session.finalize_with(now, EndReason::GaveUp)?,
        }
    };
    record.source = Source::Mock;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(phrase: &str, x: f32) -> KnowledgeItem {
        KnowledgeItem {
            phrase: phrase.into(),
            position: vec![x, 0.0],
        }
    }

    fn profile() -> MockProfile {
        MockProfile {
            knowledge: vec![item("a", 1.0), item("b", 2.0), item("c", 10.0)],
            recall_radius: 3.0,
            stuck_after: 5,
            hint_attention: 1.0,
            copy_hint_words: 0,
            max_failed_hints: 2,
        }
    }

    fn drain(p: &mut MockParticipant) -> Vec<MockAction> {
        let mut out = Vec::new();
        loop {
            let a = p.step();
            let done = a == MockAction::GiveUp;
            out.push(a);
            if done || out.len() > 50 {
                return out;
            }
        }
    }

    #[test]
    fn recalls_nearest_within_radius_then_gives_up() {
        let mut p = MockParticipant::new(profile(), Condition::Unhinted, vec![0.0, 0.0], 1);
        assert_eq!(
            drain(&mut p),
            vec![
                MockAction::Feature("a".into()),
                MockAction::Feature("b".into()),
                MockAction::GiveUp
            ]
        );
    }

    #[test]
    fn stuck_hinted_asks_then_gives_up_after_failed_hints() {
        let mut p = MockParticipant::new(profile(), Condition::Hinted, vec![0.0, 0.0], 1);
        let actions = drain(&mut p);
        assert_eq!(
            &actions[2..],
            &[MockAction::GetHints, MockAction::GetHints, MockAction::GiveUp]
        );
    }

    #[test]
    fn adopting_a_hint_moves_the_cue() {
        let space = EmbeddingSpace::from_entries(
            2,
            [("far".to_string(), vec![9.0, 0.0]), ("near".to_string(), vec![0.5, 0.0])],
        )
        .unwrap();
        let mut p = MockParticipant::new(profile(), Condition::Hinted, vec![0.0, 0.0], 1);
        p.step();
        p.step();
        assert_eq!(p.step(), MockAction::GetHints);
        p.observe_hint(&["near".into(), "far".into(), "unknown".into()], &space);
        assert_eq!(p.cue(), &[9.0, 0.0]);
        assert_eq!(p.step(), MockAction::Feature("c".into()));
        assert_eq!(p.step(), MockAction::GiveUp);
    }

    #[test]
    fn copies_come_first() {
        let mut prof = profile();
        prof.copy_hint_words = 2;
        prof.hint_attention = 0.0;
        let space = EmbeddingSpace::from_entries(2, [("x".to_string(), vec![0.0, 0.0])]).unwrap();
        let mut p = MockParticipant::new(prof, Condition::Hinted, vec![0.0, 0.0], 1);
        p.observe_hint(&["x".into(), "y".into(), "z".into()], &space);
        assert_eq!(p.step(), MockAction::Feature("x".into()));
        assert_eq!(p.step(), MockAction::Feature("y".into()));
        assert_eq!(p.step(), MockAction::Feature("a".into()));
    }

    #[test]
    fn validation() {
        let mut p = profile();
        p.hint_attention = 1.5;
        assert!(p.validate().is_err());
        p.hint_attention = 0.5;
        p.knowledge.clear();
        assert!(p.validate().is_err());
    }
}
