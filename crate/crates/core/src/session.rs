//! One feature-listing session: features in, hints out, losses assigned.
//!
//! A [`Session`] owns the arm context, the bandit and the session RNG, and
//! appends every input to an event log. Every operation takes the wall
//! time in UTC milliseconds as an argument, so a [`SessionRecord`] holds
//! everything needed to replay it bit for bit through [`Engine::replay`].
//!
//! Loss rule: when a new hint is requested or the session ends, the
//! previous hint gets loss 0 if at least one non-duplicate feature was
//! submitted after it, loss 1 otherwise.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arms::{ArmContext, ArmId, ArmSet, DEFAULT_HINT_SIZE, DEFAULT_POOL_CAP};
use crate::bandit::{BanditError, BanditSnapshot, Exp3, Loss};
use crate::embedding::WordStore;
use crate::text::Normalizer;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_DURATION_SECS: u64 = 1200;
pub const DEFAULT_HORIZON: u32 = 20;
/// Inputs arriving later than this after the nominal end are rejected.
pub const GRACE_MS: u64 = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Hinted,
    Unhinted,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Hinted => "hinted",
            Condition::Unhinted => "unhinted",
        })
    }
}

impl std::str::FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hinted" => Ok(Condition::Hinted),
            "unhinted" => Ok(Condition::Unhinted),
            other => Err(format!("unknown condition `{other}`")),
        }
    }
}

/// Who produced the record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    #[default]
    Human,
    Mock,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub participant_id: String,
    pub concept: String,
    pub condition: Condition,
    #[serde(default = "default_duration")]
    pub duration_secs: u64,
    #[serde(default = "default_hint_size")]
    pub hint_size: usize,
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    pub seed: u64,
    /// 1 or 2 for the main blocks; `None` outside a counterbalanced design.
    #[serde(default)]
    pub block: Option<u8>,
    #[serde(default)]
    pub practice: bool,
    #[serde(default = "default_pool_cap")]
    pub pool_cap: usize,
}

fn default_duration() -> u64 {
    DEFAULT_DURATION_SECS
}
fn default_hint_size() -> usize {
    DEFAULT_HINT_SIZE
}
fn default_horizon() -> u32 {
    DEFAULT_HORIZON
}
fn default_pool_cap() -> usize {
    DEFAULT_POOL_CAP
}

impl SessionConfig {
    pub fn new(participant_id: &str, concept: &str, condition: Condition, seed: u64) -> Self {
        Self {
            participant_id: participant_id.to_string(),
            concept: concept.to_lowercase(),
            condition,
            duration_secs: DEFAULT_DURATION_SECS,
            hint_size: DEFAULT_HINT_SIZE,
            horizon: DEFAULT_HORIZON,
            seed,
            block: None,
            practice: false,
            pool_cap: DEFAULT_POOL_CAP,
        }
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |m: &str| Err(SessionError::InvalidConfig(m.to_string()));
        if self.duration_secs == 0 {
            return bad("duration must be positive");
        }
        if self.hint_size == 0 {
            return bad("hint size must be positive");
        }
        if self.horizon == 0 {
            return bad("horizon must be positive");
        }
        if self.pool_cap == 0 {
            return bad("pool cap must be positive");
        }
        let concept = self.concept.trim();
        if concept.is_empty() || concept.chars().any(char::is_whitespace) {
            return bad("concept must be a single word");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEvent {
    pub seq: u64,
    pub at_ms: u64,
    pub raw_phrase: String,
    /// Normalized word types of the phrase.
    pub word_types: Vec<String>,
    pub is_duplicate: bool,
    /// Candidate words this feature added to the said set.
    pub said_added: Vec<String>,
}

/// How a hint's loss was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    NextHint,
    SessionEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintEvent {
    pub seq: u64,
    pub at_ms: u64,
    /// 1-based hint index.
    pub t: u64,
    pub arm: ArmId,
    pub words: Vec<String>,
    /// Arm probabilities the pull was drawn from.
    pub probs: Vec<f64>,
    /// Arms tried first and found unavailable; not charged.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<ArmId>,
    pub loss: Option<Loss>,
    pub resolved_by: Option<Resolution>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    Finished,
    Expired,
    GaveUp,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndEvent {
    pub seq: u64,
    pub at_ms: u64,
    pub reason: EndReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    Feature(FeatureEvent),
    Hint(HintEvent),
    End(EndEvent),
}

impl SessionEvent {
    pub fn at_ms(&self) -> u64 {
        match self {
            SessionEvent::Feature(e) => e.at_ms,
            SessionEvent::Hint(e) => e.at_ms,
            SessionEvent::End(e) => e.at_ms,
        }
    }
}

/// One message exchanged with a language model during a simulated session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptTurn {
    pub role: String,
    pub content: String,
}

/// The persisted form of a finished session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub schema_version: u32,
    pub config: SessionConfig,
    pub started_at_ms: u64,
    pub events: Vec<SessionEvent>,
    /// Present for hinted sessions.
    pub bandit_final: Option<BanditSnapshot>,
    #[serde(default)]
    pub source: Source,
    /// Aborted sessions are excluded from analysis by default.
    #[serde(default)]
    pub incomplete: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transcript: Vec<TranscriptTurn>,
}

impl SessionRecord {
    pub fn features(&self) -> impl Iterator<Item = &FeatureEvent> {
        self.events.iter().filter_map(|e| match e {
            SessionEvent::Feature(f) => Some(f),
            _ => None,
        })
    }

    pub fn hints(&self) -> impl Iterator<Item = &HintEvent> {
        self.events.iter().filter_map(|e| match e {
            SessionEvent::Hint(h) => Some(h),
            _ => None,
        })
    }

    pub fn end(&self) -> Option<&EndEvent> {
        self.events.iter().find_map(|e| match e {
            SessionEvent::End(end) => Some(end),
            _ => None,
        })
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("session is closed")]
    Closed,
    #[error("session expired")]
    Expired,
    #[error("hints are not available in the unhinted condition")]
    Unhinted,
    #[error("no arm can produce a hint")]
    AllArmsUnavailable,
    #[error("phrase is empty")]
    EmptyPhrase,
    #[error("clock went backwards: {at_ms} < {last_ms}")]
    ClockWentBackwards { at_ms: u64, last_ms: u64 },
    #[error(transparent)]
    Bandit(#[from] BanditError),
    #[error("record cannot be replayed: {0}")]
    Replay(String),
}

/// Source of event timestamps.
pub trait Clock {
    fn now_ms(&mut self) -> u64;
}

/// Wall clock in UTC milliseconds, never going backwards.
#[derive(Debug, Default)]
pub struct SystemClock {
    last: u64,
}

pub fn unix_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl Clock for SystemClock {
    fn now_ms(&mut self) -> u64 {
        self.last = self.last.max(unix_millis());
        self.last
    }
}

/// Deterministic clock advancing a fixed step per reading.
#[derive(Debug, Clone)]
pub struct StepClock {
    next: u64,
    step: u64,
}

impl StepClock {
    pub fn new(start_ms: u64, step_ms: u64) -> Self {
        Self {
            next: start_ms,
            step: step_ms,
        }
    }

    pub fn peek(&self) -> u64 {
        self.next
    }
}

impl Clock for StepClock {
    fn now_ms(&mut self) -> u64 {
        let now = self.next;
        self.next += self.step;
        now
    }
}

/// Shared, read-only resources sessions run against.
#[derive(Debug, Clone)]
pub struct Engine {
    store: Arc<WordStore>,
    normalizer: Arc<Normalizer>,
}

impl Engine {
    pub fn new(store: Arc<WordStore>, normalizer: Arc<Normalizer>) -> Self {
        Self { store, normalizer }
    }

    pub fn store(&self) -> &Arc<WordStore> {
        &self.store
    }

    pub fn normalizer(&self) -> &Arc<Normalizer> {
        &self.normalizer
    }

    /// Opens a session with the standard three arms.
    pub fn start(&self, config: SessionConfig, now_ms: u64) -> Result<Session, SessionError> {
        let arms = ArmSet::standard(config.pool_cap);
        self.start_with_arms(config, arms, now_ms)
    }

    pub fn start_with_arms(
        &self,
        mut config: SessionConfig,
        arms: ArmSet,
        now_ms: u64,
    ) -> Result<Session, SessionError> {
        config.concept = config.concept.trim().to_lowercase();
        config.validate()?;
        let bandit = match config.condition {
            Condition::Hinted => Some(Exp3::new(arms.len(), config.horizon)?),
            Condition::Unhinted => None,
        };
        Ok(Session {
            ctx: ArmContext::new(&config.concept, &self.store),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            engine: self.clone(),
            arms,
            bandit,
            events: Vec::new(),
            started_at_ms: now_ms,
            last_ms: now_ms,
            seen: HashSet::new(),
            fresh_since_hint: 0,
            pending_hint: None,
            closed: false,
            config,
        })
    }

    /// Re-runs a record's inputs through a fresh session.
    pub fn replay(&self, record: &SessionRecord) -> Result<SessionRecord, SessionError> {
        let mut session = self.start(record.config.clone(), record.started_at_ms)?;
        let mut out = None;
        for event in &record.events {
            match event {
                SessionEvent::Feature(f) => {
                    session.submit_feature(&f.raw_phrase, f.at_ms)?;
                }
                SessionEvent::Hint(h) => {
                    session.request_hint(h.at_ms)?;
                }
                SessionEvent::End(e) => {
                    out = Some(session.finalize_with(e.at_ms, e.reason)?);
                }
            }
        }
        let mut out = out.ok_or_else(|| SessionError::Replay("record has no end event".into()))?;
        out.source = record.source;
        out.incomplete = record.incomplete;
        out.transcript = record.transcript.clone();
        Ok(out)
    }
}

pub struct Session {
    config: SessionConfig,
    engine: Engine,
    arms: ArmSet,
    ctx: ArmContext,
    bandit: Option<Exp3>,
    rng: ChaCha8Rng,
    events: Vec<SessionEvent>,
    started_at_ms: u64,
    last_ms: u64,
    seen: HashSet<Vec<String>>,
    fresh_since_hint: usize,
    pending_hint: Option<usize>,
    closed: bool,
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session")
            .field("config", &self.config)
            .field("events", &self.events.len())
            .field("closed", &self.closed)
            .finish()
    }
}

impl Session {
    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn context(&self) -> &ArmContext {
        &self.ctx
    }

    pub fn bandit(&self) -> Option<&Exp3> {
        self.bandit.as_ref()
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn started_at_ms(&self) -> u64 {
        self.started_at_ms
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Last instant inputs are accepted.
    pub fn deadline_ms(&self) -> u64 {
        self.started_at_ms + self.config.duration_secs * 1000 + GRACE_MS
    }

    pub fn is_expired(&self, now_ms: u64) -> bool {
        now_ms > self.deadline_ms()
    }

    fn check_input(&self, now_ms: u64) -> Result<(), SessionError> {
        if self.closed {
            return Err(SessionError::Closed);
        }
        if now_ms < self.last_ms {
            return Err(SessionError::ClockWentBackwards {
                at_ms: now_ms,
                last_ms: self.last_ms,
            });
        }
        if self.is_expired(now_ms) {
            return Err(SessionError::Expired);
        }
        Ok(())
    }

    fn next_seq(&self) -> u64 {
        self.events.len() as u64
    }

    /// Records a typed phrase. A phrase whose normalized type sequence
    /// equals an earlier one is kept but flagged as a duplicate.
    pub fn submit_feature(&mut self, phrase: &str, now_ms: u64) -> Result<FeatureEvent, SessionError> {
        self.check_input(now_ms)?;
        if phrase.trim().is_empty() {
            return Err(SessionError::EmptyPhrase);
        }
        let normalizer = &self.engine.normalizer;
        let word_types = normalizer.normalize_phrase(phrase);
        let is_duplicate = !self.seen.insert(word_types.clone());
        let embeddable = normalizer.embeddable_words(phrase, self.engine.store.space());
        let said_added = self
            .ctx
            .extend_said(embeddable.iter().map(String::as_str), &self.engine.store);
        if !is_duplicate {
            self.fresh_since_hint += 1;
        }
        let event = FeatureEvent {
            seq: self.next_seq(),
            at_ms: now_ms,
            raw_phrase: phrase.to_string(),
            word_types,
            is_duplicate,
            said_added,
        };
        self.last_ms = now_ms;
        self.events.push(SessionEvent::Feature(event.clone()));
        Ok(event)
    }

    fn resolve_pending(&mut self, by: Resolution) -> Result<(), SessionError> {
        let Some(idx) = self.pending_hint.take() else {
            return Ok(());
        };
        let loss = Loss::from(self.fresh_since_hint == 0);
        let bandit = self.bandit.as_mut().expect("hinted session has a bandit");
        let arm = bandit
            .outstanding()
            .map(|p| p.arm)
            .ok_or(BanditError::NoOutstandingPull)?;
        bandit.record_loss(arm, loss)?;
        if let SessionEvent::Hint(h) = &mut self.events[idx] {
            h.loss = Some(loss);
            h.resolved_by = Some(by);
        }
        Ok(())
    }

    /// Resolves the previous hint, then samples an arm and asks it for a
    /// hint. Arms that cannot produce one are skipped for this request
    /// without being charged, and the draw is repeated over the rest.
    ///
    /// A failed request leaves the session exactly as it was, so records
    /// (which only log successful operations) still replay exactly.
    pub fn request_hint(&mut self, now_ms: u64) -> Result<HintEvent, SessionError> {
        self.check_input(now_ms)?;
        if self.config.condition == Condition::Unhinted {
            return Err(SessionError::Unhinted);
        }
        let saved = (
            self.ctx.clone(),
            self.bandit.clone(),
            self.rng.clone(),
            self.events.clone(),
            self.pending_hint,
            self.fresh_since_hint,
        );
        let result = self.try_request_hint(now_ms);
        if result.is_err() {
            (
                self.ctx,
                self.bandit,
                self.rng,
                self.events,
                self.pending_hint,
                self.fresh_since_hint,
            ) = saved;
        }
        result
    }

    fn try_request_hint(&mut self, now_ms: u64) -> Result<HintEvent, SessionError> {
        self.resolve_pending(Resolution::NextHint)?;

        let store = Arc::clone(&self.engine.store);
        let bandit = self.bandit.as_mut().expect("hinted session has a bandit");
        let mut allowed = vec![true; self.arms.len()];
        let mut skipped = Vec::new();
        let (arm, hint) = loop {
            let Some(arm) = bandit.sample_among(&mut self.rng, &allowed) else {
                return Err(SessionError::AllArmsUnavailable);
            };
            match self
                .arms
                .get(arm)
                .generate(&mut self.ctx, &store, self.config.hint_size, &mut self.rng)
            {
                Ok(hint) => break (arm, hint),
                Err(unavailable) => {
                    allowed[arm] = false;
                    skipped.push(unavailable.arm);
                }
            }
        };
        let t = bandit.begin_pull(arm)?;
        let probs = bandit.history().last().expect("just pulled").probs.clone();
        let event = HintEvent {
            seq: self.next_seq(),
            at_ms: now_ms,
            t,
            arm: hint.arm,
            words: hint.words,
            probs,
            skipped,
            loss: None,
            resolved_by: None,
        };
        self.pending_hint = Some(self.events.len());
        self.fresh_since_hint = 0;
        self.last_ms = now_ms;
        self.events.push(SessionEvent::Hint(event.clone()));
        Ok(event)
    }

    /// Ends the session normally.
    pub fn finalize(&mut self, now_ms: u64) -> Result<SessionRecord, SessionError> {
        self.finalize_with(now_ms, EndReason::Finished)
    }

    /// Resolves the last hint and closes the session. Allowed after expiry.
    pub fn finalize_with(&mut self, now_ms: u64, reason: EndReason) -> Result<SessionRecord, SessionError> {
        if self.closed {
            return Err(SessionError::Closed);
        }
        let now_ms = now_ms.max(self.last_ms);
        self.resolve_pending(Resolution::SessionEnd)?;
        self.events.push(SessionEvent::End(EndEvent {
            seq: self.next_seq(),
            at_ms: now_ms,
            reason,
        }));
        self.last_ms = now_ms;
        self.closed = true;
        Ok(self.record())
    }

    /// Snapshot of the session so far.
    pub fn record(&self) -> SessionRecord {
        let ids = self.arms.ids();
        SessionRecord {
            schema_version: SCHEMA_VERSION,
            config: self.config.clone(),
            started_at_ms: self.started_at_ms,
            events: self.events.clone(),
            bandit_final: self.bandit.as_ref().map(|b| b.snapshot(|i| ids[i])),
            source: Source::Human,
            incomplete: false,
            transcript: Vec::new(),
        }
    }
}

/// Concept, condition and block of one main-study session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockAssignment {
    pub concept: &'static str,
    pub condition: Condition,
    pub block: u8,
}

impl BlockAssignment {
    pub fn into_config(self, participant_id: &str, seed: u64) -> SessionConfig {
        let mut config = SessionConfig::new(participant_id, self.concept, self.condition, seed);
        config.block = Some(self.block);
        config
    }
}

pub const MAIN_CONCEPTS: [&str; 2] = ["penguin", "journalist"];
pub const PRACTICE_CONCEPTS: [&str; 2] = ["tiger", "desk"];

/// Counterbalanced block plan for the participant at `index`, cycling
/// through four cells: which concept is hinted, and whether the hinted
/// block comes first.
pub fn counterbalance_assign(index: usize) -> [BlockAssignment; 2] {
    let (hinted, unhinted) = match index % 4 {
        0 | 3 => ("penguin", "journalist"),
        _ => ("journalist", "penguin"),
    };
    let hinted_first = index % 4 < 2;
    let h = |block| BlockAssignment {
        concept: hinted,
        condition: Condition::Hinted,
        block,
    };
    let u = |block| BlockAssignment {
        concept: unhinted,
        condition: Condition::Unhinted,
        block,
    };
    if hinted_first {
        [h(1), u(2)]
    } else {
        [u(1), h(2)]
    }
}

/// Practice sessions preceding the main blocks; flagged so analysis skips them.
pub fn practice_configs(participant_id: &str, condition: Condition, seed: u64) -> Vec<SessionConfig> {
    PRACTICE_CONCEPTS
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut config = SessionConfig::new(participant_id, c, condition, seed.wrapping_add(i as u64));
            config.practice = true;
            config
        })
        .collect()
}
