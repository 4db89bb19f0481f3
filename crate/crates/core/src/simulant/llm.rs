//! A language model as participant, over an OpenAI-style chat-completion
//! endpoint.
//!
//! The model gets the study instructions as its first user message. Its
//! numbered properties are submitted as features; "Get Hints" requests a
//! hint, which is sent back as the next user message; "Give Up" ends the
//! session. A reply without either phrase also ends it.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::parse::{parse_llm_reply, ReplyAction};
use super::prompt::{build_prompt, Phase};
use crate::session::{
    Clock, Condition, EndReason, Engine, Session, SessionConfig, SessionError, SessionRecord, Source,
    TranscriptTurn,
};

/// One chat message; the same shape is stored in record transcripts.
pub type ChatMessage = TranscriptTurn;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub max_tokens: Option<u32>,
    /// Environment variable holding the API key. The key itself is never
    /// stored in the config, logged or written to records.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    /// Model replies per session before it is ended regardless.
    #[serde(default = "default_max_turns")]
    pub max_turns: usize,
    /// Extra attempts per turn after a retryable failure.
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_retry_backoff_ms")]
    pub retry_backoff_ms: u64,
}

fn default_temperature() -> f64 {
    1.0
}
fn default_api_key_env() -> String {
    "OPENAI_API_KEY".into()
}
fn default_timeout_secs() -> u64 {
    60
}
fn default_max_turns() -> usize {
    30
}
fn default_max_retries() -> u32 {
    2
}
fn default_retry_backoff_ms() -> u64 {
    500
}

impl fmt::Debug for LlmConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LlmConfig")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("temperature", &self.temperature)
            .field("max_tokens", &self.max_tokens)
            .field("api_key_env", &self.api_key_env)
            .field("max_turns", &self.max_turns)
            .finish_non_exhaustive()
    }
}

impl LlmConfig {
    pub fn new(endpoint: &str, model: &str) -> Self {
        Self {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            temperature: default_temperature(),
            max_tokens: None,
            api_key_env: default_api_key_env(),
            timeout_secs: default_timeout_secs(),
            max_turns: default_max_turns(),
            max_retries: default_max_retries(),
            retry_backoff_ms: default_retry_backoff_ms(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.endpoint.trim().is_empty() {
            return Err("endpoint must be set".into());
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(format!("temperature {} must be >= 0", self.temperature));
        }
        if self.max_turns == 0 {
            return Err("max_turns must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChatError {
    #[error("request failed: {0}")]
    Transport(String),
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response: {0}")]
    Malformed(String),
    #[error("credential in ${0} is malformed")]
    MalformedCredential(String),
}

impl ChatError {
    fn retryable(&self) -> bool {
        match self {
            ChatError::Transport(_) => true,
            ChatError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// A chat-completion backend. `turn` is the 0-based index of the model
/// reply being requested; a retry asks for the same turn again.
pub trait ChatClient: Send + Sync {
    fn complete(&self, turn: usize, messages: &[ChatMessage]) -> Result<String, ChatError>;
}

pub struct HttpChatClient {
    config: LlmConfig,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

impl fmt::Debug for HttpChatClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpChatClient")
            .field("config", &self.config)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<u32>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChatMessage,
}

impl HttpChatClient {
    /// Reads the API key from the configured environment variable. A
    /// missing variable means unauthenticated requests (local servers).
    pub fn from_config(config: LlmConfig) -> Result<Self, ChatError> {
        let api_key = match std::env::var(&config.api_key_env) {
            Ok(key) => {
                let key = key.trim().to_string();
                if key.is_empty() || !key.chars().all(|c| c.is_ascii_graphic()) {
                    return Err(ChatError::MalformedCredential(config.api_key_env.clone()));
                }
                Some(key)
            }
            Err(_) => None,
        };
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| ChatError::Transport(e.to_string()))?;
        Ok(Self {
            config,
            api_key,
            http,
        })
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, _turn: usize, messages: &[ChatMessage]) -> Result<String, ChatError> {
        let body = ChatRequest {
            model: &self.config.model,
            messages,
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };
        let mut req = self.http.post(&self.config.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| ChatError::Transport(e.without_url().to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ChatError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ChatError::Status {
                status: status.as_u16(),
                body: text.chars().take(500).collect(),
            });
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| ChatError::Malformed(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| ChatError::Malformed("no choices".into()))
    }
}

/// Replays canned replies in order, recording every request. For tests
/// and offline demos.
#[derive(Debug, Default)]
pub struct ScriptedChat {
    replies: Mutex<VecDeque<Result<String, ChatError>>>,
    requests: Mutex<Vec<(usize, Vec<ChatMessage>)>>,
}

impl ScriptedChat {
    pub fn new(replies: impl IntoIterator<Item = Result<String, ChatError>>) -> Self {
        Self {
            replies: Mutex::new(replies.into_iter().collect()),
            requests: Mutex::default(),
        }
    }

    pub fn replying<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self::new(replies.into_iter().map(|r| Ok(r.into())))
    }

    /// `(turn, messages)` of every request received.
    pub fn requests(&self) -> Vec<(usize, Vec<ChatMessage>)> {
        self.requests.lock().expect("not poisoned").clone()
    }
}

impl ChatClient for ScriptedChat {
    fn complete(&self, turn: usize, messages: &[ChatMessage]) -> Result<String, ChatError> {
        self.requests
            .lock()
            .expect("not poisoned")
            .push((turn, messages.to_vec()));
        self.replies
            .lock()
            .expect("not poisoned")
            .pop_front()
            .unwrap_or_else(|| Err(ChatError::Malformed("script exhausted".into())))
    }
}

fn complete_with_retry(
    client: &dyn ChatClient,
    llm: &LlmConfig,
    turn: usize,
    messages: &[ChatMessage],
) -> Result<String, ChatError> {
    let mut attempt = 0;
    loop {
        match client.complete(turn, messages) {
            Ok(reply) => return Ok(reply),
            Err(e) if e.retryable() && attempt < llm.max_retries => {
                attempt += 1;
                tracing::warn!(turn, attempt, error = %e, "retrying chat request");
                std::thread::sleep(Duration::from_millis(llm.retry_backoff_ms * u64::from(attempt)));
            }
            Err(e) => return Err(e),
        }
    }
}

fn user(content: String) -> ChatMessage {
    ChatMessage {
        role: "user".into(),
        content,
    }
}

fn close(
    mut session: Session,
    now: u64,
    reason: EndReason,
    transcript: Vec<ChatMessage>,
) -> Result<SessionRecord, SessionError> {
    let mut record = session.finalize_with(now, reason)?;
    record.source = Source::Llm;
    record.incomplete = reason == EndReason::Aborted;
    record.transcript = transcript;
    Ok(record)
}

/// Runs one session with a model participant.
///
/// Each reply is applied to the session exactly once, after its request
/// has succeeded; retries happen before anything is submitted, so a
/// retried turn never submits features twice. A request that still fails
/// after the retries aborts the session, and the record is marked
/// incomplete.
pub fn run_llm_session(
    client: &dyn ChatClient,
    llm: &LlmConfig,
    engine: &Engine,
    config: SessionConfig,
    clock: &mut dyn Clock,
) -> Result<SessionRecord, SessionError> {
    llm.validate().map_err(SessionError::InvalidConfig)?;
    let condition = config.condition;
    let concept = config.concept.clone();
    let mut session = engine.start(config, clock.now_ms())?;
    let initial = build_prompt(condition, &concept, Phase::Initial, &[]).expect("initial prompt exists");
    let mut messages = vec![user(initial)];

    for turn in 0..llm.max_turns {
        let reply = match complete_with_retry(client, llm, turn, &messages) {
            Ok(reply) => reply,
            Err(e) => {
                tracing::warn!(turn, error = %e, "aborting session");
                return close(session, clock.now_ms(), EndReason::Aborted, messages);
            }
        };
        messages.push(ChatMessage {
            role: "assistant".into(),
            content: reply.clone(),
        });

        let mut control = None;
        for action in parse_llm_reply(&reply) {
            match action {
                ReplyAction::Feature(phrase) => {
                    let now = clock.now_ms();
                    if session.is_expired(now) {
                        return close(session, now, EndReason::Expired, messages);
                    }
                    session.submit_feature(&phrase, now)?;
                }
                other => control = Some(other),
            }
        }

        let now = clock.now_ms();
        match (condition, control) {
            (Condition::Hinted, Some(ReplyAction::GetHints)) => {
                if session.is_expired(now) {
                    return close(session, now, EndReason::Expired, messages);
                }
                let hint = match session.request_hint(now) {
                    Ok(hint) => hint,
                    Err(SessionError::AllArmsUnavailable) => {
                        return close(session, now, EndReason::Finished, messages);
                    }
                    Err(e) => return Err(e),
                };
                let prompt = build_prompt(condition, &concept, Phase::Subsequent, &hint.words)
                    .expect("hinted follow-up prompt");
                messages.push(user(prompt));
            }
            (_, Some(ReplyAction::GiveUp)) => {
                return close(session, now, EndReason::GaveUp, messages);
            }
            _ => return close(session, now, EndReason::Finished, messages),
        }
    }
    let now = clock.now_ms();
    close(session, now, EndReason::Finished, messages)
}
