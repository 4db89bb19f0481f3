//! Simulated participants.
//!
//! Simulants drive a [`Session`](crate::session::Session) through the same
//! three operations a human's browser uses (`submit_feature`,
//! `request_hint`, `finalize`) and never touch engine state otherwise.
//!
//! - [`mock`]: a deterministic participant with radius-limited recall
//!   around a movable cue, for offline tests of hint efficacy.
//! - [`llm`]: a chat-completion model prompted with the study instructions.
//! - [`batch`]: runs many sessions over concept × condition cells.

pub mod batch;
pub mod llm;
pub mod mock;
pub mod parse;
pub mod prompt;

pub use batch::{run_batch, BatchCell, BatchPlan};
pub use llm::{run_llm_session, ChatClient, ChatError, ChatMessage, HttpChatClient, LlmConfig, ScriptedChat};
pub use mock::{mock_step, run_mock_session, KnowledgeItem, MockAction, MockParticipant, MockProfile};
pub use parse::{parse_llm_reply, ReplyAction};
pub use prompt::{build_prompt, Phase, PromptError};
