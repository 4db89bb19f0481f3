//! The instructions given to a language-model participant.

use crate::session::Condition;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Opens the session.
    Initial,
    /// Delivers a hint after the model asked for one.
    Subsequent,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("the unhinted condition has no follow-up prompt")]
    NoSubsequentUnhinted,
    #[error("a follow-up prompt needs the hint words")]
    MissingHints,
}

const FORMAT: &str = "Please use the format below. 1. [PROPERTY 1]\n2. [PROPERTY 2]";

/// Builds the prompt for one turn. `hint_words` is only used (and must be
/// nonempty) in the [`Phase::Subsequent`] phase; the words are joined with
/// `", "`.
pub fn build_prompt(
    condition: Condition,
    concept: &str,
    phase: Phase,
    hint_words: &[String],
) -> Result<String, PromptError> {
    match (condition, phase) {
        (Condition::Unhinted, Phase::Initial) => Ok(format!(
            "Please type as many properties of {concept} as you can think of. \
             If you think you have exhausted all ideas, say \"Give Up\". {FORMAT}"
        )),
        (Condition::Hinted, Phase::Initial) => Ok(format!(
            "Please type as many properties of {concept} as you can think of. \
             When you run out of ideas, ask for a hint by saying 'Get Hints'. \
             If you think you have exhausted all ideas, say 'Give Up'. {FORMAT}"
        )),
        (Condition::Unhinted, Phase::Subsequent) => Err(PromptError::NoSubsequentUnhinted),
        (Condition::Hinted, Phase::Subsequent) => {
            if hint_words.is_empty() {
                return Err(PromptError::MissingHints);
            }
            Ok(format!(
                "Here are some hints: {}. If they are not helpful, ask for another hint by \
                 saying 'Get Hints'. If you have exhausted your knowledge, say 'Give Up'.",
                hint_words.join(", ")
            ))
        }
    }
}
