//! Hand-labeled replies covering the formatting variants models produce.

use hintbandit::simulant::{parse_llm_reply, ReplyAction};
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    reply: String,
    /// Feature phrases verbatim; `#get_hints` / `#give_up` for controls.
    expected: Vec<String>,
}

fn label(action: &ReplyAction) -> String {
    match action {
        ReplyAction::Feature(p) => p.clone(),
        ReplyAction::GetHints => "#get_hints".into(),
        ReplyAction::GiveUp => "#give_up".into(),
    }
}

#[test]
fn golden_reply_fixture() {
    let cases: Vec<Case> =
        serde_json::from_str(include_str!("fixtures/llm_replies.json")).expect("fixture parses");
    assert_eq!(cases.len(), 30);
    let mut failures = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let got: Vec<String> = parse_llm_reply(&case.reply).iter().map(label).collect();
        if got != case.expected {
            failures.push(format!("case {i}: {:?}\n  expected {:?}\n  got      {:?}", case.reply, case.expected, got));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn parse_is_total_on_arbitrary_text() {
    for text in ["\u{0}", "1.", "1. ", "99)", "....", "\n\n\n", "1.\n2.\nGet"] {
        let actions = parse_llm_reply(text);
        assert!(actions.iter().all(|a| !matches!(a, ReplyAction::Feature(p) if p.is_empty())));
    }
}
