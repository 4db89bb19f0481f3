//! Turning a model's free-text reply into participant actions.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "phrase", rename_all = "snake_case")]
pub enum ReplyAction {
    Feature(String),
    GetHints,
    GiveUp,
}

/// Extracts the numbered-list properties of a reply, in order, and the
/// first "Get Hints" / "Give Up" control phrase (case-insensitive).
///
/// A control phrase counts when it appears on a line that is not a list
/// item, or when it is the entire text of a list item. Everything after
/// the first control phrase is discarded. Lines that are neither list
/// items nor controls (preambles, commentary) are ignored.
pub fn parse_llm_reply(text: &str) -> Vec<ReplyAction> {
    let mut actions = Vec::new();
    for line in text.lines() {
        match list_item(line) {
            Some(item) => {
                let item = clean_item(item);
                if let Some(control) = whole_control(&item) {
                    actions.push(control);
                    return actions;
                }
                if !item.is_empty() {
                    actions.push(ReplyAction::Feature(item));
                }
            }
            None => {
                if let Some(control) = find_control(line) {
                    actions.push(control);
                    return actions;
                }
            }
        }
    }
    actions
}

const DECORATION: &[char] = &['*', '_', '`', '"', '\'', '“', '”', '‘', '’'];

/// The text after a leading `N.`, `N)` or `N:` marker, if the line has one.
fn list_item(line: &str) -> Option<&str> {
    let s = line.trim_start().trim_start_matches(['*', '_', '#', ' ']);
    let digits = s.len() - s.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 {
        return None;
    }
    let rest = &s[digits..];
    let mut chars = rest.chars();
    match chars.next() {
        Some('.' | ')' | ':') => {}
        _ => return None,
    }
    let rest = chars.as_str();
    // "3.5 kg" is not a list marker.
    if rest.starts_with(|c: char| !c.is_whitespace() && !DECORATION.contains(&c)) {
        return None;
    }
    Some(rest)
}

fn clean_item(item: &str) -> String {
    let mut s = item.trim().trim_matches(DECORATION).trim();
    if let Some(inner) = s.strip_prefix('[').and_then(|x| x.strip_suffix(']')) {
        s = inner.trim();
    }
    let s = s.trim_end_matches(['.', ',', ';']).trim_matches(DECORATION).trim();
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn squash(text: &str) -> String {
    text.to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn whole_control(item: &str) -> Option<ReplyAction> {
    match squash(item).as_str() {
        "get hints" | "get hint" | "get more hints" => Some(ReplyAction::GetHints),
        "give up" | "i give up" => Some(ReplyAction::GiveUp),
        _ => None,
    }
}

fn find_control(line: &str) -> Option<ReplyAction> {
    let s = format!(" {} ", squash(line));
    let hints = [" get hints ", " get hint "]
        .iter()
        .filter_map(|p| s.find(p))
        .min();
    let give_up = s.find(" give up ");
    match (hints, give_up) {
        (Some(h), Some(g)) if g < h => Some(ReplyAction::GiveUp),
        (Some(_), _) => Some(ReplyAction::GetHints),
        (None, Some(_)) => Some(ReplyAction::GiveUp),
        (None, None) => None,
    }
}
