//! DevGPT-shaped snapshot JSON.
//!
//! ```text
//! { "Sources": [ { "Type", "URL", "State", "CreatedAt", "ClosedAt", "Body",
//!                  "ChatgptSharing": [ { "NumberOfPrompts", "TokensOfPrompts",
//!                                        "TokensOfAnswers",
//!                                        "Conversations": [ {"Prompt", "Answer"} ] } ] } ] }
//! ```
//!
//! Unknown fields are ignored. Sharings of one source are merged into a single
//! record: counts are summed and conversations concatenated in order.

use std::collections::HashSet;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde_json::{json, Map, Value};

use super::{ConversationRecord, ConversationTurn, CorpusError, SourceKind, State};
use crate::metrics::word_count;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    /// The entry was dropped.
    Skipped,
    /// The entry was kept with some field left empty or defaulted.
    Warning,
}

/// A problem with one source entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseIssue {
    pub index: usize,
    pub url: Option<String>,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct SnapshotParse {
    pub records: Vec<ConversationRecord>,
    pub issues: Vec<ParseIssue>,
}

impl SnapshotParse {
    pub fn skipped(&self) -> impl Iterator<Item = &ParseIssue> {
        self.issues.iter().filter(|i| i.severity == Severity::Skipped)
    }
}

pub fn parse_snapshot(raw: &[u8]) -> Result<SnapshotParse, CorpusError> {
    let doc: Value = serde_json::from_slice(raw).map_err(|e| CorpusError::Json {
        offset: byte_offset(raw, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let sources = doc
        .get("Sources")
        .and_then(Value::as_array)
        .ok_or(CorpusError::MissingSources)?;

    let mut out = SnapshotParse::default();
    let mut seen = HashSet::new();
    for (index, entry) in sources.iter().enumerate() {
        let mut issues = Vec::new();
        let parsed = parse_source(index, entry, &mut issues);
        if let Some(rec) = parsed {
            if seen.insert(rec.url.clone()) {
                out.records.push(rec);
            } else {
                issues.push(ParseIssue {
                    index,
                    url: Some(rec.url.clone()),
                    severity: Severity::Skipped,
                    message: "duplicate URL".into(),
                });
            }
        }
        out.issues.extend(issues);
    }
    Ok(out)
}

fn byte_offset(raw: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = raw
        .split(|&b| b == b'\n')
        .take(line - 1)
        .map(|l| l.len() + 1)
        .sum();
    (line_start + column.saturating_sub(1)).min(raw.len())
}

fn parse_source(index: usize, entry: &Value, issues: &mut Vec<ParseIssue>) -> Option<ConversationRecord> {
    let Some(obj) = entry.as_object() else {
        issues.push(ParseIssue {
            index,
            url: None,
            severity: Severity::Skipped,
            message: "source entry is not an object".into(),
        });
        return None;
    };
    let url = match obj.get("URL").and_then(Value::as_str).map(str::trim) {
        Some(u) if !u.is_empty() => u.to_string(),
        _ => {
            issues.push(ParseIssue {
                index,
                url: None,
                severity: Severity::Skipped,
                message: "missing mandatory field URL".into(),
            });
            return None;
        }
    };
    let mut warn = |message: String| {
        issues.push(ParseIssue {
            index,
            url: Some(url.clone()),
            severity: Severity::Warning,
            message,
        })
    };

    let source_kind = match obj.get("Type").and_then(Value::as_str) {
        Some(t) => t.parse().unwrap_or_else(|e: String| {
            warn(format!("{e}; inferred from URL"));
            kind_from_url(&url)
        }),
        None => kind_from_url(&url),
    };
    let state = obj
        .get("State")
        .and_then(Value::as_str)
        .map(State::normalize)
        .unwrap_or_else(|| State::Other(String::new()));
    let created_at = timestamp_field(obj, "CreatedAt", &mut warn);
    let closed_at = timestamp_field(obj, "ClosedAt", &mut warn);
    if state == State::Closed && closed_at.is_none() {
        warn("state is closed but ClosedAt is absent".into());
    }
    let body = obj
        .get("Body")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();

    let mut number_of_prompts = 0;
    let mut tokens_of_prompts = 0;
    let mut tokens_of_answers = 0;
    let mut turns = Vec::new();
    let sharings = obj
        .get("ChatgptSharing")
        .and_then(Value::as_array)
        .map(Vec::as_slice)
        .unwrap_or_default();
    for sharing in sharings {
        let Some(sharing) = sharing.as_object() else {
            warn("ChatgptSharing entry is not an object".into());
            continue;
        };
        let conversations: Vec<ConversationTurn> = sharing
            .get("Conversations")
            .and_then(Value::as_array)
            .map(|convs| {
                convs
                    .iter()
                    .map(|c| {
                        let text = |k| c.get(k).and_then(Value::as_str).unwrap_or_default();
                        ConversationTurn::new(text("Prompt"), text("Answer"))
                    })
                    .collect()
            })
            .unwrap_or_default();
        number_of_prompts += count_field(sharing, "NumberOfPrompts", &mut warn)
            .unwrap_or(conversations.len() as u64);
        tokens_of_prompts += count_field(sharing, "TokensOfPrompts", &mut warn).unwrap_or_else(|| {
            conversations.iter().map(|t| word_count(&t.prompt_text) as u64).sum()
        });
        tokens_of_answers += count_field(sharing, "TokensOfAnswers", &mut warn).unwrap_or_else(|| {
            conversations.iter().map(|t| word_count(&t.answer_text) as u64).sum()
        });
        turns.extend(conversations);
    }

    Some(ConversationRecord {
        source_kind,
        url,
        state,
        created_at,
        closed_at,
        number_of_prompts,
        tokens_of_prompts,
        tokens_of_answers,
        body,
        turns,
    })
}

fn kind_from_url(url: &str) -> SourceKind {
    if url.contains("/pull/") {
        SourceKind::PullRequest
    } else {
        SourceKind::Issue
    }
}

fn count_field(obj: &Map<String, Value>, key: &str, warn: &mut impl FnMut(String)) -> Option<u64> {
    match obj.get(key)? {
        Value::Null => None,
        Value::Number(n) => {
            if let Some(v) = n.as_u64() {
                Some(v)
            } else {
                match n.as_f64() {
                    Some(f) if f >= 0.0 && f.fract() == 0.0 && f < u64::MAX as f64 => Some(f as u64),
                    _ => {
                        warn(format!("{key} is not a non-negative integer: {n}"));
                        None
                    }
                }
            }
        }
        Value::String(s) => match s.trim().parse() {
            Ok(v) => Some(v),
            Err(_) => {
                warn(format!("{key} is not a non-negative integer: {s:?}"));
                None
            }
        },
        other => {
            warn(format!("{key} has unexpected type: {other}"));
            None
        }
    }
}

fn timestamp_field(
    obj: &Map<String, Value>,
    key: &str,
    warn: &mut impl FnMut(String),
) -> Option<DateTime<Utc>> {
    let raw = obj.get(key)?.as_str()?.trim();
    if raw.is_empty() {
        return None;
    }
    let parsed = parse_timestamp(raw);
    if parsed.is_none() {
        warn(format!("{key} is not a valid timestamp: {raw:?}"));
    }
    parsed
}

/// RFC 3339, or a naive `YYYY-MM-DD[T ]HH:MM:SS[.f]` read as UTC.
pub(crate) fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(raw, fmt).ok())
        .map(|naive| naive.and_utc())
}

/// Writes records as a snapshot with one sharing per record.
///
/// Parsing the output yields the input records again.
pub fn emit_snapshot_json(records: &[ConversationRecord]) -> Vec<u8> {
    let sources: Vec<Value> = records
        .iter()
        .map(|r| {
            let conversations: Vec<Value> = r
                .turns
                .iter()
                .map(|t| json!({ "Prompt": t.prompt_text, "Answer": t.answer_text }))
                .collect();
            json!({
                "Type": match r.source_kind {
                    SourceKind::PullRequest => "pull request",
                    SourceKind::Issue => "issue",
                },
                "URL": r.url,
                "State": r.state.as_str().to_uppercase(),
                "CreatedAt": r.created_at.map(|t| t.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true)),
                "ClosedAt": r.closed_at.map(|t| t.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true)),
                "Body": r.body,
                "ChatgptSharing": [{
                    "NumberOfPrompts": r.number_of_prompts,
                    "TokensOfPrompts": r.tokens_of_prompts,
                    "TokensOfAnswers": r.tokens_of_answers,
                    "Conversations": conversations,
                }],
            })
        })
        .collect();
    let mut out = serde_json::to_vec_pretty(&json!({ "Sources": sources }))
        .expect("serializing a JSON value cannot fail");
    out.push(b'\n');
    out
}
