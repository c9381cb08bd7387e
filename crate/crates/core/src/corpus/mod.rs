//! Conversation records: the normalized model, snapshot ingestion, the flat
//! record CSV and seeded synthetic corpora.

mod records_csv;
mod snapshot;
mod synth;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use records_csv::{emit_records_csv, parse_records_csv, RECORD_COLUMNS};
pub use snapshot::{emit_snapshot_json, parse_snapshot, ParseIssue, Severity, SnapshotParse};
pub use synth::{generate_synthetic_corpus, GroundTruth, SynthSpec, TruthEntry};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },
    #[error("snapshot is missing the top-level `Sources` array")]
    MissingSources,
    #[error("records CSV is missing column `{0}`")]
    MissingColumn(String),
    #[error("records CSV row {row}: {message}")]
    Row { row: u64, message: String },
    #[error("records CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid synthetic corpus configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SourceKind {
    PullRequest,
    Issue,
}

impl SourceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SourceKind::PullRequest => "pull_request",
            SourceKind::Issue => "issue",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceKind {
    type Err = String;

    /// Accepts `pull request`, `pull_request`, `PullRequest`, `pr`, `issue`, `issues`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        match key.as_str() {
            "pullrequest" | "pullrequests" | "pr" => Ok(SourceKind::PullRequest),
            "issue" | "issues" => Ok(SourceKind::Issue),
            _ => Err(format!("unknown source kind {s:?}")),
        }
    }
}

/// Lifecycle state of the PR or issue a conversation is attached to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum State {
    Open,
    Closed,
    Other(String),
}

impl State {
    /// Case-insensitive: `open` → Open, `closed`/`merged` → Closed, else Other.
    pub fn normalize(raw: &str) -> Self {
        let trimmed = raw.trim();
        match trimmed.to_lowercase().as_str() {
            "open" => State::Open,
            "closed" | "merged" => State::Closed,
            _ => State::Other(trimmed.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            State::Open => "open",
            State::Closed => "closed",
            State::Other(s) => s,
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationTurn {
    pub prompt_text: String,
    pub answer_text: String,
}

impl ConversationTurn {
    pub fn new(prompt: impl Into<String>, answer: impl Into<String>) -> Self {
        Self {
            prompt_text: prompt.into(),
            answer_text: answer.into(),
        }
    }
}

/// One PR or issue with its attached conversation(s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationRecord {
    pub source_kind: SourceKind,
    pub url: String,
    pub state: State,
    pub created_at: Option<DateTime<Utc>>,
    pub closed_at: Option<DateTime<Utc>>,
    pub number_of_prompts: u64,
    pub tokens_of_prompts: u64,
    pub tokens_of_answers: u64,
    pub body: String,
    pub turns: Vec<ConversationTurn>,
}

impl ConversationRecord {
    /// Closed but without a closing timestamp.
    pub fn is_missing_closed_at(&self) -> bool {
        self.state == State::Closed && self.closed_at.is_none()
    }

    /// All prompt texts joined with newlines.
    pub fn prompt_text(&self) -> String {
        self.turns
            .iter()
            .map(|t| t.prompt_text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub fn filter_by_state(records: &[ConversationRecord], want: &State) -> Vec<ConversationRecord> {
    records.iter().filter(|r| &r.state == want).cloned().collect()
}

/// Outcome of measuring how long a record stayed open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeLapse {
    Hours(f64),
    /// One of the timestamps is absent.
    Missing,
    /// `closed_at` precedes `created_at`.
    Negative,
}

pub fn time_lapse(record: &ConversationRecord) -> TimeLapse {
    match (record.created_at, record.closed_at) {
        (Some(created), Some(closed)) => {
            let delta = closed - created;
            if delta < chrono::Duration::zero() {
                TimeLapse::Negative
            } else {
                let secs = delta.num_seconds() as f64
                    + f64::from(delta.subsec_nanos()) / 1e9;
                TimeLapse::Hours(secs / 3600.0)
            }
        }
        _ => TimeLapse::Missing,
    }
}

/// Hours between creation and closing; absent when unknown or negative.
pub fn time_lapsed_hours(record: &ConversationRecord) -> Option<f64> {
    match time_lapse(record) {
        TimeLapse::Hours(h) => Some(h),
        TimeLapse::Missing => None,
        TimeLapse::Negative => {
            log::warn!("{}: closed_at precedes created_at, time lapsed left empty", record.url);
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub total_records: usize,
    pub total_prompts: u64,
    pub avg_prompts_per_record: f64,
    pub open_count: usize,
    pub closed_count: usize,
}

pub fn summarize(records: &[ConversationRecord]) -> CorpusSummary {
    let total_records = records.len();
    let total_prompts: u64 = records.iter().map(|r| r.number_of_prompts).sum();
    let avg_prompts_per_record = if total_records == 0 {
        0.0
    } else {
        total_prompts as f64 / total_records as f64
    };
    CorpusSummary {
        total_records,
        total_prompts,
        avg_prompts_per_record,
        open_count: records.iter().filter(|r| r.state == State::Open).count(),
        closed_count: records.iter().filter(|r| r.state == State::Closed).count(),
    }
}

/// Mean `number_of_prompts` over Closed records, 0 when there are none.
pub fn mean_prompts_closed(records: &[ConversationRecord]) -> f64 {
    let (sum, n) = records
        .iter()
        .filter(|r| r.state == State::Closed)
        .fold((0u64, 0usize), |(s, n), r| (s + r.number_of_prompts, n + 1));
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    #[test]
    fn state_normalization() {
        assert_eq!(State::normalize("CLOSED"), State::Closed);
        assert_eq!(State::normalize("Merged"), State::Closed);
        assert_eq!(State::normalize("open"), State::Open);
        assert_eq!(State::normalize("draft"), State::Other("draft".into()));
    }

    #[test]
    fn filter_examples() {
        let recs = vec![
            record("a", State::Open, 1),
            record("b", State::Closed, 1),
            record("c", State::Closed, 1),
        ];
        let closed = filter_by_state(&recs, &State::Closed);
        assert_eq!(closed.iter().map(|r| r.url.as_str()).collect::<Vec<_>>(), ["b", "c"]);
        assert!(filter_by_state(&[], &State::Closed).is_empty());
    }

    #[test]
    fn time_lapse_examples() {
        let mut r = record("a", State::Closed, 1);
        r.created_at = Some(ts("2023-01-01T00:00:00Z"));
        r.closed_at = Some(ts("2023-01-02T12:00:00Z"));
        assert_eq!(time_lapsed_hours(&r), Some(36.0));
        r.closed_at = Some(ts("2023-01-01T00:30:00Z"));
        assert_eq!(time_lapsed_hours(&r), Some(0.5));
        r.closed_at = None;
        assert_eq!(time_lapsed_hours(&r), None);
        assert!(r.is_missing_closed_at());
        r.closed_at = Some(ts("2022-12-31T00:00:00Z"));
        assert_eq!(time_lapse(&r), TimeLapse::Negative);
        assert_eq!(time_lapsed_hours(&r), None);
    }

    #[test]
    fn summarize_examples() {
        let recs = vec![record("a", State::Open, 4), record("b", State::Closed, 6)];
        let s = summarize(&recs);
        assert_eq!(s.total_prompts, 10);
        assert_eq!(s.avg_prompts_per_record, 5.0);
        assert_eq!((s.open_count, s.closed_count), (1, 1));
        assert_eq!(summarize(&[]), CorpusSummary::default());

        let with_other = vec![record("a", State::Other("draft".into()), 3)];
        let s = summarize(&with_other);
        assert_eq!((s.open_count, s.closed_count, s.total_records), (0, 0, 1));
    }

    #[test]
    fn mean_prompts_closed_examples() {
        let recs: Vec<_> = [2, 3, 5, 6]
            .iter()
            .enumerate()
            .map(|(i, &p)| record(&i.to_string(), State::Closed, p))
            .chain(std::iter::once(record("open", State::Open, 100)))
            .collect();
        assert_eq!(mean_prompts_closed(&recs), 4.0);
        assert_eq!(mean_prompts_closed(&[record("x", State::Open, 3)]), 0.0);
        assert_eq!(mean_prompts_closed(&[record("x", State::Closed, 7)]), 7.0);
    }

    #[test]
    fn source_kind_parsing() {
        assert_eq!("pull request".parse(), Ok(SourceKind::PullRequest));
        assert_eq!("pull_request".parse(), Ok(SourceKind::PullRequest));
        assert_eq!("Issue".parse(), Ok(SourceKind::Issue));
        assert!("commit".parse::<SourceKind>().is_err());
    }
}
