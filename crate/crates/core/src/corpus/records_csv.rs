//! Flat one-row-per-record CSV.
//!
//! Turns are stored in the last column as a JSON array of `{"p": .., "a": ..}`
//! objects; timestamps as RFC 3339 in UTC; absent timestamps as empty cells.

use std::collections::HashMap;

use chrono::SecondsFormat;
use serde::{Deserialize, Serialize};

use super::snapshot::parse_timestamp;
use super::{ConversationRecord, ConversationTurn, CorpusError, State};

pub const RECORD_COLUMNS: [&str; 10] = [
    "url",
    "source_kind",
    "state",
    "created_at",
    "closed_at",
    "number_of_prompts",
    "tokens_of_prompts",
    "tokens_of_answers",
    "body",
    "turns",
];

#[derive(Serialize, Deserialize)]
struct TurnCell {
    p: String,
    a: String,
}

pub fn emit_records_csv(records: &[ConversationRecord]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RECORD_COLUMNS).expect("in-memory write");
    for r in records {
        let turns: Vec<TurnCell> = r
            .turns
            .iter()
            .map(|t| TurnCell {
                p: t.prompt_text.clone(),
                a: t.answer_text.clone(),
            })
            .collect();
        let ts = |t: Option<chrono::DateTime<chrono::Utc>>| {
            t.map(|t| t.to_rfc3339_opts(SecondsFormat::AutoSi, true))
                .unwrap_or_default()
        };
        w.write_record([
            r.url.clone(),
            r.source_kind.as_str().to_string(),
            r.state.as_str().to_string(),
            ts(r.created_at),
            ts(r.closed_at),
            r.number_of_prompts.to_string(),
            r.tokens_of_prompts.to_string(),
            r.tokens_of_answers.to_string(),
            r.body.clone(),
            serde_json::to_string(&turns).expect("strings always serialize"),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn parse_records_csv(bytes: &[u8]) -> Result<Vec<ConversationRecord>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let headers = reader.headers()?.clone();
    let positions: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let mut idx = [0usize; RECORD_COLUMNS.len()];
    for (slot, name) in idx.iter_mut().zip(RECORD_COLUMNS) {
        *slot = *positions
            .get(name)
            .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))?;
    }
    let [url, kind, state, created, closed, prompts, tok_p, tok_a, body, turns] = idx;

    let mut out = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row?;
        let row_no = n as u64 + 1;
        let bad = |message: String| CorpusError::Row { row: row_no, message };
        let cell = |i: usize| row.get(i).unwrap_or("");
        let int = |i: usize, name: &str| {
            cell(i)
                .trim()
                .parse::<u64>()
                .map_err(|_| bad(format!("{name} {:?} is not a non-negative integer", cell(i))))
        };
        let time = |i: usize, name: &str| {
            let raw = cell(i).trim();
            if raw.is_empty() {
                Ok(None)
            } else {
                parse_timestamp(raw)
                    .map(Some)
                    .ok_or_else(|| bad(format!("{name} {raw:?} is not a timestamp")))
            }
        };
        if cell(url).is_empty() {
            return Err(bad("url is empty".into()));
        }
        let turn_cells: Vec<TurnCell> = if cell(turns).trim().is_empty() {
            Vec::new()
        } else {
            serde_json::from_str(cell(turns)).map_err(|e| bad(format!("turns: {e}")))?
        };
        out.push(ConversationRecord {
            source_kind: cell(kind).parse().map_err(bad)?,
            url: cell(url).to_string(),
            state: State::normalize(cell(state)),
            created_at: time(created, "created_at")?,
            closed_at: time(closed, "closed_at")?,
            number_of_prompts: int(prompts, "number_of_prompts")?,
            tokens_of_prompts: int(tok_p, "tokens_of_prompts")?,
            tokens_of_answers: int(tok_a, "tokens_of_answers")?,
            body: cell(body).to_string(),
            turns: turn_cells
                .into_iter()
                .map(|t| ConversationTurn::new(t.p, t.a))
                .collect(),
        });
    }
    Ok(out)
}
