//! Effectiveness scoring of answers.
//!
//! The score of one prompt/answer turn is a weighted sum of three components:
//!
//! ```text
//! score = w_length * words(answer)
//!       + w_ratio  * tokens_of_answers / (tokens_of_prompts + 1)
//!       + w_sent   * polarity(answer)
//! ```
//!
//! with default weights `(0.5, 0.3, 0.2)`. The word count is used raw, so it
//! dominates the other two terms for any realistic answer.
//!
//! Token counts come from the record (snapshots carry them per sharing, not per
//! turn), so every turn of a record shares the same token ratio.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ConversationRecord, ConversationTurn};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub length: f64,
    pub ratio: f64,
    pub sentiment: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            length: 0.5,
            ratio: 0.3,
            sentiment: 0.2,
        }
    }
}

impl Weights {
    pub fn new(length: f64, ratio: f64, sentiment: f64) -> Result<Self, MetricsError> {
        for (name, w) in [("length", length), ("ratio", ratio), ("sentiment", sentiment)] {
            if !w.is_finite() || w < 0.0 {
                return Err(MetricsError::InvalidWeights(format!(
                    "{name} weight must be finite and >= 0, got {w}"
                )));
            }
        }
        Ok(Self {
            length,
            ratio,
            sentiment,
        })
    }

    /// Multiplies every weight by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, MetricsError> {
        Self::new(
            self.length * factor,
            self.ratio * factor,
            self.sentiment * factor,
        )
    }

    pub fn combine(&self, response_length: f64, token_ratio: f64, sentiment: f64) -> f64 {
        self.length * response_length + self.ratio * token_ratio + self.sentiment * sentiment
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.length, self.ratio, self.sentiment)
    }
}

impl FromStr for Weights {
    type Err = MetricsError;

    /// Parses `w_len,w_ratio,w_sent`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(MetricsError::InvalidWeights(format!(
                "expected three comma-separated values, got {s:?}"
            )));
        }
        let mut values = [0.0; 3];
        for (slot, part) in values.iter_mut().zip(&parts) {
            *slot = part
                .parse()
                .map_err(|_| MetricsError::InvalidWeights(format!("not a number: {part:?}")))?;
        }
        Self::new(values[0], values[1], values[2])
    }
}

/// Word valences used for sentiment polarity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SentimentLexicon {
    entries: BTreeMap<String, f64>,
}

const BUILTIN_LEXICON: [(&str, f64); 20] = [
    ("excellent", 1.0),
    ("perfect", 1.0),
    ("great", 0.8),
    ("good", 0.7),
    ("helpful", 0.6),
    ("correct", 0.5),
    ("thanks", 0.4),
    ("works", 0.3),
    ("fix", 0.2),
    ("ok", 0.1),
    ("issue", -0.3),
    ("bug", -0.4),
    ("error", -0.4),
    ("wrong", -0.5),
    ("bad", -0.7),
    ("broken", -0.6),
    ("fail", -0.6),
    ("crash", -0.7),
    ("terrible", -0.9),
    ("awful", -0.9),
];

impl SentimentLexicon {
    /// The 20-word built-in lexicon.
    pub fn builtin() -> Self {
        Self {
            entries: BUILTIN_LEXICON
                .iter()
                .map(|&(w, v)| (w.to_string(), v))
                .collect(),
        }
    }

    pub fn from_entries<I, S>(entries: I) -> Result<Self, MetricsError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut lexicon = Self::default();
        for (i, (word, valence)) in entries.into_iter().enumerate() {
            lexicon.insert(word.into(), valence, i + 1)?;
        }
        Ok(lexicon)
    }

    /// Parses `word<TAB>valence` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, MetricsError> {
        let mut lexicon = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(word), Some(value), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(MetricsError::Lexicon {
                    line: line_no,
                    message: format!("expected `word<TAB>valence`, got {line:?}"),
                });
            };
            let valence: f64 = value.parse().map_err(|_| MetricsError::Lexicon {
                line: line_no,
                message: format!("valence {value:?} is not a number"),
            })?;
            lexicon.insert(word.to_string(), valence, line_no)?;
        }
        Ok(lexicon)
    }

    fn insert(&mut self, word: String, valence: f64, line: usize) -> Result<(), MetricsError> {
        let word = word.trim().to_lowercase();
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(MetricsError::Lexicon {
                line,
                message: format!("lexicon word must be a single token, got {word:?}"),
            });
        }
        if !(-1.0..=1.0).contains(&valence) {
            return Err(MetricsError::Lexicon {
                line,
                message: format!("valence {valence} for {word:?} is outside [-1, 1]"),
            });
        }
        self.entries.insert(word, valence);
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(w, v)| (w.as_str(), *v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Granularity {
    /// One breakdown per conversation turn.
    #[default]
    Turn,
    /// One breakdown per record, averaged over its turns.
    Record,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Turn => "turn",
            Granularity::Record => "record",
        })
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "turn" => Ok(Granularity::Turn),
            "record" => Ok(Granularity::Record),
            other => Err(format!("unknown granularity {other:?} (expected turn|record)")),
        }
    }
}

/// The three score components and their weighted total.
///
/// `response_length` is a word count for a single turn; at record granularity
/// it is the mean word count over turns and may be fractional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessBreakdown {
    pub response_length: f64,
    pub token_ratio: f64,
    pub sentiment: f64,
    pub score: f64,
}

impl EffectivenessBreakdown {
    pub fn from_components(
        weights: &Weights,
        response_length: f64,
        token_ratio: f64,
        sentiment: f64,
    ) -> Self {
        Self {
            response_length,
            token_ratio,
            sentiment,
            score: weights.combine(response_length, token_ratio, sentiment),
        }
    }
}

/// Number of maximal runs of non-whitespace characters.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// `tokens_answers / (tokens_prompts + 1)`.
pub fn token_ratio(tokens_answers: u64, tokens_prompts: u64) -> f64 {
    tokens_answers as f64 / (tokens_prompts as f64 + 1.0)
}

/// Mean valence of the lexicon words found in `text`, or 0 when none match.
pub fn sentiment_polarity(text: &str, lexicon: &SentimentLexicon) -> f64 {
    let mut sum = 0.0;
    let mut hits = 0usize;
    for token in text.split_whitespace() {
        let trimmed = token.trim_matches(|c: char| !c.is_alphanumeric());
        if trimmed.is_empty() {
            continue;
        }
        if let Some(v) = lexicon.get(&trimmed.to_lowercase()) {
            sum += v;
            hits += 1;
        }
    }
    if hits == 0 {
        0.0
    } else {
        (sum / hits as f64).clamp(-1.0, 1.0)
    }
}

pub fn effectiveness_turn(
    turn: &ConversationTurn,
    tokens_of_answers: u64,
    tokens_of_prompts: u64,
    weights: &Weights,
    lexicon: &SentimentLexicon,
) -> EffectivenessBreakdown {
    EffectivenessBreakdown::from_components(
        weights,
        word_count(&turn.answer_text) as f64,
        token_ratio(tokens_of_answers, tokens_of_prompts),
        sentiment_polarity(&turn.answer_text, lexicon),
    )
}

/// Scores a record.
///
/// At [`Granularity::Turn`] the result has one entry per turn. At
/// [`Granularity::Record`] it has at most one entry, whose components are the
/// per-turn means and whose score is recomputed from them. A record without
/// turns yields an empty list either way.
pub fn score_record(
    record: &ConversationRecord,
    weights: &Weights,
    lexicon: &SentimentLexicon,
    granularity: Granularity,
) -> Vec<EffectivenessBreakdown> {
    let per_turn: Vec<EffectivenessBreakdown> = record
        .turns
        .iter()
        .map(|t| {
            effectiveness_turn(
                t,
                record.tokens_of_answers,
                record.tokens_of_prompts,
                weights,
                lexicon,
            )
        })
        .collect();
    match granularity {
        Granularity::Turn => per_turn,
        Granularity::Record => {
            if per_turn.is_empty() {
                return Vec::new();
            }
            let n = per_turn.len() as f64;
            let mean = |f: fn(&EffectivenessBreakdown) -> f64| {
                per_turn.iter().map(f).sum::<f64>() / n
            };
            vec![EffectivenessBreakdown::from_components(
                weights,
                mean(|b| b.response_length),
                mean(|b| b.token_ratio),
                mean(|b| b.sentiment),
            )]
        }
    }
}
