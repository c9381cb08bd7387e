//! The end-to-end analysis run.
//!
//! Order of operations:
//!
//! 1. label every record with the configured rules
//! 2. keep records in the configured state (Closed by default)
//! 3. correlate the record-level numeric columns
//! 4. score effectiveness
//! 5. explode labels into one row per (record, pattern), times one row per
//!    scored turn at turn granularity
//! 6. correlate the row-level columns including the score
//! 7. per-pattern aggregates, ANOVA of effectiveness by pattern
//!
//! Threshold frequencies are computed from step 1 output over the whole corpus,
//! since they select Closed records themselves.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{summarize, ConversationRecord, State};
use crate::metrics::{score_record, EffectivenessBreakdown, Granularity, SentimentLexicon, Weights};
use crate::patterns::{
    default_rules, explode, label_records, LabeledRecord, MatchMode, PatternName, PatternRow,
    RuleMode, RuleSet, Scope,
};
use crate::report::{AnalysisBundle, ThresholdCounts};
use crate::stats::{
    aggregate_patterns, correlation_matrix, one_way_anova, threshold_frequencies,
    CorrelationMatrix, NumericTable, StatsError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Which records enter scoring and aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StateFilter {
    Open,
    #[default]
    Closed,
    All,
}

impl StateFilter {
    pub fn keeps(&self, state: &State) -> bool {
        match self {
            StateFilter::Open => *state == State::Open,
            StateFilter::Closed => *state == State::Closed,
            StateFilter::All => true,
        }
    }
}

impl fmt::Display for StateFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StateFilter::Open => "open",
            StateFilter::Closed => "closed",
            StateFilter::All => "all",
        })
    }
}

impl FromStr for StateFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "open" => Ok(StateFilter::Open),
            "closed" => Ok(StateFilter::Closed),
            "all" => Ok(StateFilter::All),
            other => Err(format!("unknown state {other:?} (expected open|closed|all)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub rules: RuleSet,
    pub match_mode: MatchMode,
    pub scope: Scope,
    pub weights: Weights,
    pub lexicon: SentimentLexicon,
    /// Where the lexicon came from, for the config echo.
    pub lexicon_source: String,
    pub granularity: Granularity,
    pub state_filter: StateFilter,
    pub threshold: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            rules: default_rules(RuleMode::Table2Strict),
            match_mode: MatchMode::default(),
            scope: Scope::default(),
            weights: Weights::default(),
            lexicon: SentimentLexicon::builtin(),
            lexicon_source: "builtin".into(),
            granularity: Granularity::default(),
            state_filter: StateFilter::default(),
            threshold: 5,
        }
    }
}

impl AnalysisConfig {
    pub fn echo(&self) -> Vec<(String, String)> {
        [
            ("rules", self.rules.name().to_string()),
            ("match_mode", self.match_mode.to_string()),
            ("scope", self.scope.to_string()),
            ("weights", self.weights.to_string()),
            ("lexicon", self.lexicon_source.clone()),
            ("granularity", self.granularity.to_string()),
            ("state", self.state_filter.to_string()),
            ("threshold", self.threshold.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

pub const RECORD_CORRELATION_COLUMNS: [&str; 4] = [
    "number_of_prompts",
    "tokens_of_prompts",
    "tokens_of_answers",
    "time_lapsed_hours",
];

pub const ROW_CORRELATION_COLUMNS: [&str; 6] = [
    "number_of_prompts",
    "tokens_of_prompts",
    "tokens_of_answers",
    "time_lapsed_hours",
    "response_length",
    "effectiveness_score",
];

fn record_table(labeled: &[&LabeledRecord]) -> NumericTable {
    let col = |f: fn(&LabeledRecord) -> Option<f64>| labeled.iter().map(|r| f(r)).collect();
    NumericTable::new()
        .with_column(RECORD_CORRELATION_COLUMNS[0], col(|r| Some(r.number_of_prompts as f64)))
        .and_then(|t| t.with_column(RECORD_CORRELATION_COLUMNS[1], col(|r| Some(r.tokens_of_prompts as f64))))
        .and_then(|t| t.with_column(RECORD_CORRELATION_COLUMNS[2], col(|r| Some(r.tokens_of_answers as f64))))
        .and_then(|t| t.with_column(RECORD_CORRELATION_COLUMNS[3], col(|r| r.time_lapsed_hours)))
        .expect("columns share one length")
}

/// Numeric table over scored pattern rows.
pub fn row_table(rows: &[PatternRow]) -> NumericTable {
    let col = |f: fn(&PatternRow) -> Option<f64>| rows.iter().map(f).collect();
    NumericTable::new()
        .with_column(ROW_CORRELATION_COLUMNS[0], col(|r| Some(r.number_of_prompts as f64)))
        .and_then(|t| t.with_column(ROW_CORRELATION_COLUMNS[1], col(|r| Some(r.tokens_of_prompts as f64))))
        .and_then(|t| t.with_column(ROW_CORRELATION_COLUMNS[2], col(|r| Some(r.tokens_of_answers as f64))))
        .and_then(|t| t.with_column(ROW_CORRELATION_COLUMNS[3], col(|r| r.time_lapsed_hours)))
        .and_then(|t| t.with_column(ROW_CORRELATION_COLUMNS[4], col(|r| r.response_length)))
        .and_then(|t| t.with_column(ROW_CORRELATION_COLUMNS[5], col(|r| r.effectiveness)))
        .expect("columns share one length")
}

/// Explodes one labeled record and attaches its scores.
///
/// Each (record, pattern) row is repeated once per breakdown; at turn
/// granularity the row carries the turn index.
pub fn scored_rows(
    labeled: &LabeledRecord,
    scores: &[EffectivenessBreakdown],
    granularity: Granularity,
) -> Vec<PatternRow> {
    let mut out = Vec::new();
    for row in explode(std::slice::from_ref(labeled)) {
        for (i, b) in scores.iter().enumerate() {
            out.push(PatternRow {
                turn: (granularity == Granularity::Turn).then_some(i),
                response_length: Some(b.response_length),
                effectiveness: Some(b.score),
                ..row.clone()
            });
        }
    }
    out
}

fn matrix_if_enough(table: &NumericTable) -> Option<CorrelationMatrix> {
    (table.row_count() >= 2).then(|| correlation_matrix(table))
}

/// Runs the whole analysis over `records`.
pub fn analyze(
    records: &[ConversationRecord],
    config: &AnalysisConfig,
) -> Result<AnalysisBundle, PipelineError> {
    let mut bundle = AnalysisBundle::new(summarize(records), config.echo());

    let labeled = label_records(records, &config.rules, config.match_mode, config.scope);
    bundle.rq1 = Some(ThresholdCounts {
        threshold: config.threshold,
        counts: threshold_frequencies(&labeled, config.threshold)?,
    });

    let kept: Vec<usize> = (0..records.len())
        .filter(|&i| config.state_filter.keeps(&records[i].state))
        .collect();
    if kept.is_empty() {
        bundle
            .warnings
            .push(format!("no records in state `{}`; nothing to score", config.state_filter));
    }

    let kept_labels: Vec<&LabeledRecord> = kept.iter().map(|&i| &labeled[i]).collect();
    bundle.pre_score_correlations = matrix_if_enough(&record_table(&kept_labels));

    let scores: Vec<Vec<EffectivenessBreakdown>> = kept
        .par_iter()
        .map(|&i| score_record(&records[i], &config.weights, &config.lexicon, config.granularity))
        .collect();

    let rows: Vec<PatternRow> = kept_labels
        .iter()
        .zip(&scores)
        .flat_map(|(l, s)| scored_rows(l, s, config.granularity))
        .collect();

    bundle.correlations = matrix_if_enough(&row_table(&rows));
    bundle.aggregates = Some(aggregate_patterns(&rows)?);
    bundle.anova = run_anova(&rows, &mut bundle.warnings);
    bundle.rows = Some(rows);
    bundle.labels = Some(labeled);
    Ok(bundle)
}

/// Effectiveness values grouped by pattern, in canonical order, empty groups dropped.
pub fn effectiveness_groups(rows: &[PatternRow]) -> Vec<(String, Vec<f64>)> {
    PatternName::ALL
        .iter()
        .map(|&p| {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| r.pattern == p)
                .filter_map(|r| r.effectiveness)
                .collect();
            (p.display_name().to_string(), values)
        })
        .filter(|(_, v)| !v.is_empty())
        .collect()
}

fn run_anova(rows: &[PatternRow], warnings: &mut Vec<String>) -> Option<crate::stats::AnovaResult> {
    let groups = effectiveness_groups(rows);
    let total: usize = groups.iter().map(|(_, v)| v.len()).sum();
    if groups.len() < 2 || total <= groups.len() {
        warnings.push(format!(
            "ANOVA omitted: needs at least 2 patterns and more observations than patterns \
             (have {} patterns, {total} observations)",
            groups.len()
        ));
        return None;
    }
    match one_way_anova(&groups) {
        Ok(result) => Some(result),
        Err(e) => {
            warnings.push(format!("ANOVA omitted: {e}"));
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic_corpus, SynthSpec};

    #[test]
    fn synthetic_run_fills_every_section() {
        let (records, _) = generate_synthetic_corpus(&SynthSpec::default()).unwrap();
        let bundle = analyze(&records, &AnalysisConfig::default()).unwrap();
        assert!(bundle.anova.is_some());
        assert!(bundle.correlations.is_some());
        assert!(bundle.pre_score_correlations.is_some());
        assert_eq!(bundle.labels.as_ref().unwrap().len(), records.len());
        let rows = bundle.rows.as_ref().unwrap();
        let total: usize = bundle.aggregates.as_ref().unwrap().iter().map(|a| a.frequency).sum();
        assert_eq!(total, rows.len());
        assert!(rows.iter().all(|r| r.state == State::Closed));
        assert!(bundle.warnings.is_empty(), "{:?}", bundle.warnings);
    }

    #[test]
    fn no_closed_records() {
        let spec = SynthSpec {
            record_count: 20,
            closed_fraction: 0.0,
            ..SynthSpec::default()
        };
        let (records, _) = generate_synthetic_corpus(&spec).unwrap();
        let bundle = analyze(&records, &AnalysisConfig::default()).unwrap();
        assert!(bundle.aggregates.as_ref().unwrap().is_empty());
        assert!(bundle.anova.is_none());
        assert!(bundle.warnings.iter().any(|w| w.contains("ANOVA omitted")));
    }

    #[test]
    fn record_granularity_gives_one_row_per_pattern() {
        let (records, _) = generate_synthetic_corpus(&SynthSpec::default()).unwrap();
        let config = AnalysisConfig {
            granularity: Granularity::Record,
            ..AnalysisConfig::default()
        };
        let bundle = analyze(&records, &config).unwrap();
        let labels = bundle.labels.as_ref().unwrap();
        let expected: usize = labels
            .iter()
            .filter(|l| l.state == State::Closed)
            .map(|l| l.patterns.len())
            .sum();
        let rows = bundle.rows.as_ref().unwrap();
        assert_eq!(rows.len(), expected);
        assert!(rows.iter().all(|r| r.turn.is_none()));
    }

    #[test]
    fn state_filter_parsing() {
        assert_eq!("all".parse(), Ok(StateFilter::All));
        assert!("merged".parse::<StateFilter>().is_err());
        assert!(StateFilter::All.keeps(&State::Other("x".into())));
    }
}
