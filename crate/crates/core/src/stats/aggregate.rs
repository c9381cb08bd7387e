use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::corpus::State;
use crate::patterns::{LabeledRecord, PatternName, PatternRow};

/// One per-pattern statistics row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternAggregate {
    pub pattern: PatternName,
    pub avg_effectiveness: f64,
    pub avg_prompts: f64,
    /// `avg_effectiveness / avg_prompts`; absent when `avg_prompts` is 0.
    pub score_ratio: Option<f64>,
    pub frequency: usize,
    /// `avg_effectiveness / frequency`.
    pub normalized_score: f64,
}

/// Average effectiveness per prompt.
pub fn score_ratio(avg_effectiveness: f64, avg_prompts: f64) -> Result<f64, StatsError> {
    if !(avg_prompts > 0.0) {
        return Err(StatsError::Domain(format!(
            "score ratio needs a positive prompt average, got {avg_prompts}"
        )));
    }
    Ok(avg_effectiveness / avg_prompts)
}

/// Groups scored rows by pattern.
///
/// Output is sorted by score ratio, highest first; rows without a ratio come
/// last and ties keep canonical pattern order.
pub fn aggregate_patterns(rows: &[PatternRow]) -> Result<Vec<PatternAggregate>, StatsError> {
    #[derive(Default)]
    struct Acc {
        eff: f64,
        prompts: f64,
        n: usize,
    }
    let mut groups: BTreeMap<PatternName, Acc> = BTreeMap::new();
    for row in rows {
        let eff = match row.effectiveness {
            Some(e) if e.is_finite() => e,
            other => {
                return Err(StatsError::Domain(format!(
                    "row {} ({}) has no finite effectiveness: {other:?}",
                    row.url, row.pattern
                )))
            }
        };
        let acc = groups.entry(row.pattern).or_default();
        acc.eff += eff;
        acc.prompts += row.number_of_prompts as f64;
        acc.n += 1;
    }
    let mut out: Vec<PatternAggregate> = groups
        .into_iter()
        .map(|(pattern, acc)| {
            let n = acc.n as f64;
            let avg_effectiveness = acc.eff / n;
            let avg_prompts = acc.prompts / n;
            PatternAggregate {
                pattern,
                avg_effectiveness,
                avg_prompts,
                score_ratio: score_ratio(avg_effectiveness, avg_prompts).ok(),
                frequency: acc.n,
                normalized_score: avg_effectiveness / n,
            }
        })
        .collect();
    // Stable sort keeps canonical order among ties.
    out.sort_by(|a, b| match (a.score_ratio, b.score_ratio) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(out)
}

/// Pattern occurrences among Closed records with fewer than `threshold` prompts.
///
/// A record with k patterns adds one to each of the k counts. Patterns that
/// never occur are not listed.
pub fn threshold_frequencies(
    labeled: &[LabeledRecord],
    threshold: u64,
) -> Result<BTreeMap<PatternName, usize>, StatsError> {
    if threshold < 1 {
        return Err(StatsError::Domain("threshold must be >= 1".into()));
    }
    let mut counts = BTreeMap::new();
    for rec in labeled
        .iter()
        .filter(|r| r.state == State::Closed && r.number_of_prompts < threshold)
    {
        for &p in &rec.patterns {
            *counts.entry(p).or_insert(0) += 1;
        }
    }
    Ok(counts)
}
