//! Seeded synthetic corpora with known embedded patterns.
//!
//! Every turn draws at most one pattern from `pattern_mix` (a categorical draw;
//! the probability mass left over produces a pattern-free prompt) and embeds one
//! of that pattern's strict keyword phrases between filler words. Filler words
//! never contain a keyword of either built-in rule set, so word-boundary
//! detection recovers exactly the embedded patterns.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ConversationRecord, ConversationTurn, CorpusError, SourceKind, State};
use crate::metrics::word_count;
use crate::patterns::{default_rules, PatternName, RuleMode};

pub(crate) const FILLER: [&str; 40] = [
    "lorem", "ipsum", "dolor", "sit", "amet", "module", "parser", "buffer", "vector", "kernel",
    "widget", "cache", "socket", "thread", "branch", "commit", "merge", "deploy", "pixel",
    "cluster", "token", "schema", "query", "index", "router", "server", "client", "driver",
    "signal", "matrix", "packet", "bundle", "plugin", "daemon", "handler", "runtime", "layout",
    "engine", "sprite", "fabric",
];

const ANSWER_MOOD: [&str; 12] = [
    "good", "great", "works", "fix", "thanks", "correct", "bug", "error", "wrong", "broken",
    "issue", "ok",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub record_count: usize,
    pub pattern_mix: BTreeMap<PatternName, f64>,
    pub prompt_count_range: RangeInclusive<u64>,
    pub closed_fraction: f64,
    pub seed: u64,
    pub source_kind: SourceKind,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            record_count: 100,
            pattern_mix: PatternName::ALL.iter().map(|&p| (p, 0.12)).collect(),
            prompt_count_range: 1..=8,
            closed_fraction: 0.6,
            seed: 42,
            source_kind: SourceKind::PullRequest,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let prob = |name: &str, p: f64| {
            if p.is_finite() && (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(CorpusError::Config(format!("{name} must be in [0, 1], got {p}")))
            }
        };
        prob("closed_fraction", self.closed_fraction)?;
        for (pattern, &p) in &self.pattern_mix {
            prob(&format!("pattern_mix[{pattern}]"), p)?;
        }
        let total: f64 = self.pattern_mix.values().sum();
        if total > 1.0 + 1e-9 {
            return Err(CorpusError::Config(format!(
                "pattern_mix probabilities sum to {total}, must be <= 1"
            )));
        }
        if self.prompt_count_range.start() > self.prompt_count_range.end() {
            return Err(CorpusError::Config(format!(
                "empty prompt_count_range {:?}",
                self.prompt_count_range
            )));
        }
        Ok(())
    }
}

/// What the generator put into one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub url: String,
    pub state: State,
    pub number_of_prompts: u64,
    /// Pattern → keyword phrases embedded in the prompts, in turn order.
    pub embedded: BTreeMap<PatternName, Vec<String>>,
}

impl TruthEntry {
    pub fn patterns(&self) -> BTreeSet<PatternName> {
        self.embedded.keys().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub entries: Vec<TruthEntry>,
}

impl GroundTruth {
    pub fn closed_count(&self) -> usize {
        self.entries.iter().filter(|e| e.state == State::Closed).count()
    }

    pub fn get(&self, url: &str) -> Option<&TruthEntry> {
        self.entries.iter().find(|e| e.url == url)
    }
}

pub fn generate_synthetic_corpus(
    spec: &SynthSpec,
) -> Result<(Vec<ConversationRecord>, GroundTruth), CorpusError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let strict = default_rules(RuleMode::Table2Strict);
    let epoch: DateTime<Utc> = Utc.with_ymd_and_hms(2023, 5, 1, 0, 0, 0).unwrap();
    let segment = match spec.source_kind {
        SourceKind::PullRequest => "pull",
        SourceKind::Issue => "issues",
    };

    let mut records = Vec::with_capacity(spec.record_count);
    let mut truth = GroundTruth::default();
    for i in 0..spec.record_count {
        let url = format!("https://github.com/synthetic/project/{segment}/{}", i + 1);
        let number_of_prompts = rng.gen_range(spec.prompt_count_range.clone());
        let closed = rng.gen_bool(spec.closed_fraction);
        let state = if closed { State::Closed } else { State::Open };

        let mut embedded: BTreeMap<PatternName, Vec<String>> = BTreeMap::new();
        let mut turns = Vec::new();
        for _ in 0..number_of_prompts.max(1) {
            let mut prompt = filler(&mut rng, 2, 6);
            if let Some(pattern) = draw_pattern(&mut rng, &spec.pattern_mix) {
                let phrase = strict
                    .phrases(pattern)
                    .choose(&mut rng)
                    .expect("rule sets are never empty")
                    .clone();
                prompt.push(' ');
                prompt.push_str(&phrase);
                embedded.entry(pattern).or_default().push(phrase);
            }
            prompt.push(' ');
            prompt.push_str(&filler(&mut rng, 1, 8));
            prompt.push('.');
            turns.push(ConversationTurn::new(prompt, answer(&mut rng)));
        }

        let prompt_words: u64 = turns.iter().map(|t| word_count(&t.prompt_text) as u64).sum();
        let answer_words: u64 = turns.iter().map(|t| word_count(&t.answer_text) as u64).sum();
        let created_at = epoch + Duration::minutes(rng.gen_range(0..60 * 24 * 90));
        let closed_at = closed.then(|| created_at + Duration::minutes(rng.gen_range(1..=60 * 24 * 30)));
        let body = if rng.gen_bool(0.5) {
            filler(&mut rng, 3, 12)
        } else {
            String::new()
        };

        truth.entries.push(TruthEntry {
            url: url.clone(),
            state: state.clone(),
            number_of_prompts,
            embedded,
        });
        records.push(ConversationRecord {
            source_kind: spec.source_kind,
            url,
            state,
            created_at: Some(created_at),
            closed_at,
            number_of_prompts,
            tokens_of_prompts: prompt_words * 4 / 3 + rng.gen_range(0..5),
            tokens_of_answers: answer_words * 4 / 3 + rng.gen_range(0..20),
            body,
            turns,
        });
    }
    Ok((records, truth))
}

fn draw_pattern(rng: &mut ChaCha8Rng, mix: &BTreeMap<PatternName, f64>) -> Option<PatternName> {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (&pattern, &p) in mix {
        cumulative += p;
        if u < cumulative {
            return Some(pattern);
        }
    }
    None
}

fn filler(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    (0..n)
        .map(|_| *FILLER.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

fn answer(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(3..=60);
    let mut words: Vec<&str> = (0..n).map(|_| *FILLER.choose(rng).unwrap()).collect();
    for _ in 0..rng.gen_range(0..=3) {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, ANSWER_MOOD.choose(rng).unwrap());
    }
    words.join(" ")
}
