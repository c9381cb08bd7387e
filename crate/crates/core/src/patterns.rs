//! Prompt-pattern taxonomy and keyword-rule detection.
//!
//! A [`RuleSet`] maps each of the seven patterns to keyword phrases. A pattern
//! is detected in a text when at least one of its phrases occurs, either at
//! word boundaries ([`MatchMode::WordBoundary`], the default) or anywhere
//! ([`MatchMode::Substring`]). Matching is case-insensitive.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{time_lapsed_hours, ConversationRecord, SourceKind, State};

/// The seven prompt patterns, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PatternName {
    Persona,
    Recipe,
    Template,
    OutputAutomator,
    InstructionsBased,
    ContextAndInstruction,
    Question,
}

impl PatternName {
    pub const ALL: [PatternName; 7] = [
        PatternName::Persona,
        PatternName::Recipe,
        PatternName::Template,
        PatternName::OutputAutomator,
        PatternName::InstructionsBased,
        PatternName::ContextAndInstruction,
        PatternName::Question,
    ];

    /// Name used in reports and label files.
    pub fn display_name(&self) -> &'static str {
        match self {
            PatternName::Persona => "Persona",
            PatternName::Recipe => "Recipe",
            PatternName::Template => "Template",
            PatternName::OutputAutomator => "Output Automator",
            PatternName::InstructionsBased => "Simple Instruction",
            PatternName::ContextAndInstruction => "Context and Instruction",
            PatternName::Question => "Question",
        }
    }
}

impl fmt::Display for PatternName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown pattern name {0:?}")]
pub struct UnknownPattern(pub String);

impl FromStr for PatternName {
    type Err = UnknownPattern;

    /// Accepts canonical identifiers, display names and aliases such as
    /// "Instructions-Based Pattern" or "Context and Instructions",
    /// ignoring case, punctuation and a trailing "pattern".
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        if key.len() > "pattern".len() {
            if let Some(stripped) = key.strip_suffix("pattern") {
                key = stripped.to_string();
            }
        }
        Ok(match key.as_str() {
            "persona" => PatternName::Persona,
            "recipe" => PatternName::Recipe,
            "template" => PatternName::Template,
            "outputautomator" => PatternName::OutputAutomator,
            "instructionsbased" | "instructionbased" | "simpleinstruction"
            | "simpleinstructions" => PatternName::InstructionsBased,
            "contextandinstruction" | "contextandinstructions" => {
                PatternName::ContextAndInstruction
            }
            "question" => PatternName::Question,
            _ => return Err(UnknownPattern(s.trim().to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("line {line}: {source}")]
    UnknownPattern { line: usize, source: UnknownPattern },
    #[error("line {line}: expected `PatternName: phrase | phrase`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("pattern {0} has no phrases")]
    NoPhrases(PatternName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleMode {
    /// Exactly the published keyword table.
    Table2Strict,
    /// The strict table plus extra phrases for patterns the strict keywords miss.
    Extended,
}

impl RuleMode {
    pub fn name(&self) -> &'static str {
        match self {
            RuleMode::Table2Strict => "table2-strict",
            RuleMode::Extended => "extended",
        }
    }
}

/// Keyword phrases per pattern.
///
/// Every pattern has at least one phrase; phrases are lowercase, trimmed, with
/// single spaces, and unique within their pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    name: String,
    rules: BTreeMap<PatternName, Vec<String>>,
}

impl RuleSet {
    pub fn new<I, P, S>(name: impl Into<String>, rules: I) -> Result<Self, RuleError>
    where
        I: IntoIterator<Item = (PatternName, P)>,
        P: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut map: BTreeMap<PatternName, Vec<String>> = BTreeMap::new();
        for (pattern, phrases) in rules {
            let list = map.entry(pattern).or_default();
            for phrase in phrases {
                let phrase = normalize_phrase(phrase.as_ref());
                if !phrase.is_empty() && !list.contains(&phrase) {
                    list.push(phrase);
                }
            }
        }
        for pattern in PatternName::ALL {
            if map.get(&pattern).is_none_or(Vec::is_empty) {
                return Err(RuleError::NoPhrases(pattern));
            }
        }
        Ok(Self {
            name: name.into(),
            rules: map,
        })
    }

    /// Parses the rule-file format: `PatternName: phrase1 | phrase2`, `#` comments.
    /// Repeated pattern lines accumulate.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self, RuleError> {
        let mut entries: Vec<(PatternName, Vec<String>)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((pattern, phrases)) = line.split_once(':') else {
                return Err(RuleError::Syntax {
                    line: line_no,
                    text: line.to_string(),
                });
            };
            let pattern = pattern
                .parse()
                .map_err(|source| RuleError::UnknownPattern { line: line_no, source })?;
            entries.push((pattern, phrases.split('|').map(str::to_string).collect()));
        }
        Self::new(name, entries)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn phrases(&self, pattern: PatternName) -> &[String] {
        self.rules.get(&pattern).map(Vec::as_slice).unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PatternName, &[String])> {
        self.rules.iter().map(|(p, v)| (*p, v.as_slice()))
    }

    /// True when every phrase of `self` is also a phrase of `other` for the same pattern.
    pub fn is_subset_of(&self, other: &RuleSet) -> bool {
        self.iter()
            .all(|(p, phrases)| phrases.iter().all(|ph| other.phrases(p).contains(ph)))
    }

    /// Renders the rule set in the rule-file format.
    pub fn to_rule_file(&self) -> String {
        let mut out = format!("# rule set: {}\n", self.name);
        for (p, phrases) in self.iter() {
            out.push_str(&format!("{:?}: {}\n", p, phrases.join(" | ")));
        }
        out
    }
}

fn normalize_phrase(raw: &str) -> String {
    raw.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

const STRICT: [(PatternName, &[&str]); 7] = [
    (PatternName::Persona, &["you are", "act as", "pretend to be", "pretend you are"]),
    (PatternName::Recipe, &["step-by-step", "recipe", "guide"]),
    (PatternName::Template, &["template", "formatting"]),
    (PatternName::OutputAutomator, &["script", "code", "executable"]),
    (PatternName::InstructionsBased, &["explain", "describe", "list", "tell me", "give me"]),
    (PatternName::ContextAndInstruction, &["based on", "with this information"]),
    (PatternName::Question, &["what", "where", "when", "who", "why"]),
];

const EXTENSIONS: [(PatternName, &[&str]); 6] = [
    (PatternName::Question, &["how"]),
    (PatternName::Recipe, &["first", "then", "finally"]),
    (PatternName::Template, &["format", "respond in"]),
    (PatternName::OutputAutomator, &["show result", "output", "table"]),
    (PatternName::ContextAndInstruction, &["i am using", "i would like"]),
    (PatternName::InstructionsBased, &["help me", "write", "create"]),
];

pub fn default_rules(mode: RuleMode) -> RuleSet {
    let strict = STRICT.iter().map(|(p, phrases)| (*p, phrases.to_vec()));
    let rules: Vec<(PatternName, Vec<&str>)> = match mode {
        RuleMode::Table2Strict => strict.collect(),
        RuleMode::Extended => strict
            .chain(EXTENSIONS.iter().map(|(p, phrases)| (*p, phrases.to_vec())))
            .collect(),
    };
    RuleSet::new(mode.name(), rules).expect("built-in rule sets are complete")
}

/// Parses a rule file with the generic name `custom`.
pub fn load_rules(text: &str) -> Result<RuleSet, RuleError> {
    RuleSet::parse("custom", text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MatchMode {
    #[default]
    WordBoundary,
    Substring,
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchMode::WordBoundary => "word-boundary",
            MatchMode::Substring => "substring",
        })
    }
}

impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "word-boundary" => Ok(MatchMode::WordBoundary),
            "substring" => Ok(MatchMode::Substring),
            other => Err(format!("unknown match mode {other:?} (expected word-boundary|substring)")),
        }
    }
}

/// Which text of a record is scanned. Answers are never scanned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Scope {
    #[default]
    PromptsOnly,
    PromptsAndBody,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::PromptsOnly => "prompts",
            Scope::PromptsAndBody => "prompts+body",
        })
    }
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prompts" => Ok(Scope::PromptsOnly),
            "prompts+body" => Ok(Scope::PromptsAndBody),
            other => Err(format!("unknown scope {other:?} (expected prompts|prompts+body)")),
        }
    }
}

/// One phrase occurrence. `offset` counts characters in the lowercased text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub phrase: String,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Detection {
    pub patterns: BTreeSet<PatternName>,
    pub evidence: BTreeMap<PatternName, Vec<Evidence>>,
}

pub fn detect(text: &str, rules: &RuleSet, mode: MatchMode) -> Detection {
    let lowered = text.to_lowercase();
    let mut detection = Detection::default();
    for (pattern, phrases) in rules.iter() {
        let mut hits: Vec<(usize, &str)> = Vec::new();
        for phrase in phrases {
            hits.extend(find_all(&lowered, phrase, mode).map(|at| (at, phrase.as_str())));
        }
        if hits.is_empty() {
            continue;
        }
        hits.sort_unstable();
        let evidence = hits
            .into_iter()
            .map(|(byte_at, phrase)| Evidence {
                phrase: phrase.to_string(),
                offset: lowered[..byte_at].chars().count(),
            })
            .collect();
        detection.patterns.insert(pattern);
        detection.evidence.insert(pattern, evidence);
    }
    detection
}

/// Byte offsets of every (possibly overlapping) occurrence of `needle`.
fn find_all<'a>(haystack: &'a str, needle: &'a str, mode: MatchMode) -> impl Iterator<Item = usize> + 'a {
    let mut from = 0;
    std::iter::from_fn(move || {
        if needle.is_empty() {
            return None;
        }
        while from <= haystack.len() {
            let at = from + haystack[from..].find(needle)?;
            let step = haystack[at..].chars().next().map_or(1, char::len_utf8);
            from = at + step;
            if mode == MatchMode::Substring || at_word_boundary(haystack, at, at + needle.len()) {
                return Some(at);
            }
        }
        None
    })
}

fn at_word_boundary(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
}

/// Detected patterns plus the record metadata downstream stages need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub url: String,
    pub source_kind: SourceKind,
    pub state: State,
    pub number_of_prompts: u64,
    pub tokens_of_prompts: u64,
    pub tokens_of_answers: u64,
    pub time_lapsed_hours: Option<f64>,
    pub patterns: BTreeSet<PatternName>,
    pub evidence: BTreeMap<PatternName, Vec<Evidence>>,
}

/// The text scanned for a record: its prompts joined by newlines, followed by
/// the body when `scope` includes it.
pub fn detection_text(record: &ConversationRecord, scope: Scope) -> String {
    let mut text = record.prompt_text();
    if scope == Scope::PromptsAndBody && !record.body.is_empty() {
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(&record.body);
    }
    text
}

pub fn label_record(
    record: &ConversationRecord,
    rules: &RuleSet,
    mode: MatchMode,
    scope: Scope,
) -> LabeledRecord {
    let Detection { patterns, evidence } = detect(&detection_text(record, scope), rules, mode);
    LabeledRecord {
        url: record.url.clone(),
        source_kind: record.source_kind,
        state: record.state.clone(),
        number_of_prompts: record.number_of_prompts,
        tokens_of_prompts: record.tokens_of_prompts,
        tokens_of_answers: record.tokens_of_answers,
        time_lapsed_hours: time_lapsed_hours(record),
        patterns,
        evidence,
    }
}

/// Labels every record, in input order.
pub fn label_records(
    records: &[ConversationRecord],
    rules: &RuleSet,
    mode: MatchMode,
    scope: Scope,
) -> Vec<LabeledRecord> {
    records
        .par_iter()
        .map(|r| label_record(r, rules, mode, scope))
        .collect()
}

/// One (record, pattern) pair, optionally carrying a score.
///
/// `turn` is the index of the scored turn when scores are per turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRow {
    pub url: String,
    pub pattern: PatternName,
    pub state: State,
    pub number_of_prompts: u64,
    pub tokens_of_prompts: u64,
    pub tokens_of_answers: u64,
    pub time_lapsed_hours: Option<f64>,
    pub turn: Option<usize>,
    pub response_length: Option<f64>,
    pub effectiveness: Option<f64>,
}

/// One row per detected pattern of each record; unlabeled records contribute none.
pub fn explode(labeled: &[LabeledRecord]) -> Vec<PatternRow> {
    labeled
        .iter()
        .flat_map(|rec| {
            rec.patterns.iter().map(move |&pattern| PatternRow {
                url: rec.url.clone(),
                pattern,
                state: rec.state.clone(),
                number_of_prompts: rec.number_of_prompts,
                tokens_of_prompts: rec.tokens_of_prompts,
                tokens_of_answers: rec.tokens_of_answers,
                time_lapsed_hours: rec.time_lapsed_hours,
                turn: None,
                response_length: None,
                effectiveness: None,
            })
        })
        .collect()
}

/// `Persona;Question`, or `None` for the empty set.
pub fn format_pattern_set(patterns: &BTreeSet<PatternName>) -> String {
    if patterns.is_empty() {
        "None".to_string()
    } else {
        patterns
            .iter()
            .map(PatternName::display_name)
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Inverse of [`format_pattern_set`]; also splits on commas.
pub fn parse_pattern_set(cell: &str) -> Result<BTreeSet<PatternName>, UnknownPattern> {
    let cell = cell.trim();
    if cell.is_empty() || cell.eq_ignore_ascii_case("none") {
        return Ok(BTreeSet::new());
    }
    cell.split([';', ','])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

pub const LABEL_COLUMNS: [&str; 7] = [
    "url",
    "source_kind",
    "state",
    "number_of_prompts",
    "time_lapsed_hours",
    "patterns",
    "evidence",
];

/// Label CSV with one line per record.
///
/// `evidence` lists `phrase@offset` entries grouped by pattern, e.g.
/// `Persona: you are@0; Question: what@31`.
pub fn serialize_labels(labeled: &[LabeledRecord]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(LABEL_COLUMNS).expect("in-memory write");
    for rec in labeled {
        let evidence = rec
            .evidence
            .iter()
            .map(|(p, hits)| {
                let hits: Vec<String> = hits.iter().map(|e| format!("{}@{}", e.phrase, e.offset)).collect();
                format!("{}: {}", p.display_name(), hits.join(", "))
            })
            .collect::<Vec<_>>()
            .join("; ");
        w.write_record([
            rec.url.as_str(),
            rec.source_kind.as_str(),
            rec.state.as_str(),
            &rec.number_of_prompts.to_string(),
            &rec.time_lapsed_hours.map(|h| format!("{h:.6}")).unwrap_or_default(),
            &format_pattern_set(&rec.patterns),
            &evidence,
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}
