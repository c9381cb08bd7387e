//! Rendering analysis results to CSV and Markdown.
//!
//! Every renderer is a pure function of the [`AnalysisBundle`], so identical
//! bundles always produce identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusSummary;
use crate::patterns::{serialize_labels, LabeledRecord, PatternName, PatternRow};
use crate::stats::{AnovaResult, CorrelationMatrix, PatternAggregate};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Pattern counts among closed records below a prompt threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCounts {
    pub threshold: u64,
    pub counts: BTreeMap<PatternName, usize>,
}

/// Everything one analysis run produced. Absent sections are not rendered.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisBundle {
    pub corpus_summary: CorpusSummary,
    pub labels: Option<Vec<LabeledRecord>>,
    pub rows: Option<Vec<PatternRow>>,
    pub aggregates: Option<Vec<PatternAggregate>>,
    pub anova: Option<AnovaResult>,
    /// Record-level columns, before scoring.
    pub pre_score_correlations: Option<CorrelationMatrix>,
    /// Row-level columns including the effectiveness score.
    pub correlations: Option<CorrelationMatrix>,
    pub rq1: Option<ThresholdCounts>,
    pub warnings: Vec<String>,
    /// Ordered `key = value` pairs of the effective configuration.
    pub config_echo: Vec<(String, String)>,
}

impl AnalysisBundle {
    pub fn new(corpus_summary: CorpusSummary, config_echo: Vec<(String, String)>) -> Self {
        Self {
            corpus_summary,
            labels: None,
            rows: None,
            aggregates: None,
            anova: None,
            pre_score_correlations: None,
            correlations: None,
            rq1: None,
            warnings: Vec::new(),
            config_echo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankKey {
    #[default]
    ScoreRatio,
    AvgEffectiveness,
    NormalizedScore,
    Frequency,
}

impl std::str::FromStr for RankKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "score-ratio" => Ok(RankKey::ScoreRatio),
            "avg-effectiveness" => Ok(RankKey::AvgEffectiveness),
            "normalized-score" => Ok(RankKey::NormalizedScore),
            "frequency" => Ok(RankKey::Frequency),
            other => Err(format!("unknown rank key {other:?}")),
        }
    }
}

/// Sorts descending by `key`; ties (and missing ratios, which sort last) keep
/// canonical pattern order.
pub fn rank_patterns(aggregates: &[PatternAggregate], key: RankKey) -> Vec<PatternAggregate> {
    let value = |a: &PatternAggregate| -> Option<f64> {
        match key {
            RankKey::ScoreRatio => a.score_ratio,
            RankKey::AvgEffectiveness => Some(a.avg_effectiveness),
            RankKey::NormalizedScore => Some(a.normalized_score),
            RankKey::Frequency => Some(a.frequency as f64),
        }
    };
    let mut out = aggregates.to_vec();
    out.sort_by(|a, b| {
        let primary = match (value(a), value(b)) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        };
        primary.then(a.pattern.cmp(&b.pattern))
    });
    out
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

fn opt6(v: Option<f64>) -> String {
    v.map(f6).unwrap_or_default()
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub const AGGREGATE_COLUMNS: [&str; 6] = [
    "pattern",
    "avg_effectiveness_score",
    "avg_number_of_prompts",
    "score_ratio",
    "frequency",
    "normalized_score",
];

pub fn aggregates_csv(aggregates: &[PatternAggregate]) -> Vec<u8> {
    csv_bytes(
        &AGGREGATE_COLUMNS,
        aggregates.iter().map(|a| {
            [
                a.pattern.display_name().to_string(),
                f6(a.avg_effectiveness),
                f6(a.avg_prompts),
                opt6(a.score_ratio),
                a.frequency.to_string(),
                f6(a.normalized_score),
            ]
        }),
    )
}

pub const EFFECTIVENESS_COLUMNS: [&str; 10] = [
    "url",
    "pattern",
    "turn",
    "state",
    "number_of_prompts",
    "tokens_of_prompts",
    "tokens_of_answers",
    "time_lapsed_hours",
    "response_length",
    "effectiveness_score",
];

pub fn effectiveness_csv(rows: &[PatternRow]) -> Vec<u8> {
    csv_bytes(
        &EFFECTIVENESS_COLUMNS,
        rows.iter().map(|r| {
            [
                r.url.clone(),
                r.pattern.display_name().to_string(),
                r.turn.map(|t| t.to_string()).unwrap_or_default(),
                r.state.as_str().to_string(),
                r.number_of_prompts.to_string(),
                r.tokens_of_prompts.to_string(),
                r.tokens_of_answers.to_string(),
                opt6(r.time_lapsed_hours),
                opt6(r.response_length),
                opt6(r.effectiveness),
            ]
        }),
    )
}

fn f4(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".to_string()
    } else {
        s
    }
}

/// Label row and column, 4-decimal entries, empty cells for absent values.
pub fn correlations_csv(matrix: &CorrelationMatrix) -> Vec<u8> {
    let mut header = vec![""];
    header.extend(matrix.labels.iter().map(String::as_str));
    csv_bytes(
        &header,
        matrix.labels.iter().zip(&matrix.r).map(|(label, row)| {
            std::iter::once(label.clone())
                .chain(row.iter().map(|v| v.map(f4).unwrap_or_default()))
                .collect::<Vec<_>>()
        }),
    )
}

pub fn rq1_csv(rq1: &ThresholdCounts) -> Vec<u8> {
    csv_bytes(
        &["pattern", "frequency"],
        sorted_counts(&rq1.counts)
            .into_iter()
            .map(|(p, n)| [p.display_name().to_string(), n.to_string()]),
    )
}

fn sorted_counts(counts: &BTreeMap<PatternName, usize>) -> Vec<(PatternName, usize)> {
    let mut v: Vec<_> = counts.iter().map(|(p, n)| (*p, *n)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

/// `F=8.000000, df=(1,2), p=1.06e-1`
pub fn anova_line(anova: &AnovaResult) -> String {
    format!(
        "F={:.6}, df=({},{}), p={:.2e}",
        anova.f_stat, anova.df_between, anova.df_within, anova.p_value
    )
}

pub fn anova_text(anova: &AnovaResult) -> String {
    format!(
        "{}\np_value={:e}\nss_between={:.6}\nss_within={:.6}\ngroups={}\n",
        anova_line(anova),
        anova.p_value,
        anova.ss_between,
        anova.ss_within,
        anova.group_count
    )
}

fn markdown_matrix(out: &mut String, title: &str, m: &CorrelationMatrix) {
    let _ = writeln!(out, "### {title}\n");
    let _ = writeln!(out, "| | {} |", m.labels.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(m.labels.len()));
    for (label, row) in m.labels.iter().zip(&m.r) {
        let cells: Vec<String> = row.iter().map(|v| v.map(f4).unwrap_or_default()).collect();
        let _ = writeln!(out, "| {label} | {} |", cells.join(" | "));
    }
    out.push('\n');
}

pub fn markdown_summary(bundle: &AnalysisBundle) -> String {
    let mut out = String::from("# Prompt pattern analysis\n\n## Corpus\n\n");
    let s = &bundle.corpus_summary;
    let _ = writeln!(out, "| Metric | Value |\n|---|---|");
    let _ = writeln!(out, "| Total records | {} |", s.total_records);
    let _ = writeln!(out, "| Total number of prompts | {} |", s.total_prompts);
    let _ = writeln!(out, "| Average number of prompts per record | {:.2} |", s.avg_prompts_per_record);
    let _ = writeln!(out, "| Open records | {} |", s.open_count);
    let _ = writeln!(out, "| Closed records | {} |", s.closed_count);
    out.push('\n');

    if let Some(aggs) = &bundle.aggregates {
        out.push_str("## Pattern statistics\n\n");
        out.push_str("| Pattern | Avg. Effectiveness Score | Avg. Number of Prompts | Score Ratio | Frequency | Normalized Score |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        for a in aggs {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} |",
                a.pattern,
                f6(a.avg_effectiveness),
                f6(a.avg_prompts),
                a.score_ratio.map(f6).unwrap_or_else(|| "n/a".into()),
                a.frequency,
                f6(a.normalized_score)
            );
        }
        out.push('\n');
    }

    if let Some(anova) = &bundle.anova {
        out.push_str("## ANOVA: effectiveness by pattern\n\n");
        let _ = writeln!(out, "{}\n", anova_line(anova));
    }

    if let Some(rq1) = &bundle.rq1 {
        let _ = writeln!(
            out,
            "## Pattern frequencies: closed records with fewer than {} prompts\n",
            rq1.threshold
        );
        out.push_str("| Pattern | Frequency |\n|---|---|\n");
        for (p, n) in sorted_counts(&rq1.counts) {
            let _ = writeln!(out, "| {p} | {n} |");
        }
        out.push('\n');
    }

    if bundle.pre_score_correlations.is_some() || bundle.correlations.is_some() {
        out.push_str("## Correlations\n\n");
        if let Some(m) = &bundle.pre_score_correlations {
            markdown_matrix(&mut out, "Record columns", m);
        }
        if let Some(m) = &bundle.correlations {
            markdown_matrix(&mut out, "Pattern rows with effectiveness", m);
        }
    }

    if !bundle.warnings.is_empty() {
        out.push_str("## Warnings\n\n");
        for w in &bundle.warnings {
            let _ = writeln!(out, "- {w}");
        }
        out.push('\n');
    }

    out.push_str("## Configuration\n\n```\n");
    for (k, v) in &bundle.config_echo {
        let _ = writeln!(out, "{k} = {v}");
    }
    out.push_str("```\n");
    out
}

/// Output file names, in the order they are written.
pub const BUNDLE_FILES: [&str; 7] = [
    "labels.csv",
    "effectiveness.csv",
    "aggregates.csv",
    "correlations.csv",
    "anova.txt",
    "rq1_frequencies.csv",
    "summary.md",
];

/// Renders each present section to its file contents.
pub fn render_bundle(bundle: &AnalysisBundle) -> Vec<(&'static str, Vec<u8>)> {
    let mut files = Vec::new();
    if let Some(labels) = &bundle.labels {
        files.push((BUNDLE_FILES[0], serialize_labels(labels)));
    }
    if let Some(rows) = &bundle.rows {
        files.push((BUNDLE_FILES[1], effectiveness_csv(rows)));
    }
    if let Some(aggs) = &bundle.aggregates {
        files.push((BUNDLE_FILES[2], aggregates_csv(aggs)));
    }
    if let Some(m) = &bundle.correlations {
        files.push((BUNDLE_FILES[3], correlations_csv(m)));
    }
    if let Some(a) = &bundle.anova {
        files.push((BUNDLE_FILES[4], anova_text(a).into_bytes()));
    }
    if let Some(rq1) = &bundle.rq1 {
        files.push((BUNDLE_FILES[5], rq1_csv(rq1)));
    }
    files.push((BUNDLE_FILES[6], markdown_summary(bundle).into_bytes()));
    files
}

/// Writes `contents` to `path` through a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), ReportError> {
    let io = |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file_name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{file_name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

/// Writes the bundle into `dir`, creating it if needed.
///
/// Bundle files left over from an earlier run whose section is absent now are
/// removed. Returns the paths written, in [`BUNDLE_FILES`] order.
pub fn write_bundle(bundle: &AnalysisBundle, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let files = render_bundle(bundle);
    let mut written = Vec::new();
    for (name, contents) in &files {
        let path = dir.join(name);
        write_atomic(&path, contents)?;
        written.push(path);
    }
    for name in BUNDLE_FILES {
        if files.iter().all(|(n, _)| *n != name) {
            let stale = dir.join(name);
            match fs::remove_file(&stale) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(source) => return Err(ReportError::Io { path: stale, source }),
            }
        }
    }
    Ok(written)
}
