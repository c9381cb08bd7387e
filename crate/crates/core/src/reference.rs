//! Published reference figures for the DevGPT pull-request and issue
//! snapshots, and a side-by-side comparison against a run.
//!
//! The reference preprocessing (matcher, scanned text, scoring granularity) is
//! not fully known, so deviations are expected; the report only lays the
//! numbers next to each other.

use std::fmt::Write as _;

use crate::corpus::SourceKind;
use crate::patterns::PatternName;
use crate::report::AnalysisBundle;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceAggregate {
    pub pattern: PatternName,
    pub avg_effectiveness: f64,
    pub avg_prompts: f64,
    pub score_ratio: f64,
    pub frequency: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFigures {
    pub kind: SourceKind,
    pub total_records: usize,
    pub total_prompts: u64,
    pub avg_prompts: f64,
    pub open_count: usize,
    pub closed_count: usize,
    /// Closed records with fewer than five prompts, top patterns only.
    pub threshold_counts: Vec<(PatternName, usize)>,
    pub anova_f: f64,
    pub anova_p: f64,
    pub aggregates: Vec<ReferenceAggregate>,
}

fn agg(
    pattern: PatternName,
    avg_effectiveness: f64,
    avg_prompts: f64,
    score_ratio: f64,
    frequency: usize,
) -> ReferenceAggregate {
    ReferenceAggregate {
        pattern,
        avg_effectiveness,
        avg_prompts,
        score_ratio,
        frequency,
    }
}

use PatternName::*;

impl ReferenceFigures {
    pub fn pull_requests() -> Self {
        Self {
            kind: SourceKind::PullRequest,
            total_records: 413,
            total_prompts: 1730,
            avg_prompts: 4.19,
            open_count: 387,
            closed_count: 26,
            threshold_counts: vec![(OutputAutomator, 78), (InstructionsBased, 67), (Question, 66)],
            anova_f: 27.04,
            anova_p: 4.05e-32,
            aggregates: vec![
                agg(Persona, 78.761773, 10.711111, 7.353278, 450),
                agg(Template, 75.942499, 146.674541, 0.517762, 1143),
                agg(Question, 87.760302, 8.015798, 10.948418, 1899),
                agg(OutputAutomator, 90.398429, 7.989474, 11.314691, 1900),
                agg(Recipe, 102.644441, 7.072441, 14.513298, 635),
                agg(InstructionsBased, 88.351193, 9.242361, 9.559374, 1931),
                agg(ContextAndInstruction, 97.334039, 8.042674, 12.102198, 703),
            ],
        }
    }

    pub fn issues() -> Self {
        Self {
            kind: SourceKind::Issue,
            total_records: 250,
            total_prompts: 1818,
            avg_prompts: 3.85,
            open_count: 253,
            closed_count: 219,
            threshold_counts: vec![(Question, 63), (OutputAutomator, 61), (InstructionsBased, 33)],
            anova_f: 41.31,
            anova_p: 1.80e-49,
            aggregates: vec![
                agg(Persona, 155.414968, 2.938776, 52.884260, 147),
                agg(Template, 66.779299, 5.433498, 12.290297, 203),
                agg(Question, 104.384771, 11.156905, 9.356069, 1861),
                agg(OutputAutomator, 94.211404, 8.220068, 11.461146, 1754),
                agg(Recipe, 75.838237, 9.360000, 8.102376, 175),
                agg(InstructionsBased, 88.156714, 8.703371, 10.129031, 890),
                agg(ContextAndInstruction, 97.889631, 7.207792, 13.581084, 231),
            ],
        }
    }

    pub fn for_kind(kind: SourceKind) -> Self {
        match kind {
            SourceKind::PullRequest => Self::pull_requests(),
            SourceKind::Issue => Self::issues(),
        }
    }
}

fn diff(observed: f64, reference: f64) -> String {
    format!("{:+.6}", observed - reference)
}

/// Markdown tables comparing a run with the reference figures.
pub fn deviation_report(reference: &ReferenceFigures, bundle: &AnalysisBundle) -> String {
    let mut out = format!("# Deviation from reference figures ({})\n\n", reference.kind);

    let s = &bundle.corpus_summary;
    out.push_str("## Corpus\n\n| Metric | Reference | Observed | Difference |\n|---|---|---|---|\n");
    let corpus_rows = [
        ("Total records", reference.total_records as f64, s.total_records as f64),
        ("Total prompts", reference.total_prompts as f64, s.total_prompts as f64),
        ("Average prompts per record", reference.avg_prompts, s.avg_prompts_per_record),
        ("Open records", reference.open_count as f64, s.open_count as f64),
        ("Closed records", reference.closed_count as f64, s.closed_count as f64),
    ];
    for (name, r, o) in corpus_rows {
        let _ = writeln!(out, "| {name} | {r} | {o:.2} | {} |", diff(o, r));
    }

    out.push_str("\n## Threshold frequencies\n\n| Pattern | Reference | Observed | Difference |\n|---|---|---|---|\n");
    let observed_counts = bundle.rq1.as_ref().map(|r| &r.counts);
    for &(p, r) in &reference.threshold_counts {
        let o = observed_counts.and_then(|c| c.get(&p)).copied().unwrap_or(0);
        let _ = writeln!(out, "| {p} | {r} | {o} | {:+} |", o as i64 - r as i64);
    }

    out.push_str("\n## ANOVA\n\n| Statistic | Reference | Observed |\n|---|---|---|\n");
    match &bundle.anova {
        Some(a) => {
            let _ = writeln!(out, "| F | {:.2} | {:.2} |", reference.anova_f, a.f_stat);
            let _ = writeln!(out, "| p | {:.2e} | {:.2e} |", reference.anova_p, a.p_value);
            let _ = writeln!(out, "| df | n/a | ({},{}) |", a.df_between, a.df_within);
        }
        None => {
            let _ = writeln!(out, "| F | {:.2} | not computed |", reference.anova_f);
        }
    }

    out.push_str(
        "\n## Pattern statistics\n\n\
         | Pattern | Ref. avg eff. | Obs. avg eff. | Ref. avg prompts | Obs. avg prompts | \
         Ref. score ratio | Obs. score ratio | Ref. freq. | Obs. freq. |\n\
         |---|---|---|---|---|---|---|---|---|\n",
    );
    let observed = bundle.aggregates.as_deref().unwrap_or_default();
    for r in &reference.aggregates {
        let o = observed.iter().find(|a| a.pattern == r.pattern);
        let cell = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "n/a".into());
        let _ = writeln!(
            out,
            "| {} | {:.6} | {} | {:.6} | {} | {:.6} | {} | {} | {} |",
            r.pattern,
            r.avg_effectiveness,
            cell(o.map(|a| a.avg_effectiveness)),
            r.avg_prompts,
            cell(o.map(|a| a.avg_prompts)),
            r.score_ratio,
            cell(o.and_then(|a| a.score_ratio)),
            r.frequency,
            o.map_or_else(|| "n/a".to_string(), |a| a.frequency.to_string()),
        );
    }
    out
}
