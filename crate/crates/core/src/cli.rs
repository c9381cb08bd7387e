use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use promptminer::corpus::{
    emit_records_csv, emit_snapshot_json, generate_synthetic_corpus, mean_prompts_closed,
    parse_records_csv, parse_snapshot, summarize, ConversationRecord, Severity, SourceKind,
    SynthSpec,
};
use promptminer::metrics::{Granularity, SentimentLexicon, Weights};
use promptminer::patterns::{default_rules, MatchMode, PatternName, RuleMode, RuleSet, Scope};
use promptminer::pipeline::{analyze, AnalysisConfig, StateFilter};
use promptminer::reference::{deviation_report, ReferenceFigures};
use promptminer::report::{
    aggregates_csv, anova_text, correlations_csv, effectiveness_csv, rank_patterns, rq1_csv,
    write_atomic, write_bundle, AnalysisBundle, RankKey,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Output(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "promptminer",
    version,
    about = "Mine developer/LLM conversation snapshots for prompt patterns and their effectiveness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Snapshot JSON files, or record CSV files (`.csv`); one kind per run
    #[arg(long, global = true, num_args = 1.., value_name = "PATH")]
    pub input: Vec<PathBuf>,
    /// Output directory (stdout when omitted, except for `analyze`)
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Rule set: `table2-strict`, `extended`, or a rule file path
    #[arg(long, global = true, default_value = "table2-strict", value_name = "FILE|table2-strict|extended")]
    pub rules: String,
    /// Keyword matching mode
    #[arg(long, global = true, default_value = "word-boundary", value_name = "word-boundary|substring")]
    pub match_mode: MatchMode,
    /// Text scanned for patterns
    #[arg(long, global = true, default_value = "prompts", value_name = "prompts|prompts+body")]
    pub scope: Scope,
    /// Effectiveness weights for length, token ratio and sentiment
    #[arg(long, global = true, default_value = "0.5,0.3,0.2", value_name = "W_LEN,W_RATIO,W_SENT")]
    pub weights: Weights,
    /// Sentiment lexicon: `builtin` or a `word<TAB>valence` file
    #[arg(long, global = true, default_value = "builtin", value_name = "FILE|builtin")]
    pub lexicon: String,
    /// Score per turn or per record
    #[arg(long, global = true, default_value = "turn", value_name = "turn|record")]
    pub granularity: Granularity,
    /// Prompt-count threshold for pattern frequencies (strictly fewer prompts)
    #[arg(long, global = true, default_value_t = 5, value_name = "N")]
    pub threshold: u64,
    /// Records that enter scoring and aggregation
    #[arg(long, global = true, default_value = "closed", value_name = "open|closed|all")]
    pub state: StateFilter,
    /// Pool pull requests and issues instead of analyzing them separately
    #[arg(long, global = true)]
    pub merge: bool,
    /// Seed for `synth`
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full pipeline: label, filter, score, explode, aggregate, ANOVA, report
    Analyze {
        /// Also write deviation.md comparing against the published reference figures
        #[arg(long)]
        deviation_report: bool,
    },
    /// Parse snapshots and write the flat record CSV
    Ingest,
    /// Label records with prompt patterns
    Detect,
    /// Effectiveness score per (record, pattern) row
    Score,
    /// One-way ANOVA of effectiveness by pattern
    Anova,
    /// Correlation matrix over scored rows
    Correlate,
    /// Pattern frequencies among closed records below the prompt threshold
    Rq1,
    /// Corpus summary statistics
    Summarize,
    /// Pattern aggregates ranked by a chosen key
    Rank {
        #[arg(long, default_value = "score-ratio", value_name = "score-ratio|avg-effectiveness|normalized-score|frequency")]
        key: RankKey,
    },
    /// Generate a seeded synthetic snapshot and its ground truth
    Synth {
        #[arg(long, default_value_t = 100)]
        records: usize,
        #[arg(long, default_value_t = 0.6)]
        closed_fraction: f64,
        /// Inclusive prompt-count range, e.g. `1-8`
        #[arg(long, default_value = "1-8", value_name = "MIN-MAX")]
        prompts: String,
        /// Per-turn pattern probabilities, e.g. `Persona=0.3,Question=0.2`
        #[arg(long, value_name = "PATTERN=P,...")]
        mix: Option<String>,
        #[arg(long, default_value = "pull_request", value_name = "pull_request|issue")]
        kind: SourceKind,
    },
}

fn input_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn output_err(e: impl std::fmt::Display) -> CliError {
    CliError::Output(e.to_string())
}

fn load_records(inputs: &[PathBuf]) -> Result<Vec<ConversationRecord>, CliError> {
    if inputs.is_empty() {
        return Err(CliError::Usage("no --input given".into()));
    }
    let is_csv = |p: &PathBuf| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let csv_count = inputs.iter().filter(|p| is_csv(p)).count();
    if csv_count != 0 && csv_count != inputs.len() {
        return Err(CliError::Usage(
            "mixing snapshot JSON and record CSV inputs is not supported".into(),
        ));
    }
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for path in inputs {
        let bytes = fs::read(path).map_err(|e| input_err(path, e))?;
        let parsed = if is_csv(path) {
            parse_records_csv(&bytes).map_err(|e| input_err(path, e))?
        } else {
            let snapshot = parse_snapshot(&bytes).map_err(|e| input_err(path, e))?;
            for issue in &snapshot.issues {
                let what = match issue.severity {
                    Severity::Skipped => "skipped",
                    Severity::Warning => "warning",
                };
                log::warn!(
                    "{}: source #{} {}: {what}: {}",
                    path.display(),
                    issue.index,
                    issue.url.as_deref().unwrap_or("(no url)"),
                    issue.message
                );
            }
            snapshot.records
        };
        for r in parsed {
            if seen.insert(r.url.clone()) {
                records.push(r);
            } else {
                log::warn!("{}: duplicate URL {} ignored", path.display(), r.url);
            }
        }
    }
    Ok(records)
}

fn read_text(path: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{path}: {e}")))
}

fn build_config(g: &GlobalArgs) -> Result<AnalysisConfig, CliError> {
    let rules: RuleSet = match g.rules.as_str() {
        "table2-strict" => default_rules(RuleMode::Table2Strict),
        "extended" => default_rules(RuleMode::Extended),
        path => RuleSet::parse(path, &read_text(path)?)
            .map_err(|e| CliError::Usage(format!("{path}: {e}")))?,
    };
    let lexicon = match g.lexicon.as_str() {
        "builtin" => SentimentLexicon::builtin(),
        path => SentimentLexicon::parse(&read_text(path)?)
            .map_err(|e| CliError::Usage(format!("{path}: {e}")))?,
    };
    if g.threshold < 1 {
        return Err(CliError::Usage("--threshold must be >= 1".into()));
    }
    Ok(AnalysisConfig {
        rules,
        match_mode: g.match_mode,
        scope: g.scope,
        weights: g.weights,
        lexicon,
        lexicon_source: g.lexicon.clone(),
        granularity: g.granularity,
        state_filter: g.state,
        threshold: g.threshold,
    })
}

/// Writes `bytes` to `<out>/<name>`, or to stdout without `--out`.
fn emit(out: Option<&Path>, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| output_err(format!("{}: {e}", dir.display())))?;
            write_atomic(&dir.join(name), bytes).map_err(output_err)
        }
        None => std::io::stdout().write_all(bytes).map_err(output_err),
    }
}

fn run_pipeline(g: &GlobalArgs) -> Result<AnalysisBundle, CliError> {
    let config = build_config(g)?;
    let records = load_records(&g.input)?;
    let mut bundle = analyze(&records, &config).map_err(|e| CliError::Input(e.to_string()))?;
    for w in &bundle.warnings {
        log::warn!("{w}");
    }
    bundle.config_echo.extend(input_echo(g));
    Ok(bundle)
}

fn input_echo(g: &GlobalArgs) -> Vec<(String, String)> {
    let inputs: Vec<String> = g.input.iter().map(|p| p.display().to_string()).collect();
    vec![
        ("input".into(), inputs.join(" ")),
        ("merge".into(), g.merge.to_string()),
    ]
}

fn cmd_analyze(g: &GlobalArgs, deviation: bool) -> Result<(), CliError> {
    let config = build_config(g)?;
    let records = load_records(&g.input)?;
    let out = g.out.clone().unwrap_or_else(|| PathBuf::from("promptminer-report"));

    let kinds: Vec<SourceKind> = [SourceKind::PullRequest, SourceKind::Issue]
        .into_iter()
        .filter(|k| records.iter().any(|r| r.source_kind == *k))
        .collect();
    let groups: Vec<(Option<SourceKind>, PathBuf, Vec<ConversationRecord>)> =
        if kinds.len() > 1 && !g.merge {
            kinds
                .iter()
                .map(|&k| {
                    let sub = match k {
                        SourceKind::PullRequest => "pull_requests",
                        SourceKind::Issue => "issues",
                    };
                    let recs = records.iter().filter(|r| r.source_kind == k).cloned().collect();
                    (Some(k), out.join(sub), recs)
                })
                .collect()
        } else {
            vec![(kinds.first().copied().filter(|_| kinds.len() == 1), out, records)]
        };

    for (kind, dir, recs) in groups {
        let mut bundle = analyze(&recs, &config).map_err(|e| CliError::Input(e.to_string()))?;
        for w in &bundle.warnings {
            log::warn!("{w}");
        }
        bundle.config_echo.extend(input_echo(g));
        bundle.config_echo.push((
            "source_kind".into(),
            kind.map_or("mixed".to_string(), |k| k.to_string()),
        ));
        let written = write_bundle(&bundle, &dir).map_err(output_err)?;
        if deviation {
            match kind {
                Some(k) => {
                    let report = deviation_report(&ReferenceFigures::for_kind(k), &bundle);
                    write_atomic(&dir.join("deviation.md"), report.as_bytes()).map_err(output_err)?;
                }
                None => log::warn!("deviation report skipped: records of mixed kinds were pooled"),
            }
        }
        println!("wrote {} files to {}", written.len(), dir.display());
    }
    Ok(())
}

fn parse_prompt_range(s: &str) -> Result<std::ops::RangeInclusive<u64>, CliError> {
    let bad = || CliError::Usage(format!("--prompts expects MIN-MAX, got {s:?}"));
    let (lo, hi) = s.split_once('-').unwrap_or((s, s));
    let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
    Ok(lo..=hi)
}

fn parse_mix(s: &str) -> Result<BTreeMap<PatternName, f64>, CliError> {
    let mut mix = BTreeMap::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, p) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--mix entry {part:?} is not PATTERN=P")))?;
        let pattern: PatternName = name.parse().map_err(|e| CliError::Usage(format!("--mix: {e}")))?;
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--mix: {p:?} is not a probability")))?;
        mix.insert(pattern, p);
    }
    Ok(mix)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let out = g.out.as_deref();
    match &cli.command {
        Command::Analyze { deviation_report } => cmd_analyze(g, *deviation_report),
        Command::Ingest => {
            let records = load_records(&g.input)?;
            emit(out, "records.csv", &emit_records_csv(&records))
        }
        Command::Detect => {
            let b = run_pipeline(g)?;
            emit(out, "labels.csv", &promptminer::patterns::serialize_labels(b.labels.as_deref().unwrap_or_default()))
        }
        Command::Score => {
            let b = run_pipeline(g)?;
            emit(out, "effectiveness.csv", &effectiveness_csv(b.rows.as_deref().unwrap_or_default()))
        }
        Command::Anova => {
            let b = run_pipeline(g)?;
            match &b.anova {
                Some(a) => emit(out, "anova.txt", anova_text(a).as_bytes()),
                None => Ok(()),
            }
        }
        Command::Correlate => {
            let b = run_pipeline(g)?;
            match &b.correlations {
                Some(m) => emit(out, "correlations.csv", &correlations_csv(m)),
                None => {
                    log::warn!("fewer than 2 scored rows; no correlation matrix");
                    Ok(())
                }
            }
        }
        Command::Rq1 => {
            let b = run_pipeline(g)?;
            let rq1 = b.rq1.expect("analyze always computes threshold frequencies");
            emit(out, "rq1_frequencies.csv", &rq1_csv(&rq1))
        }
        Command::Rank { key } => {
            let b = run_pipeline(g)?;
            let ranked = rank_patterns(b.aggregates.as_deref().unwrap_or_default(), *key);
            emit(out, "ranking.csv", &aggregates_csv(&ranked))
        }
        Command::Summarize => {
            let records = load_records(&g.input)?;
            let s = summarize(&records);
            let text = format!(
                "total_records,{}\ntotal_prompts,{}\navg_prompts_per_record,{:.6}\nopen_count,{}\nclosed_count,{}\nmean_prompts_closed,{:.6}\n",
                s.total_records,
                s.total_prompts,
                s.avg_prompts_per_record,
                s.open_count,
                s.closed_count,
                mean_prompts_closed(&records)
            );
            emit(out, "corpus_summary.csv", text.as_bytes())
        }
        Command::Synth {
            records,
            closed_fraction,
            prompts,
            mix,
            kind,
        } => {
            let mut spec = SynthSpec {
                record_count: *records,
                closed_fraction: *closed_fraction,
                prompt_count_range: parse_prompt_range(prompts)?,
                seed: g.seed,
                source_kind: *kind,
                ..SynthSpec::default()
            };
            if let Some(mix) = mix {
                spec.pattern_mix = parse_mix(mix)?;
            }
            let (recs, truth) =
                generate_synthetic_corpus(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
            emit(out, "snapshot.json", &emit_snapshot_json(&recs))?;
            if out.is_some() {
                let truth_json = serde_json::to_vec_pretty(&truth).map_err(output_err)?;
                emit(out, "ground_truth.json", &truth_json)?;
            }
            Ok(())
        }
    }
}
