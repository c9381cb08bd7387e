//! Acceptance checks. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use promptminer::corpus::{emit_snapshot_json, generate_synthetic_corpus, SynthSpec};
use promptminer::metrics::{effectiveness_turn, SentimentLexicon, Weights};
use promptminer::patterns::{default_rules, detect, explode};
use promptminer::report::write_bundle;
use promptminer::stats::{ln_gamma, one_way_anova, reg_inc_beta, score_ratio};
use promptminer::{
    analyze, AnalysisConfig, ConversationRecord, ConversationTurn, MatchMode, PatternName,
    RuleMode, State,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(id: u32, title: &str, budget: Option<Duration>, check: fn() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let result = match (result, budget) {
        (Ok(_), Some(b)) if elapsed > b => Err(format!("took {elapsed:?}, budget {b:?}")),
        (r, _) => r,
    };
    match &result {
        Ok(detail) => println!("PASS criterion {id}: {title} ({detail}; {:.3}s)", elapsed.as_secs_f64()),
        Err(why) => println!("FAIL criterion {id}: {title}: {why}"),
    }
    result.is_ok()
}

// 1 ------------------------------------------------------------------------

fn reference_score_ratios() -> Outcome {
    // (avg effectiveness, avg prompts, score ratio) for pull requests then issues.
    let rows: [(&str, f64, f64, f64); 14] = [
        ("PR Persona", 78.761773, 10.711111, 7.353278),
        ("PR Template", 75.942499, 146.674541, 0.517762),
        ("PR Question", 87.760302, 8.015798, 10.948418),
        ("PR Output Automator", 90.398429, 7.989474, 11.314691),
        ("PR Recipe", 102.644441, 7.072441, 14.513298),
        ("PR Simple Instruction", 88.351193, 9.242361, 9.559374),
        ("PR Context and Instruction", 97.334039, 8.042674, 12.102198),
        ("Issues Persona", 155.414968, 2.938776, 52.884260),
        ("Issues Template", 66.779299, 5.433498, 12.290297),
        ("Issues Question", 104.384771, 11.156905, 9.356069),
        ("Issues Output Automator", 94.211404, 8.220068, 11.461146),
        ("Issues Recipe", 75.838237, 9.360000, 8.102376),
        ("Issues Simple Instruction", 88.156714, 8.703371, 10.129031),
        ("Issues Context and Instruction", 97.889631, 7.207792, 13.581084),
    ];
    let mut worst = 0.0f64;
    for (name, eff, prompts, expected) in rows {
        let got = score_ratio(eff, prompts).map_err(|e| format!("{name}: {e}"))?;
        let err = (got - expected).abs();
        ensure(err <= 5e-5, || format!("{name}: {got} vs {expected}"))?;
        worst = worst.max(err);
    }
    Ok(format!("14/14 within 5e-5, max error {worst:.2e}"))
}

// 2 ------------------------------------------------------------------------

fn anova_oracles() -> Outcome {
    let same = one_way_anova(&[("a", vec![1.0, 2.0, 3.0]), ("b", vec![1.0, 2.0, 3.0])]).unwrap();
    ensure(same.f_stat == 0.0 && same.p_value == 1.0, || {
        format!("identical groups gave F={}, p={}", same.f_stat, same.p_value)
    })?;

    let r = one_way_anova(&[("a", vec![1.0, 2.0]), ("b", vec![3.0, 4.0])]).unwrap();
    // p = I_x(d2/2, d1/2) = I_x(1, 1/2), x = d2 / (d2 + d1 F) = 0.2;
    // with a = 1 the closed form is 1 - (1 - x)^b.
    let closed_form = 1.0 - (1.0f64 - 0.2).powf(0.5);
    ensure((r.f_stat - 8.0).abs() <= 1e-12, || format!("F={}", r.f_stat))?;
    ensure((r.df_between, r.df_within) == (1, 2), || format!("df={:?}", (r.df_between, r.df_within)))?;
    ensure((r.p_value - 0.105573).abs() <= 1e-6, || format!("p={}", r.p_value))?;
    ensure((r.p_value - closed_form).abs() <= 1e-12, || format!("p={} vs {closed_form}", r.p_value))?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let k = rng.gen_range(2..=6);
        let groups: Vec<(String, Vec<f64>)> = (0..k)
            .map(|g| {
                let n = rng.gen_range(2..=20);
                let shift = rng.gen_range(-3.0..3.0);
                (format!("g{g}"), (0..n).map(|_| shift + rng.gen_range(-10.0..10.0)).collect())
            })
            .collect();
        let scale = rng.gen_range(0.01..100.0) * if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
        let loc = rng.gen_range(-1e3..1e3);
        let moved: Vec<(String, Vec<f64>)> = groups
            .iter()
            .map(|(l, v)| (l.clone(), v.iter().map(|x| scale * x + loc).collect()))
            .collect();
        let f0 = one_way_anova(&groups).unwrap().f_stat;
        let f1 = one_way_anova(&moved).unwrap().f_stat;
        let rel = (f0 - f1).abs() / f0.abs().max(1.0);
        ensure(rel <= 1e-9, || format!("trial {trial}: F {f0} vs {f1}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("exact oracles hold; 100 invariance trials, max rel diff {worst:.2e}"))
}

// 3 ------------------------------------------------------------------------

fn special_functions() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let x = (i as f64 + 0.5) / 1000.0;
        let b = 0.1 + (i % 50) as f64 * 0.9;
        let got = reg_inc_beta(x, 1.0, b).unwrap();
        let want = 1.0 - (1.0 - x).powf(b);
        ensure((got - want).abs() <= 1e-10, || format!("I({x};1,{b}) = {got}, want {want}"))?;
        worst = worst.max((got - want).abs());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(0.0..1.0);
        let a: f64 = rng.gen_range(0.05..60.0);
        let b: f64 = rng.gen_range(0.05..60.0);
        let lhs = reg_inc_beta(x, a, b).unwrap();
        let rhs = 1.0 - reg_inc_beta(1.0 - x, b, a).unwrap();
        ensure((lhs - rhs).abs() <= 1e-10, || format!("symmetry at ({x},{a},{b}): {lhs} vs {rhs}"))?;
        worst = worst.max((lhs - rhs).abs());
    }

    ensure(ln_gamma(1.0).unwrap() == 0.0 && ln_gamma(2.0).unwrap() == 0.0, || {
        "ln_gamma(1), ln_gamma(2) must be 0".into()
    })?;
    let mut anchors: Vec<(f64, f64)> = Vec::new();
    let mut ln_fact = 0.0f64;
    for n in 2..=30u32 {
        ln_fact += (n as f64).ln();
        anchors.push((n as f64 + 1.0, ln_fact));
    }
    let sqrt_pi = std::f64::consts::PI.sqrt();
    anchors.push((0.5, sqrt_pi.ln()));
    anchors.push((1.5, (sqrt_pi / 2.0).ln()));
    anchors.push((2.5, (3.0 * sqrt_pi / 4.0).ln()));
    anchors.push((3.5, (15.0 * sqrt_pi / 8.0).ln()));
    for (x, want) in anchors {
        let got = ln_gamma(x).unwrap();
        let rel = ((got - want) / want).abs();
        ensure(rel <= 1e-12, || format!("ln_gamma({x}) = {got}, want {want}"))?;
    }
    Ok(format!("1000 grid + 1000 symmetry cases, max abs error {worst:.2e}; ln_gamma anchors ok"))
}

// 4 ------------------------------------------------------------------------

const PERSONA_EXEMPLAR: &str = "You are an Odoo ERP implentation expert.  The default URL parameters land instead on the \"Description\" tab of the Task form in the Odoo app \"Project\".    Your task is to create a URL that lands a user on the \"Sub-tasks\" tab of the Task form in the Odoo app \"Project\". If there is no specific URL parameters to complete this task, provide some guidance on the appropriate python extension or customization.";

/// (text, strict labels, extended labels) with labels abbreviated as
/// P=Persona R=Recipe T=Template O=Output Automator I=Simple Instruction
/// C=Context and Instruction Q=Question.
const GOLDEN: [(&str, &str, &str); 50] = [
    ("Act as a Linux terminal.", "P", "P"),
    ("You are an expert Rust reviewer.", "P", "P"),
    ("Pretend to be my tutor", "P", "P"),
    ("pretend you are a pirate", "P", "P"),
    ("Give me a step-by-step recipe for bread", "RI", "RI"),
    ("Write a guide to async Rust", "R", "RI"),
    ("Use this template for the changelog", "T", "T"),
    ("Fix the formatting of this file", "T", "T"),
    ("Please format the output as a table", "", "TO"),
    ("Respond in JSON only", "", "T"),
    ("Write a script to rename files", "O", "OI"),
    ("Show result of the code below", "O", "O"),
    ("Is this executable safe?", "O", "O"),
    ("Explain this stack trace", "I", "I"),
    ("Describe the architecture", "I", "I"),
    ("List the dependencies", "I", "I"),
    ("Tell me about lifetimes", "I", "I"),
    ("Help me debug this", "", "I"),
    ("Create a new module", "", "I"),
    ("Based on the logs, fix the bug", "C", "C"),
    ("With this information, update the docs", "C", "C"),
    ("I am using PostgreSQL 15", "", "C"),
    ("I would like a shorter version", "", "C"),
    ("What does this function return?", "Q", "Q"),
    ("Where is the config loaded?", "Q", "Q"),
    ("When should I use Arc?", "Q", "Q"),
    ("Who maintains this crate?", "Q", "Q"),
    ("Why does the build fail?", "Q", "Q"),
    ("How do I profile this?", "", "Q"),
    ("First run the tests, then deploy, finally tag", "", "R"),
    ("The whole world is watching", "", ""),
    ("Whatever works", "", ""),
    ("Listing files is slow", "", ""),
    ("the encoder codes frames", "", ""),
    ("Authentication tokens expire", "", ""),
    ("Read the guidelines", "", ""),
    ("Tables and outputs are cached", "", ""),
    ("ACT AS A SQL CONSOLE", "P", "P"),
    ("what? why!", "Q", "Q"),
    ("Explain, then write code", "OI", "ROI"),
    ("You are a bot. What is 2+2?", "PQ", "PQ"),
    ("Based on the template, list what changed", "TICQ", "TICQ"),
    ("Give me the output table", "I", "OI"),
    ("How and why", "Q", "Q"),
    ("I am using a recipe from the guide", "R", "RC"),
    ("create-react-app setup", "", "I"),
    ("Don't rewrite it", "", ""),
    ("unformatted text", "", ""),
    ("The script's exit code", "O", "O"),
    ("", "", ""),
];

fn abbreviated(codes: &str) -> BTreeSet<PatternName> {
    codes
        .chars()
        .map(|c| match c {
            'P' => PatternName::Persona,
            'R' => PatternName::Recipe,
            'T' => PatternName::Template,
            'O' => PatternName::OutputAutomator,
            'I' => PatternName::InstructionsBased,
            'C' => PatternName::ContextAndInstruction,
            'Q' => PatternName::Question,
            other => panic!("bad code {other}"),
        })
        .collect()
}

fn detection_golden() -> Outcome {
    let strict = default_rules(RuleMode::Table2Strict);
    let extended = default_rules(RuleMode::Extended);

    let d = detect(PERSONA_EXEMPLAR, &strict, MatchMode::WordBoundary);
    ensure(d.patterns.contains(&PatternName::Persona), || "exemplar missed Persona".into())?;

    let wb = detect("whole world", &strict, MatchMode::WordBoundary);
    let sub = detect("whole world", &strict, MatchMode::Substring);
    ensure(
        !wb.patterns.contains(&PatternName::Question) && sub.patterns.contains(&PatternName::Question),
        || "whole world: substring must find Question, word-boundary must not".into(),
    )?;

    for (i, (text, want_strict, want_ext)) in GOLDEN.iter().enumerate() {
        let s = detect(text, &strict, MatchMode::WordBoundary).patterns;
        let e = detect(text, &extended, MatchMode::WordBoundary).patterns;
        ensure(s == abbreviated(want_strict), || format!("case {i} {text:?}: strict {s:?}"))?;
        ensure(e == abbreviated(want_ext), || format!("case {i} {text:?}: extended {e:?}"))?;
        ensure(s.is_subset(&e), || format!("case {i} {text:?}: strict not a subset"))?;
    }
    Ok("exemplar, whole world, 50 golden cases".into())
}

// 5 ------------------------------------------------------------------------

/// Brute-force reimplementation of label, explode, score and group means.
mod oracle {
    use super::*;

    const PHRASES: [(&str, &[&str]); 7] = [
        ("Persona", &["you are", "act as", "pretend to be", "pretend you are"]),
        ("Recipe", &["step-by-step", "recipe", "guide"]),
        ("Template", &["template", "formatting"]),
        ("Output Automator", &["script", "code", "executable"]),
        ("Simple Instruction", &["explain", "describe", "list", "tell me", "give me"]),
        ("Context and Instruction", &["based on", "with this information"]),
        ("Question", &["what", "where", "when", "who", "why"]),
    ];

    const LEXICON: [(&str, f64); 20] = [
        ("excellent", 1.0), ("perfect", 1.0), ("great", 0.8), ("good", 0.7),
        ("helpful", 0.6), ("correct", 0.5), ("thanks", 0.4), ("works", 0.3),
        ("fix", 0.2), ("ok", 0.1), ("issue", -0.3), ("bug", -0.4),
        ("error", -0.4), ("wrong", -0.5), ("bad", -0.7), ("broken", -0.6),
        ("fail", -0.6), ("crash", -0.7), ("terrible", -0.9), ("awful", -0.9),
    ];

    fn contains_word(text: &[char], phrase: &str) -> bool {
        let p: Vec<char> = phrase.chars().collect();
        if p.len() > text.len() {
            return false;
        }
        (0..=text.len() - p.len()).any(|i| {
            text[i..i + p.len()] == p[..]
                && (i == 0 || !text[i - 1].is_alphanumeric())
                && (i + p.len() == text.len() || !text[i + p.len()].is_alphanumeric())
        })
    }

    fn sentiment(text: &str) -> f64 {
        let lex: BTreeMap<&str, f64> = LEXICON.into_iter().collect();
        let vals: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
            .filter_map(|t| lex.get(t.as_str()).copied())
            .collect();
        if vals.is_empty() {
            0.0
        } else {
            (vals.iter().sum::<f64>() / vals.len() as f64).clamp(-1.0, 1.0)
        }
    }

    /// Returns the expected `aggregates.csv` and the exploded row count.
    pub fn aggregates(records: &[ConversationRecord]) -> (String, usize) {
        // (name, sum eff, sum prompts, rows), in canonical pattern order
        let mut acc: Vec<(&str, f64, f64, usize)> =
            PHRASES.iter().map(|(n, _)| (*n, 0.0, 0.0, 0)).collect();
        let mut exploded = 0;
        for r in records.iter().filter(|r| r.state == State::Closed) {
            let text: Vec<char> = r
                .turns
                .iter()
                .map(|t| t.prompt_text.as_str())
                .collect::<Vec<_>>()
                .join("\n")
                .to_lowercase()
                .chars()
                .collect();
            for (slot, (_, phrases)) in acc.iter_mut().zip(PHRASES.iter()) {
                if !phrases.iter().any(|p| contains_word(&text, p)) {
                    continue;
                }
                exploded += 1;
                for t in &r.turns {
                    let words = t.answer_text.split_whitespace().count() as f64;
                    let ratio = r.tokens_of_answers as f64 / (r.tokens_of_prompts as f64 + 1.0);
                    let score = 0.5 * words + 0.3 * ratio + 0.2 * sentiment(&t.answer_text);
                    slot.1 += score;
                    slot.2 += r.number_of_prompts as f64;
                    slot.3 += 1;
                }
            }
        }
        let mut stats: Vec<(&str, f64, f64, f64, usize, f64)> = acc
            .into_iter()
            .filter(|a| a.3 > 0)
            .map(|(name, eff, prompts, n)| {
                let avg_eff = eff / n as f64;
                let avg_prompts = prompts / n as f64;
                (name, avg_eff, avg_prompts, avg_eff / avg_prompts, n, avg_eff / n as f64)
            })
            .collect();
        stats.sort_by(|a, b| b.3.partial_cmp(&a.3).unwrap());
        let mut csv = String::from(
            "pattern,avg_effectiveness_score,avg_number_of_prompts,score_ratio,frequency,normalized_score\n",
        );
        for (name, eff, prompts, ratio, n, norm) in stats {
            csv.push_str(&format!("{name},{eff:.6},{prompts:.6},{ratio:.6},{n},{norm:.6}\n"));
        }
        (csv, exploded)
    }
}

fn end_to_end_oracle() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut total_rows = 0;
    for seed in 1..=5u64 {
        let spec = SynthSpec { record_count: 200, seed, ..SynthSpec::default() };
        let (records, _) = generate_synthetic_corpus(&spec).map_err(|e| e.to_string())?;
        let bundle = analyze(&records, &AnalysisConfig::default()).map_err(|e| e.to_string())?;
        let dir = tmp.path().join(format!("seed{seed}"));
        write_bundle(&bundle, &dir).map_err(|e| e.to_string())?;
        let got = fs::read_to_string(dir.join("aggregates.csv")).map_err(|e| e.to_string())?;

        let (want, oracle_rows) = oracle::aggregates(&records);
        ensure(got == want, || format!("seed {seed}: aggregates.csv differs\n--- pipeline\n{got}--- oracle\n{want}"))?;

        let labels = bundle.labels.as_ref().ok_or("labels missing")?;
        let sum_patterns: usize = labels.iter().map(|l| l.patterns.len()).sum();
        ensure(explode(labels).len() == sum_patterns, || format!("seed {seed}: explode row count"))?;
        let closed: Vec<_> = labels.iter().filter(|l| l.state == State::Closed).cloned().collect();
        ensure(explode(&closed).len() == oracle_rows, || {
            format!("seed {seed}: {} exploded rows, oracle {oracle_rows}", explode(&closed).len())
        })?;
        total_rows += oracle_rows;
    }
    Ok(format!("seeds 1-5 identical to brute force; {total_rows} exploded closed rows"))
}

// 6 ------------------------------------------------------------------------

fn effectiveness_formula() -> Outcome {
    let w = Weights::default();
    let direct = w.combine(5.0, 2.0, 0.25);
    ensure((direct - 3.15).abs() <= 1e-12, || format!("combine gave {direct}"))?;
    // "great" (0.8) and "issue" (-0.3) average to 0.25; 6 / (2 + 1) = 2.0
    let turn = ConversationTurn::new("q", "great issue here and there");
    let b = effectiveness_turn(&turn, 6, 2, &w, &SentimentLexicon::builtin());
    ensure((b.score - 3.15).abs() <= 1e-12, || format!("turn gave {b:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..500 {
        let len = rng.gen_range(0.0..500.0);
        let ratio = rng.gen_range(0.0..50.0);
        let sent = rng.gen_range(-1.0..=1.0);
        let w = Weights::new(rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0))
            .unwrap();
        let base = w.combine(len, ratio, sent);
        let more_len = w.combine(len + rng.gen_range(0.0..100.0), ratio, sent);
        let more_ratio = w.combine(len, ratio + rng.gen_range(0.0..10.0), sent);
        ensure(more_len >= base && more_ratio >= base, || format!("monotonicity case {i}"))?;
    }
    for i in 0..500 {
        let len = rng.gen_range(0.0..500.0);
        let ratio = rng.gen_range(0.0..50.0);
        let sent = rng.gen_range(-1.0..=1.0);
        let c = rng.gen_range(0.0..10.0);
        let scaled = w.scaled(c).unwrap().combine(len, ratio, sent);
        let expect = c * w.combine(len, ratio, sent);
        ensure((scaled - expect).abs() <= 1e-9 * expect.abs().max(1.0), || {
            format!("homogeneity case {i}: {scaled} vs {expect}")
        })?;
    }
    Ok("3.15 reproduced; 500 monotonicity + 500 homogeneity cases".into())
}

// 7 ------------------------------------------------------------------------

fn write_synthetic_snapshot(dir: &Path, seed: u64, records: usize) -> std::path::PathBuf {
    let spec = SynthSpec { record_count: records, seed, ..SynthSpec::default() };
    let (recs, _) = generate_synthetic_corpus(&spec).unwrap();
    let path = dir.join("snapshot.json");
    fs::write(&path, emit_snapshot_json(&recs)).unwrap();
    path
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_promptminer"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
    })
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = write_synthetic_snapshot(tmp.path(), 7, 150);
    let input = input.to_str().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_cli(&["analyze", "--input", input, "--out", a.to_str().unwrap()])?;
    run_cli(&["analyze", "--input", input, "--out", b.to_str().unwrap()])?;
    let (ca, cb) = (dir_contents(&a), dir_contents(&b));
    ensure(ca.len() == 7, || format!("expected 7 files, got {:?}", ca.keys().collect::<Vec<_>>()))?;
    ensure(ca == cb, || "output directories differ".into())?;
    Ok(format!("{} files byte-identical", ca.len()))
}

// 8 ------------------------------------------------------------------------

fn dataset_gated() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    let mut supplied = 0;
    for (var, name) in [("PROMPTMINER_DEVGPT_PR", "pr"), ("PROMPTMINER_DEVGPT_ISSUES", "issues")] {
        let Ok(path) = std::env::var(var) else {
            notes.push(format!("{var} unset, dataset run skipped"));
            continue;
        };
        supplied += 1;
        let out = tmp.path().join(name);
        run_cli(&[
            "analyze", "--input", &path, "--out", out.to_str().unwrap(),
            "--match-mode", "substring", "--scope", "prompts+body", "--deviation-report",
        ])?;
        let report = fs::read_to_string(out.join("deviation.md")).map_err(|e| format!("{name}: {e}"))?;
        println!("{report}");
        notes.push(format!("{name}: deviation report written"));
    }

    // The same command path on synthetic data, so the report machinery is
    // exercised even without the dataset.
    let input = write_synthetic_snapshot(tmp.path(), 8, 120);
    let out = tmp.path().join("synthetic");
    run_cli(&[
        "analyze", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap(),
        "--match-mode", "substring", "--scope", "prompts+body", "--deviation-report",
    ])?;
    let report = fs::read_to_string(out.join("deviation.md")).map_err(|e| e.to_string())?;
    ensure(report.contains("| Output Automator | 78 |"), || "synthetic deviation report incomplete".into())?;
    notes.push("synthetic deviation report written".into());
    if supplied == 0 {
        notes.insert(0, "SKIP dataset comparison (non-blocking)".into());
    }
    Ok(notes.join("; "))
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        run(1, "score ratio reproduces published values", Some(s(1)), reference_score_ratios),
        run(2, "ANOVA oracle suite", Some(s(1)), anova_oracles),
        run(3, "special-function accuracy", Some(s(5)), special_functions),
        run(4, "detection golden tests", Some(s(1)), detection_golden),
        run(5, "end-to-end oracle equivalence", Some(s(10)), end_to_end_oracle),
        run(6, "effectiveness formula", Some(s(5)), effectiveness_formula),
        run(7, "analyze is deterministic", None, determinism),
        run(8, "dataset-gated comparison", None, dataset_gated),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
