//! Prompt-pattern mining over developer/LLM conversation snapshots.
//!
//! The crate is organised as a pipeline:
//!
//! - [`corpus`]: snapshot ingestion, record CSV, synthetic corpora
//! - [`patterns`]: keyword rule sets, detection, labeling, explode
//! - [`metrics`]: effectiveness score and its components
//! - [`stats`]: per-pattern aggregates, ANOVA, correlation, special functions
//! - [`pipeline`]: the end-to-end `analyze` run producing an [`report::AnalysisBundle`]
//! - [`report`]: CSV / Markdown rendering and bundle output
//! - [`reference`]: published reference figures and side-by-side deviation reports

pub mod corpus;
pub mod metrics;
pub mod patterns;
pub mod pipeline;
pub mod reference;
pub mod report;
pub mod stats;

pub use corpus::{ConversationRecord, ConversationTurn, SourceKind, State};
pub use metrics::{EffectivenessBreakdown, Granularity, SentimentLexicon, Weights};
pub use patterns::{MatchMode, PatternName, RuleMode, RuleSet, Scope};
pub use pipeline::{analyze, AnalysisConfig, StateFilter};
pub use report::AnalysisBundle;
