//! Per-pattern statistics, one-way ANOVA, Pearson correlation and the special
//! functions behind the ANOVA p-value.

mod aggregate;
mod anova;
mod correlation;
pub mod special;

use thiserror::Error;

pub use aggregate::{aggregate_patterns, score_ratio, threshold_frequencies, PatternAggregate};
pub use anova::{one_way_anova, AnovaResult};
pub use correlation::{correlation_matrix, pearson, CorrelationMatrix, NumericTable};
pub use special::{f_sf, ln_gamma, reg_inc_beta};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})")]
    ConvergenceFailure { x: f64, a: f64, b: f64 },
}
