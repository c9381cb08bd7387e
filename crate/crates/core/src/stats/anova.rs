use serde::{Deserialize, Serialize};

use super::special::f_sf;
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f_stat: f64,
    pub df_between: u64,
    pub df_within: u64,
    pub p_value: f64,
    pub group_count: usize,
    pub ss_between: f64,
    pub ss_within: f64,
}

/// Unbalanced one-way ANOVA over labelled groups of observations.
///
/// Single-observation groups are allowed. When the within-group sum of squares
/// is zero, F is `+inf` (p = 0) if the group means differ and 0 (p = 1) if all
/// observations are equal.
pub fn one_way_anova<L, V>(groups: &[(L, V)]) -> Result<AnovaResult, StatsError>
where
    L: AsRef<str>,
    V: AsRef<[f64]>,
{
    if groups.len() < 2 {
        return Err(StatsError::Domain(format!(
            "ANOVA needs at least 2 groups, got {}",
            groups.len()
        )));
    }
    let mut total_n = 0usize;
    let mut total_sum = 0.0;
    let mut means = Vec::with_capacity(groups.len());
    for (label, values) in groups {
        let values = values.as_ref();
        if values.is_empty() {
            return Err(StatsError::Domain(format!("group {:?} is empty", label.as_ref())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::Domain(format!(
                "group {:?} contains a non-finite observation",
                label.as_ref()
            )));
        }
        let sum: f64 = values.iter().sum();
        total_sum += sum;
        total_n += values.len();
        means.push(sum / values.len() as f64);
    }
    let k = groups.len();
    if total_n <= k {
        return Err(StatsError::Domain(format!(
            "ANOVA needs more observations ({total_n}) than groups ({k})"
        )));
    }
    let grand_mean = total_sum / total_n as f64;

    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for ((_, values), &mean) in groups.iter().zip(&means) {
        let values = values.as_ref();
        ss_between += values.len() as f64 * (mean - grand_mean).powi(2);
        ss_within += values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    }

    let df_between = (k - 1) as u64;
    let df_within = (total_n - k) as u64;
    let (f_stat, p_value) = if ss_within == 0.0 {
        if ss_between > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            (0.0, 1.0)
        }
    } else {
        let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
        (f, f_sf(f, df_between, df_within)?)
    };
    Ok(AnovaResult {
        f_stat,
        df_between,
        df_within,
        p_value,
        group_count: k,
        ss_between,
        ss_within,
    })
}
