use serde::{Deserialize, Serialize};

use super::StatsError;

/// Sample Pearson correlation, or `None` when either input has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Option<f64>, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::Domain(format!(
            "pearson needs equal lengths, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(StatsError::Domain(format!(
            "pearson needs at least 2 points, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(r.is_finite().then(|| r.clamp(-1.0, 1.0)))
}

/// Named numeric columns of equal length; `None` marks a missing value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NumericTable {
    columns: Vec<(String, Vec<Option<f64>>)>,
}

impl NumericTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_column(
        mut self,
        name: impl Into<String>,
        values: Vec<Option<f64>>,
    ) -> Result<Self, StatsError> {
        let name = name.into();
        if let Some((_, first)) = self.columns.first() {
            if first.len() != values.len() {
                return Err(StatsError::Domain(format!(
                    "column {name:?} has {} rows, expected {}",
                    values.len(),
                    first.len()
                )));
            }
        }
        self.columns.push((name, values));
        Ok(self)
    }

    pub fn row_count(&self) -> usize {
        self.columns.first().map_or(0, |(_, v)| v.len())
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub r: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        self.r[i][j]
    }
}

/// Pairwise correlation of every column pair, dropping rows where either value
/// is missing or non-finite.
pub fn correlation_matrix(table: &NumericTable) -> CorrelationMatrix {
    let k = table.columns.len();
    let mut r = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let (xs, ys): (Vec<f64>, Vec<f64>) = table.columns[i]
                .1
                .iter()
                .zip(&table.columns[j].1)
                .filter_map(|(x, y)| match (x, y) {
                    (Some(x), Some(y)) if x.is_finite() && y.is_finite() => Some((*x, *y)),
                    _ => None,
                })
                .unzip();
            let value = if xs.len() < 2 {
                None
            } else {
                pearson(&xs, &ys).expect("lengths checked")
            };
            r[i][j] = value;
            r[j][i] = value;
        }
    }
    CorrelationMatrix {
        labels: table.labels().map(str::to_string).collect(),
        r,
    }
}
