//! CSV ingestion with missing-value filtering.
//!
//! The response column is named on the command line; every other column is
//! one hypothesis. Columns whose missing fraction exceeds the threshold
//! are dropped up front (and reported), which prevents discoveries driven
//! by the missing-value pattern. Remaining missing entries are handled
//! pairwise: a row is excluded only from the statistics of the columns it
//! is missing in.

use std::path::Path;
use std::sync::Arc;

use amt::sampling::{Column, PermutationArm, StatisticKind};
use anyhow::{bail, Context, Result};

#[derive(Debug, Clone)]
pub struct RawColumn {
    pub name: String,
    pub values: Vec<Option<String>>,
}

/// A parsed dataset: the response plus the retained hypothesis columns.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub response_name: String,
    pub response: Vec<Option<String>>,
    pub columns: Vec<RawColumn>,
    pub dropped_columns: Vec<String>,
    /// Rows remaining after removing those with a missing response.
    pub n_rows: usize,
}

/// Load a CSV file with a header row.
///
/// `missing_marker` cells (exact string match) are treated as missing.
/// Rows with a missing response are removed entirely; input columns with a
/// missing fraction above `missing_threshold` are dropped.
pub fn load_dataset(
    path: &Path,
    response_column: &str,
    missing_threshold: f64,
    missing_marker: &str,
) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&missing_threshold) {
        bail!("missing threshold must lie in [0, 1], got {missing_threshold}");
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .with_context(|| format!("cannot open dataset {}", path.display()))?;
    let headers: Vec<String> = reader
        .headers()
        .context("dataset has no header row")?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let response_idx = headers
        .iter()
        .position(|h| h == response_column)
        .with_context(|| format!("response column '{response_column}' not found in header"))?;

    let mut rows: Vec<Vec<Option<String>>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("malformed CSV record on data row {}", line + 1))?;
        let row: Vec<Option<String>> = record
            .iter()
            .map(|cell| {
                let cell = cell.trim();
                if cell == missing_marker {
                    None
                } else {
                    Some(cell.to_string())
                }
            })
            .collect();
        if row[response_idx].is_some() {
            rows.push(row);
        }
    }
    let n_rows = rows.len();
    if n_rows < 2 {
        bail!("dataset has {n_rows} usable rows; need at least 2");
    }

    let response: Vec<Option<String>> = rows.iter().map(|r| r[response_idx].clone()).collect();
    let mut columns = Vec::new();
    let mut dropped_columns = Vec::new();
    for (idx, name) in headers.iter().enumerate() {
        if idx == response_idx {
            continue;
        }
        let values: Vec<Option<String>> = rows.iter().map(|r| r[idx].clone()).collect();
        let missing = values.iter().filter(|v| v.is_none()).count();
        if missing as f64 / n_rows as f64 > missing_threshold {
            dropped_columns.push(name.clone());
        } else {
            columns.push(RawColumn { name: name.clone(), values });
        }
    }
    if columns.is_empty() {
        bail!(
            "no hypothesis columns left after filtering ({} dropped at threshold {})",
            dropped_columns.len(),
            missing_threshold
        );
    }
    Ok(Dataset {
        response_name: response_column.to_string(),
        response,
        columns,
        dropped_columns,
        n_rows,
    })
}

fn parse_all_real(values: &[&str]) -> Option<Vec<f64>> {
    values
        .iter()
        .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
        .collect()
}

// Real when every value parses; binary labels map to {0, 1} in sorted
// label order; anything else has no real encoding.
fn as_real_column(values: &[&str]) -> Option<Vec<f64>> {
    if let Some(parsed) = parse_all_real(values) {
        return Some(parsed);
    }
    let mut levels: Vec<&str> = values.to_vec();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() == 2 {
        return Some(values.iter().map(|v| if *v == levels[0] { 0.0 } else { 1.0 }).collect());
    }
    None
}

/// One hypothesis arm built from the dataset, after pairwise-complete
/// filtering against the response.
pub struct BuiltArm {
    pub name: String,
    pub arm: PermutationArm,
}

/// Build permutation arms for every retained column.
///
/// With `forced` unset, a column gets Pearson correlation when both it and
/// the response are real-valued (binary labels count, encoded as 0/1) and
/// the chi-squared statistic otherwise.
pub fn build_arms(dataset: &Dataset, forced: Option<StatisticKind>) -> Result<Vec<BuiltArm>> {
    let mut arms = Vec::new();
    for column in &dataset.columns {
        // Pairwise-complete cases for this column.
        let pairs: Vec<(&str, &str)> = column
            .values
            .iter()
            .zip(&dataset.response)
            .filter_map(|(x, y)| match (x, y) {
                (Some(x), Some(y)) => Some((x.as_str(), y.as_str())),
                _ => None,
            })
            .collect();
        if pairs.len() < 2 {
            bail!(
                "column '{}' has {} complete rows against the response; need at least 2",
                column.name,
                pairs.len()
            );
        }
        let xs: Vec<&str> = pairs.iter().map(|&(x, _)| x).collect();
        let ys: Vec<&str> = pairs.iter().map(|&(_, y)| y).collect();

        let x_real = as_real_column(&xs);
        let y_real = as_real_column(&ys);
        let kind = match forced {
            Some(kind) => kind,
            None if x_real.is_some() && y_real.is_some() => StatisticKind::PearsonCorrelation,
            None => StatisticKind::ChiSquared,
        };
        let arm = match kind {
            StatisticKind::PearsonCorrelation => {
                let x = x_real.clone().with_context(|| {
                    format!("column '{}' is not real-valued; cannot use Pearson correlation", column.name)
                })?;
                let y = y_real.clone().with_context(|| {
                    format!(
                        "response '{}' is neither real-valued nor binary; cannot use Pearson correlation",
                        dataset.response_name
                    )
                })?;
                PermutationArm::new(
                    Arc::new(Column::Real(x)),
                    Arc::new(Column::Real(y)),
                    StatisticKind::PearsonCorrelation,
                )?
            }
            StatisticKind::ChiSquared => PermutationArm::new(
                Arc::new(Column::from_labels(&xs)),
                Arc::new(Column::from_labels(&ys)),
                StatisticKind::ChiSquared,
            )?,
        };
        arms.push(BuiltArm { name: column.name.clone(), arm });
    }
    Ok(arms)
}
