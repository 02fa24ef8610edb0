//! Set-level quality measures over a performance matrix.
//!
//! The complementary performance index (CPI) of a subset `H` of rows is the
//! mean over instances of the best score any member of `H` achieves on that
//! instance. Lower is better throughout.

use thiserror::Error;

use crate::domain::{HeuristicId, PerformanceMatrix, PerformanceVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("subset is empty")]
    EmptySubset,
    #[error("row {0} is out of range")]
    OutOfRange(usize),
    #[error("row {0} has an invalid performance vector")]
    InvalidRow(usize),
    #[error("performance vector is invalid")]
    InvalidVector,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// CPI of a subset together with the per-instance winners.
#[derive(Debug, Clone, PartialEq)]
pub struct CpiReport {
    pub cpi: f64,
    pub best_per_instance: Vec<f64>,
    /// Winning heuristic per instance; ties go to the lowest row index.
    pub contributor: Vec<HeuristicId>,
}

fn checked_row(matrix: &PerformanceMatrix, row: usize) -> Result<&PerformanceVector, MetricsError> {
    let v = matrix.row(row).ok_or(MetricsError::OutOfRange(row))?;
    if !v.is_valid() {
        return Err(MetricsError::InvalidRow(row));
    }
    Ok(v)
}

/// Elementwise minimum over the selected rows, plus the winning row per
/// column.
fn column_minima(
    matrix: &PerformanceMatrix,
    subset: &[usize],
) -> Result<(Vec<f64>, Vec<usize>), MetricsError> {
    if subset.is_empty() {
        return Err(MetricsError::EmptySubset);
    }
    let mut best = vec![f64::INFINITY; matrix.width()];
    let mut owner = vec![usize::MAX; matrix.width()];
    for &r in subset {
        let scores = checked_row(matrix, r)?.scores();
        for (j, &s) in scores.iter().enumerate() {
            if s < best[j] || (s == best[j] && r < owner[j]) {
                best[j] = s;
                owner[j] = r;
            }
        }
    }
    Ok((best, owner))
}

/// Per-instance best score `min_{h in subset} f_i(h)`.
pub fn best_per_instance(matrix: &PerformanceMatrix, subset: &[usize]) -> Result<Vec<f64>, MetricsError> {
    column_minima(matrix, subset).map(|(best, _)| best)
}

pub fn cpi(matrix: &PerformanceMatrix, subset: &[usize]) -> Result<CpiReport, MetricsError> {
    let (best, owner) = column_minima(matrix, subset)?;
    let contributor = owner.iter().map(|&r| matrix.heuristic_ids()[r]).collect();
    Ok(CpiReport {
        cpi: mean(&best),
        best_per_instance: best,
        contributor,
    })
}

/// Arithmetic mean; zero for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Summed clipped improvement of `candidate` over the reference bests.
///
/// This is a plain sum over instances; multiplying a CPI difference by `m`
/// gives the same quantity.
pub fn delta_cpi(candidate: &PerformanceVector, reference_best: &[f64]) -> Result<f64, MetricsError> {
    if !candidate.is_valid() {
        return Err(MetricsError::InvalidVector);
    }
    if candidate.len() != reference_best.len() {
        return Err(MetricsError::LengthMismatch(candidate.len(), reference_best.len()));
    }
    Ok(candidate
        .scores()
        .iter()
        .zip(reference_best)
        .map(|(&c, &r)| (r - c).max(0.0))
        .sum())
}

pub fn manhattan_distance(a: &PerformanceVector, b: &PerformanceVector) -> Result<f64, MetricsError> {
    if !a.is_valid() || !b.is_valid() {
        return Err(MetricsError::InvalidVector);
    }
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.scores()
        .iter()
        .zip(b.scores())
        .map(|(x, y)| (x - y).abs())
        .sum())
}

/// Rows sorted by ascending mean score, ties by row index.
pub fn rank_by_average(matrix: &PerformanceMatrix, subset: &[usize]) -> Result<Vec<usize>, MetricsError> {
    if subset.is_empty() {
        return Err(MetricsError::EmptySubset);
    }
    let mut keyed = subset
        .iter()
        .map(|&r| checked_row(matrix, r).map(|v| (v.mean(), r)))
        .collect::<Result<Vec<_>, _>>()?;
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}
