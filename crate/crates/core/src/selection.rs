//! Complementary population management and parent selection.
//!
//! [`cpm_select`] is the greedy rule: seed with the best-average row, then
//! repeatedly add the row with the largest summed clipped improvement over
//! the current per-instance bests.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use thiserror::Error;

use crate::domain::PerformanceMatrix;
use crate::metrics::{self, MetricsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectionError {
    #[error("need {needed} valid candidates, only {available} available")]
    Shortfall { needed: usize, available: usize },
    #[error("set size must be at least {min}, got {got}")]
    SizeTooSmall { min: usize, got: usize },
    #[error("set size {k} exceeds pool of {pool}")]
    SizeExceedsPool { k: usize, pool: usize },
    #[error("pool of {0} rows is too large for exhaustive search (max {MAX_EXHAUSTIVE_POOL})")]
    PoolTooLarge(usize),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Largest pool for which [`verify_theorem3`] enumerates every subset.
pub const MAX_EXHAUSTIVE_POOL: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    /// Row indices in pick order.
    pub chosen: Vec<usize>,
    /// CPI of the chosen prefix after each pick.
    pub cpi_trace: Vec<f64>,
    pub first_pick_reason: &'static str,
}

/// Greedy delta-CPI selection of `n` rows from `candidates`.
///
/// Invalid rows are dropped first. Ties in delta go to the lowest row index;
/// once every remaining delta is zero the rest are taken by mean score.
pub fn cpm_select(
    matrix: &PerformanceMatrix,
    candidates: &[usize],
    n: usize,
) -> Result<SelectionOutcome, SelectionError> {
    if n == 0 {
        return Err(SelectionError::SizeTooSmall { min: 1, got: 0 });
    }
    let mut pool: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&r| matrix.row(r).is_some_and(|v| v.is_valid()))
        .collect();
    pool.sort_unstable();
    pool.dedup();
    if pool.len() < n {
        return Err(SelectionError::Shortfall {
            needed: n,
            available: pool.len(),
        });
    }
    let by_mean = metrics::rank_by_average(matrix, &pool)?;
    let first = by_mean[0];
    let mut chosen = vec![first];
    let mut best = matrix.rows()[first].scores().to_vec();
    let mut cpi_trace = vec![metrics::mean(&best)];
    let mut remaining: Vec<usize> = pool.into_iter().filter(|&r| r != first).collect();

    while chosen.len() < n {
        let mut pick: Option<(usize, f64)> = None;
        for (pos, &r) in remaining.iter().enumerate() {
            let delta = metrics::delta_cpi(&matrix.rows()[r], &best)?;
            // `remaining` is sorted, so strict `>` keeps the lowest index on ties
            if pick.is_none_or(|(_, d)| delta > d) {
                pick = Some((pos, delta));
            }
        }
        let (pos, delta) = pick.expect("remaining is non-empty while below target");
        let pos = if delta > 0.0 {
            pos
        } else {
            // nothing improves any instance: fall back to mean order
            let next = by_mean
                .iter()
                .find(|r| remaining.contains(r))
                .expect("remaining rows come from the ranked pool");
            remaining.iter().position(|r| r == next).unwrap()
        };
        let r = remaining.remove(pos);
        for (b, &s) in best.iter_mut().zip(matrix.rows()[r].scores()) {
            *b = b.min(s);
        }
        chosen.push(r);
        cpi_trace.push(metrics::mean(&best));
    }
    Ok(SelectionOutcome {
        chosen,
        cpi_trace,
        first_pick_reason: "best-average",
    })
}

/// Greedy-versus-optimum comparison for one pool.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem3Report {
    /// CPI of the best single heuristic.
    pub f_h1: f64,
    /// CPI of the greedy selection of size k.
    pub f_ga: f64,
    /// CPI of the best size-k subset, by enumeration.
    pub f_opt: f64,
    /// Guarantee coefficient `1 - k / (e k - e)`.
    pub coefficient: f64,
    pub bound_ok: bool,
}

impl Theorem3Report {
    pub fn greedy_is_optimal(&self) -> bool {
        (self.f_ga - self.f_opt).abs() <= 1e-12
    }
}

/// Approximation coefficient of the greedy selection for set size `k >= 2`.
pub fn greedy_coefficient(k: usize) -> f64 {
    let k = k as f64;
    let e = std::f64::consts::E;
    1.0 - k / (e * k - e)
}

/// Smallest CPI over all `k`-subsets of `pool`.
pub fn exhaustive_optimum(matrix: &PerformanceMatrix, pool: &[usize], k: usize) -> Result<f64, SelectionError> {
    if pool.len() > MAX_EXHAUSTIVE_POOL {
        return Err(SelectionError::PoolTooLarge(pool.len()));
    }
    if k == 0 || k > pool.len() {
        return Err(SelectionError::SizeExceedsPool { k, pool: pool.len() });
    }
    let m = matrix.width();
    let rows = pool
        .iter()
        .map(|&r| {
            let v = matrix.row(r).ok_or(MetricsError::OutOfRange(r))?;
            if v.is_valid() {
                Ok(v.scores())
            } else {
                Err(MetricsError::InvalidRow(r))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    // lexicographic k-combinations of positions 0..pool.len()
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best = f64::INFINITY;
    let mut column = vec![0.0; m];
    loop {
        column.copy_from_slice(rows[idx[0]]);
        for &i in &idx[1..] {
            for (c, &s) in column.iter_mut().zip(rows[i]) {
                *c = c.min(s);
            }
        }
        best = best.min(metrics::mean(&column));

        let mut i = k;
        while i > 0 && idx[i - 1] == pool.len() - k + (i - 1) {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    Ok(best)
}

/// Checks the greedy guarantee for one pool against the exhaustive optimum.
pub fn verify_theorem3(
    matrix: &PerformanceMatrix,
    pool: &[usize],
    k: usize,
) -> Result<Theorem3Report, SelectionError> {
    if k <= 1 {
        return Err(SelectionError::SizeTooSmall { min: 2, got: k });
    }
    if k > pool.len() {
        return Err(SelectionError::SizeExceedsPool { k, pool: pool.len() });
    }
    if pool.len() > MAX_EXHAUSTIVE_POOL {
        return Err(SelectionError::PoolTooLarge(pool.len()));
    }
    let first = metrics::rank_by_average(matrix, pool)?[0];
    let f_h1 = metrics::cpi(matrix, &[first])?.cpi;
    let greedy = cpm_select(matrix, pool, k)?;
    let f_ga = *greedy.cpi_trace.last().unwrap();
    let f_opt = exhaustive_optimum(matrix, pool, k)?;
    let coefficient = greedy_coefficient(k);
    let bound_ok = f_h1 - f_ga >= coefficient * (f_h1 - f_opt) - 1e-9;
    Ok(Theorem3Report {
        f_h1,
        f_ga,
        f_opt,
        coefficient,
        bound_ok,
    })
}

/// The valid pair with the largest Manhattan distance, smaller index first.
pub fn select_cs_parents(matrix: &PerformanceMatrix, rows: &[usize]) -> Result<(usize, usize), SelectionError> {
    let mut valid: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&r| matrix.row(r).is_some_and(|v| v.is_valid()))
        .collect();
    valid.sort_unstable();
    valid.dedup();
    if valid.len() < 2 {
        return Err(SelectionError::Shortfall {
            needed: 2,
            available: valid.len(),
        });
    }
    let mut best: Option<((usize, usize), f64)> = None;
    for (i, &a) in valid.iter().enumerate() {
        for &b in &valid[i + 1..] {
            let d = metrics::manhattan_distance(&matrix.rows()[a], &matrix.rows()[b])?;
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some(((a, b), d));
            }
        }
    }
    Ok(best.unwrap().0)
}

/// Selection probabilities for the local-search parent, aligned with
/// [`metrics::rank_by_average`] order.
///
/// Weight of rank `r` (1 = best) is `1 / (r + offset)`, where the offset
/// defaults to the number of ranked rows.
pub fn ls_weights(ranked: usize, offset: Option<usize>) -> Vec<f64> {
    let offset = offset.unwrap_or(ranked) as f64;
    let raw: Vec<f64> = (1..=ranked).map(|r| 1.0 / (r as f64 + offset)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Rank-weighted random choice of one parent.
pub fn select_ls_parent<R: Rng + ?Sized>(
    matrix: &PerformanceMatrix,
    rows: &[usize],
    rng: &mut R,
) -> Result<usize, SelectionError> {
    select_ls_parent_with(matrix, rows, None, rng)
}

pub fn select_ls_parent_with<R: Rng + ?Sized>(
    matrix: &PerformanceMatrix,
    rows: &[usize],
    offset: Option<usize>,
    rng: &mut R,
) -> Result<usize, SelectionError> {
    let valid: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&r| matrix.row(r).is_some_and(|v| v.is_valid()))
        .collect();
    if valid.is_empty() {
        return Err(SelectionError::Shortfall {
            needed: 1,
            available: 0,
        });
    }
    let ranked = metrics::rank_by_average(matrix, &valid)?;
    let weights = ls_weights(ranked.len(), offset);
    let dist = WeightedIndex::new(&weights).expect("weights are positive and finite");
    Ok(ranked[dist.sample(rng)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{HeuristicId, PerformanceVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn matrix(rows: &[Vec<f64>]) -> PerformanceMatrix {
        PerformanceMatrix::from_scores(rows).unwrap()
    }

    #[test]
    fn cpm_hand_run() {
        let m = matrix(&[vec![0.5, 0.1], vec![0.1, 0.5], vec![0.3, 0.3]]);
        let out = cpm_select(&m, &[0, 1, 2], 2).unwrap();
        assert_eq!(out.chosen, vec![0, 1]);
        assert!((out.cpi_trace[0] - 0.3).abs() < 1e-12);
        assert!((out.cpi_trace[1] - 0.1).abs() < 1e-12);
        assert_eq!(out.first_pick_reason, "best-average");
    }

    #[test]
    fn cpm_full_and_single() {
        let m = matrix(&[vec![0.5, 0.1, 0.9], vec![0.1, 0.5, 0.2], vec![0.3, 0.3, 0.3]]);
        let all = cpm_select(&m, &[0, 1, 2], 3).unwrap();
        let mut sorted = all.chosen.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2]);
        let full = metrics::cpi(&m, &[0, 1, 2]).unwrap().cpi;
        assert!((all.cpi_trace[2] - full).abs() < 1e-12);
        let one = cpm_select(&m, &[0, 1, 2], 1).unwrap();
        assert_eq!(one.chosen, vec![1]);
    }

    #[test]
    fn cpm_skips_invalid_and_reports_shortfall() {
        let mut m = matrix(&[vec![0.5, 0.1], vec![0.1, 0.5]]);
        m.push(HeuristicId(7), PerformanceVector::invalid(2)).unwrap();
        let out = cpm_select(&m, &[0, 1, 2], 2).unwrap();
        assert!(!out.chosen.contains(&2));
        assert_eq!(
            cpm_select(&m, &[0, 1, 2], 3),
            Err(SelectionError::Shortfall {
                needed: 3,
                available: 2
            })
        );
    }

    #[test]
    fn cpm_zero_delta_falls_back_to_mean_order() {
        // row 0 dominates; rows 2 and 1 add nothing, row 2 has the lower mean
        let m = matrix(&[vec![0.1, 0.1], vec![0.9, 0.9], vec![0.5, 0.5]]);
        let out = cpm_select(&m, &[0, 1, 2], 3).unwrap();
        assert_eq!(out.chosen, vec![0, 2, 1]);
    }

    #[test]
    fn theorem3_trivial_cases() {
        let m = matrix(&[vec![0.5, 0.1, 0.2], vec![0.1, 0.5, 0.4], vec![0.3, 0.3, 0.0]]);
        let r = verify_theorem3(&m, &[0, 1, 2], 3).unwrap();
        assert!(r.greedy_is_optimal() && r.bound_ok);

        let dom = matrix(&[vec![0.4, 0.5], vec![0.1, 0.2], vec![0.3, 0.9], vec![0.2, 0.3]]);
        let r = verify_theorem3(&dom, &[0, 1, 2, 3], 2).unwrap();
        assert!((r.f_ga - 0.15).abs() < 1e-12);
        assert!((r.f_opt - 0.15).abs() < 1e-12);
        assert!(r.bound_ok);
    }

    #[test]
    fn theorem3_rejects_bad_sizes() {
        let m = matrix(&[vec![0.5], vec![0.1]]);
        assert_eq!(
            verify_theorem3(&m, &[0, 1], 1),
            Err(SelectionError::SizeTooSmall { min: 2, got: 1 })
        );
        let big = matrix(&vec![vec![0.5]; 21]);
        let pool: Vec<usize> = (0..21).collect();
        assert_eq!(verify_theorem3(&big, &pool, 2), Err(SelectionError::PoolTooLarge(21)));
    }

    #[test]
    fn coefficient_values() {
        let e = std::f64::consts::E;
        assert!((greedy_coefficient(2) - (1.0 - 2.0 / e)).abs() < 1e-15);
        assert!((greedy_coefficient(4) - (1.0 - 4.0 / (3.0 * e))).abs() < 1e-15);
    }

    #[test]
    fn cs_parents_examples() {
        let m = matrix(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![3.0, 3.0]]);
        assert_eq!(select_cs_parents(&m, &[0, 1, 2]).unwrap(), (0, 2));
        let twins = matrix(&[vec![0.2, 0.2], vec![0.2, 0.2], vec![0.9, 0.0]]);
        let (a, b) = select_cs_parents(&twins, &[2, 1, 0]).unwrap();
        assert!(a == 2 || b == 2);
        assert_eq!((a, b), (0, 2));
        assert_eq!(select_cs_parents(&m, &[1, 0]).unwrap(), (0, 1));
        assert!(select_cs_parents(&m, &[1]).is_err());
    }

    #[test]
    fn ls_weights_two_rows() {
        let w = ls_weights(2, None);
        assert!((w[0] - 4.0 / 7.0).abs() < 1e-15);
        assert!((w[1] - 3.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn ls_single_row_always_chosen() {
        let m = matrix(&[vec![0.4], vec![0.2]]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            assert_eq!(select_ls_parent(&m, &[1], &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn ls_empirical_frequencies() {
        // means 0.3, 0.1, 0.2 -> ranks 3, 1, 2
        let m = matrix(&[vec![0.3], vec![0.1], vec![0.2]]);
        let exact_by_rank = [1.0 / 4.0, 1.0 / 5.0, 1.0 / 6.0];
        let total: f64 = exact_by_rank.iter().sum();
        let exact = [
            exact_by_rank[2] / total,
            exact_by_rank[0] / total,
            exact_by_rank[1] / total,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = [0usize; 3];
        let draws = 100_000;
        for _ in 0..draws {
            counts[select_ls_parent(&m, &[0, 1, 2], &mut rng).unwrap()] += 1;
        }
        for r in 0..3 {
            let freq = counts[r] as f64 / draws as f64;
            assert!((freq - exact[r]).abs() < 0.01, "row {r}: {freq} vs {}", exact[r]);
        }
    }

    #[test]
    fn ls_is_seed_deterministic() {
        let m = matrix(&[vec![0.3], vec![0.1], vec![0.2]]);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| select_ls_parent(&m, &[0, 1, 2], &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
    }
}
