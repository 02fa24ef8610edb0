//! Randomized property battery for the set objective and the greedy
//! selection, as run by `eohs verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::PerformanceMatrix;
use crate::metrics::{self, MetricsError};
use crate::selection::{self, SelectionError};

pub const TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatteryConfig {
    pub seed: u64,
    pub monotonicity_trials: usize,
    pub greedy_trials: usize,
    pub delta_trials: usize,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            seed: 0,
            monotonicity_trials: 1000,
            greedy_trials: 200,
            delta_trials: 1000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub monotonicity_trials: usize,
    /// Adding a heuristic raised the CPI.
    pub monotonicity_violations: usize,
    /// A larger set gained more from the same heuristic than a subset did.
    pub supermodularity_violations: usize,
    pub greedy_trials: usize,
    pub bound_violations: usize,
    /// Trials where greedy matched the exhaustive optimum.
    pub greedy_optimal: usize,
    pub delta_trials: usize,
    /// Largest `|delta - m * (cpi(H) - cpi(H + h))|` seen.
    pub delta_max_error: f64,
}

impl BatteryReport {
    pub fn passed(&self) -> bool {
        self.monotonicity_violations == 0
            && self.supermodularity_violations == 0
            && self.bound_violations == 0
            && self.delta_max_error <= TOLERANCE
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> PerformanceMatrix {
    let scores: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.random::<f64>()).collect())
        .collect();
    PerformanceMatrix::from_scores(&scores).expect("finite scores")
}

/// Random nested subsets `a ⊆ b` (a non-empty) and an element outside `b`.
fn nested(rng: &mut ChaCha8Rng, rows: usize) -> (Vec<usize>, Vec<usize>, usize) {
    let mut order: Vec<usize> = (0..rows).collect();
    for i in (1..rows).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let h = order[0];
    let b_len = rng.random_range(1..rows);
    let a_len = rng.random_range(1..=b_len);
    let b = order[1..=b_len].to_vec();
    (b[..a_len].to_vec(), b, h)
}

fn with(set: &[usize], h: usize) -> Vec<usize> {
    let mut s = set.to_vec();
    s.push(h);
    s
}

pub fn run_battery(config: &BatteryConfig) -> Result<BatteryReport, SelectionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut report = BatteryReport::default();
    let cpi = |m: &PerformanceMatrix, s: &[usize]| -> Result<f64, MetricsError> { Ok(metrics::cpi(m, s)?.cpi) };

    for _ in 0..config.monotonicity_trials {
        let rows = rng.random_range(2..=8);
        let cols = rng.random_range(1..=12);
        let m = random_matrix(&mut rng, rows, cols);
        let (a, b, h) = nested(&mut rng, rows);
        let (fa, fb) = (cpi(&m, &a)?, cpi(&m, &b)?);
        let (fah, fbh) = (cpi(&m, &with(&a, h))?, cpi(&m, &with(&b, h))?);
        if fb > fa + TOLERANCE || fah > fa + TOLERANCE || fbh > fb + TOLERANCE {
            report.monotonicity_violations += 1;
        }
        if (fa - fah) + TOLERANCE < fb - fbh {
            report.supermodularity_violations += 1;
        }
        report.monotonicity_trials += 1;
    }

    for _ in 0..config.greedy_trials {
        let m = random_matrix(&mut rng, 8, 10);
        let pool: Vec<usize> = (0..8).collect();
        let r = selection::verify_theorem3(&m, &pool, 4)?;
        if !r.bound_ok {
            report.bound_violations += 1;
        }
        if r.greedy_is_optimal() {
            report.greedy_optimal += 1;
        }
        report.greedy_trials += 1;
    }

    for _ in 0..config.delta_trials {
        let rows = rng.random_range(2..=8);
        let cols = rng.random_range(1..=12);
        let m = random_matrix(&mut rng, rows, cols);
        let (_, set, h) = nested(&mut rng, rows);
        let best = metrics::best_per_instance(&m, &set)?;
        let delta = metrics::delta_cpi(&m.rows()[h], &best)?;
        let diff = cols as f64 * (cpi(&m, &set)? - cpi(&m, &with(&set, h))?);
        report.delta_max_error = report.delta_max_error.max((delta - diff).abs());
        report.delta_trials += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_battery_passes() {
        let r = run_battery(&BatteryConfig {
            monotonicity_trials: 200,
            greedy_trials: 20,
            delta_trials: 200,
            ..BatteryConfig::default()
        })
        .unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.monotonicity_trials, 200);
        assert!(r.greedy_optimal <= 20);
    }

    #[test]
    fn nested_subsets_are_nested() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (a, b, h) = nested(&mut rng, 6);
            assert!(!a.is_empty() && a.iter().all(|x| b.contains(x)));
            assert!(!b.contains(&h));
        }
    }
}
