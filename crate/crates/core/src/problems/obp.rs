use crate::domain::{Payload, ProblemInstance};
use serde::{Deserialize, Serialize};

use super::{Decider, Decision, DecisionQuery, EpisodeResult, CAPACITY_EPS};

/// Online bin packing rollout.
///
/// Items arrive in order. Only open bins that can hold the item are shown to
/// the decider; the item goes to the one with the highest priority (ties to
/// the lowest bin index). A new bin is opened when nothing fits.
pub fn eval_obp<D: Decider + ?Sized>(decider: &D, instance: &ProblemInstance) -> EpisodeResult {
    let Payload::Obp { capacity, items } = instance.payload() else {
        return EpisodeResult::failed("not an obp instance", 0);
    };
    let eps = CAPACITY_EPS * capacity;
    let mut remaining: Vec<f64> = Vec::new();
    let mut trace = Vec::with_capacity(items.len());
    let mut feasible_idx: Vec<usize> = Vec::new();
    let mut feasible_cap: Vec<f64> = Vec::new();
    let mut decisions = 0;

    for &item in items {
        feasible_idx.clear();
        feasible_cap.clear();
        for (b, &r) in remaining.iter().enumerate() {
            if r + eps >= item {
                feasible_idx.push(b);
                feasible_cap.push(r);
            }
        }
        let bin = if feasible_idx.is_empty() {
            remaining.push(*capacity);
            remaining.len() - 1
        } else {
            decisions += 1;
            let query = DecisionQuery::Obp {
                item,
                bins: &feasible_cap,
            };
            let priorities = match decider.decide(&query) {
                Ok(Decision::Priorities(p)) => p,
                Ok(Decision::Node(_)) => {
                    return EpisodeResult::failed("expected bin priorities, got a node", decisions)
                }
                Err(e) => return EpisodeResult::failed(format!("heuristic error: {e}"), decisions),
            };
            if priorities.len() != feasible_idx.len() {
                return EpisodeResult::failed(
                    format!(
                        "priority vector has length {}, expected {}",
                        priorities.len(),
                        feasible_idx.len()
                    ),
                    decisions,
                );
            }
            let mut best = 0;
            for (k, &p) in priorities.iter().enumerate() {
                if !p.is_finite() {
                    return EpisodeResult::failed(format!("non-finite priority {p}"), decisions);
                }
                if p > priorities[best] {
                    best = k;
                }
            }
            feasible_idx[best]
        };
        remaining[bin] -= item;
        trace.push(bin);
    }
    let raw = remaining.len() as f64;
    EpisodeResult {
        raw,
        gap: instance.gap(raw),
        decisions,
        violation: None,
        trace,
        detours: 0,
    }
}

fn ceil_div(total: f64, capacity: f64) -> f64 {
    // tolerate rounding in rescaled real-valued sizes
    (total / capacity - 1e-9).ceil().max(0.0)
}

/// Trivial bound `ceil(sum / C)`.
pub fn obp_lower_bound_l1(capacity: f64, items: &[f64]) -> f64 {
    ceil_div(items.iter().sum(), capacity).max(1.0)
}

/// `max(L1, L2)` where L2 is the Martello–Toth bound maximized over the
/// thresholds `{0} ∪ {distinct sizes <= C/2}`.
pub fn obp_lower_bound(capacity: f64, items: &[f64]) -> f64 {
    let l1 = obp_lower_bound_l1(capacity, items);
    let half = capacity / 2.0;
    let mut thresholds: Vec<f64> = items.iter().copied().filter(|&s| s <= half).collect();
    thresholds.push(0.0);
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let mut l2 = 0.0f64;
    for &alpha in &thresholds {
        let (mut j1, mut j2, mut j2_sum, mut j3_sum) = (0usize, 0usize, 0.0, 0.0);
        for &s in items {
            if s > capacity - alpha {
                j1 += 1;
            } else if s > half {
                j2 += 1;
                j2_sum += s;
            } else if s >= alpha {
                j3_sum += s;
            }
        }
        let spare = j2 as f64 * capacity - j2_sum;
        let extra = ceil_div((j3_sum - spare).max(0.0), capacity);
        l2 = l2.max((j1 + j2) as f64 + extra);
    }
    l1.max(l2)
}

/// Which lower bound serves as the OBP gap denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObpBound {
    /// `max(L1, L2)`.
    #[default]
    MartelloToth,
    /// `ceil(sum / C)` only.
    L1,
}

impl ObpBound {
    pub fn compute(self, capacity: f64, items: &[f64]) -> f64 {
        match self {
            ObpBound::MartelloToth => obp_lower_bound(capacity, items),
            ObpBound::L1 => obp_lower_bound_l1(capacity, items),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::InstanceMeta;
    use crate::problems::oracle::optimal_bins;
    use crate::problems::{verify_solution, Builtin, DecisionError};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn instance(capacity: f64, items: Vec<f64>) -> ProblemInstance {
        let lb = obp_lower_bound(capacity, &items);
        ProblemInstance::new("t", Payload::obp(capacity, items), lb, InstanceMeta::generated()).unwrap()
    }

    #[test]
    fn best_fit_hand_simulation() {
        // 6 -> bin0 (4 left); 5 -> bin1 (5 left); 4 -> bin0 (0 left); 3 -> bin1 (2 left)
        let inst = instance(10.0, vec![6.0, 5.0, 4.0, 3.0]);
        assert_eq!(inst.baseline(), 2.0);
        let res = eval_obp(&Builtin::BestFit, &inst);
        assert_eq!(res.raw, 2.0);
        assert_eq!(res.gap, 0.0);
        assert_eq!(res.trace, vec![0, 1, 0, 1]);
    }

    #[test]
    fn single_item_one_bin() {
        let inst = instance(10.0, vec![7.0]);
        for b in [Builtin::FirstFit, Builtin::BestFit] {
            let res = eval_obp(&b, &inst);
            assert_eq!(res.raw, 1.0);
            assert_eq!(res.decisions, 0);
        }
    }

    #[test]
    fn full_size_items_never_share() {
        let inst = instance(10.0, vec![10.0; 6]);
        assert_eq!(eval_obp(&Builtin::FirstFit, &inst).raw, 6.0);
        assert_eq!(eval_obp(&Builtin::BestFit, &inst).raw, 6.0);
    }

    struct Broken(Decision);
    impl Decider for Broken {
        fn decide(&self, _: &DecisionQuery<'_>) -> Result<Decision, DecisionError> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn bad_priorities_are_violations() {
        let inst = instance(10.0, vec![3.0, 3.0, 3.0]);
        let short = eval_obp(&Broken(Decision::Priorities(vec![])), &inst);
        assert!(short.violation.unwrap().contains("length"));
        let nan = eval_obp(&Broken(Decision::Priorities(vec![f64::NAN])), &inst);
        assert!(nan.violation.unwrap().contains("non-finite"));
        let node = eval_obp(&Broken(Decision::Node(0)), &inst);
        assert!(!node.is_valid());
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(obp_lower_bound(100.0, &[60.0, 60.0, 60.0]), 3.0);
        assert_eq!(obp_lower_bound(100.0, &[50.0, 50.0]), 1.0);
        // L2 beats L1: four items of 51 with two of 10
        assert_eq!(obp_lower_bound_l1(100.0, &[51.0, 51.0, 51.0, 51.0, 10.0, 10.0]), 3.0);
        assert_eq!(obp_lower_bound(100.0, &[51.0, 51.0, 51.0, 51.0, 10.0, 10.0]), 4.0);
    }

    #[test]
    fn lower_bound_below_exhaustive_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.random_range(1..=10);
            let items: Vec<f64> = (0..n).map(|_| rng.random_range(1..=100) as f64).collect();
            let opt = optimal_bins(100.0, &items);
            let lb = obp_lower_bound(100.0, &items);
            assert!(lb <= opt as f64, "{items:?}: lb {lb} > opt {opt}");
        }
    }

    /// Straight simulation of the classic rules, without priorities.
    fn direct_fit(capacity: f64, items: &[f64], best: bool) -> usize {
        let mut bins: Vec<f64> = Vec::new();
        for &item in items {
            let mut chosen: Option<usize> = None;
            for (b, &r) in bins.iter().enumerate() {
                if r >= item {
                    match chosen {
                        None => chosen = Some(b),
                        Some(c) if best && r < bins[c] => chosen = Some(b),
                        _ => {}
                    }
                    if !best {
                        break;
                    }
                }
            }
            match chosen {
                Some(b) => bins[b] -= item,
                None => bins.push(capacity - item),
            }
        }
        bins.len()
    }

    /// The classic preallocated-array convention: every item sees all bins
    /// including empty ones, and picks by priority among those that fit.
    fn preallocated_fit(capacity: f64, items: &[f64], best: bool) -> usize {
        let mut bins = vec![capacity; items.len()];
        for &item in items {
            let mut chosen = None;
            let mut best_p = f64::NEG_INFINITY;
            for (b, &r) in bins.iter().enumerate() {
                if r >= item {
                    let p = if best { -(r - item) } else { -(b as f64) };
                    if p > best_p {
                        best_p = p;
                        chosen = Some(b);
                    }
                }
            }
            bins[chosen.unwrap()] -= item;
        }
        bins.iter().filter(|&&r| r < capacity).count()
    }

    #[test]
    fn priority_rollout_matches_direct_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = rng.random_range(1..60);
            let items: Vec<f64> = (0..n).map(|_| rng.random_range(1..=100) as f64).collect();
            let inst = instance(100.0, items.clone());
            for (builtin, best) in [(Builtin::FirstFit, false), (Builtin::BestFit, true)] {
                let res = eval_obp(&builtin, &inst);
                assert_eq!(res.raw as usize, direct_fit(100.0, &items, best));
                assert_eq!(res.raw as usize, preallocated_fit(100.0, &items, best));
                assert_eq!(verify_solution(&inst, &res.trace).unwrap(), res.raw);
            }
        }
    }
}
