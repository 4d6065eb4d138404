//! Monte-Carlo search over global distillation schedules.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::params::ChainParams;
use crate::protocol::{run_protocol, PolicyKind, ProtocolError, ScheduleVector};

/// Default seed for every randomized entry point.
pub const DEFAULT_SEED: u64 = 20_240_917;

pub fn default_fth_grid() -> Vec<f64> {
    vec![0.9, 0.95, 0.99]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default)]
pub struct SearchConfig {
    pub samples: usize,
    pub seed: u64,
    pub include_ld_candidates: bool,
    pub max_steps_per_level: Option<u32>,
    /// Thresholds for the F_th-rule candidates and baselines.
    pub fth_grid: Vec<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            samples: 500,
            seed: DEFAULT_SEED,
            include_ld_candidates: true,
            max_steps_per_level: None,
            fth_grid: default_fth_grid(),
        }
    }
}

/// Result of a local rule evaluated on the same chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct LdBaseline {
    pub policy: PolicyKind,
    pub skr: f64,
    pub schedule: ScheduleVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct SearchResult {
    pub best_schedule: ScheduleVector,
    pub best_skr: f64,
    /// Number of distinct schedules evaluated.
    pub evaluated: usize,
    /// Best SKR found at each total step count `Σ D_i`.
    pub histogram: BTreeMap<u32, f64>,
    /// Every evaluated schedule produced zero key.
    pub all_zero: bool,
    pub ld_baselines: Vec<LdBaseline>,
}

/// Draws a feasible schedule: the total number of steps is uniform over
/// `0..=budget` (clipped by the per-level cap), and the split of that total
/// across levels is uniform over compositions.
pub fn sample_schedule<R: Rng + ?Sized>(
    rng: &mut R,
    levels: usize,
    budget: u32,
    cap: Option<u32>,
) -> ScheduleVector {
    assert!(levels >= 1, "a schedule has at least one level");
    let max_total = match cap {
        Some(c) => budget.min(c.saturating_mul(levels as u32)),
        None => budget,
    };
    let total = rng.random_range(0..=max_total) as usize;
    loop {
        let steps = random_composition(rng, total, levels);
        if cap.is_none_or(|c| steps.iter().all(|&d| d <= c)) {
            return ScheduleVector::new(steps);
        }
    }
}

/// Uniform composition of `total` into `parts` non-negative integers via
/// stars and bars.
fn random_composition<R: Rng + ?Sized>(rng: &mut R, total: usize, parts: usize) -> Vec<u32> {
    if parts == 1 {
        return vec![total as u32];
    }
    let slots = total + parts - 1;
    let mut bars = index::sample(rng, slots, parts - 1).into_vec();
    bars.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0usize;
    for (i, &b) in bars.iter().enumerate() {
        // stars between the previous bar and this one
        let start = if i == 0 { 0 } else { prev + 1 };
        out.push((b - start) as u32);
        prev = b;
    }
    let start = if bars.is_empty() { 0 } else { prev + 1 };
    out.push((slots - start) as u32);
    out
}

/// Candidate ordering: higher SKR first, then fewer steps, then the
/// lexicographically smaller schedule.
fn better(a: &(ScheduleVector, f64), b: &(ScheduleVector, f64)) -> Ordering {
    b.1.total_cmp(&a.1)
        .then_with(|| a.0.total().cmp(&b.0.total()))
        .then_with(|| a.0.cmp(&b.0))
}

/// Runs every local rule on `params` and returns the executed schedules.
pub fn ld_baselines(params: &ChainParams, fth_grid: &[f64]) -> Result<Vec<LdBaseline>, ProtocolError> {
    let mut policies: Vec<PolicyKind> = fth_grid
        .iter()
        .map(|&threshold| PolicyKind::Fth { threshold })
        .collect();
    policies.push(PolicyKind::Skr);
    policies
        .into_iter()
        .map(|policy| {
            let run = run_protocol(params, &policy)?;
            Ok(LdBaseline {
                policy,
                skr: run.skr,
                schedule: run.schedule,
            })
        })
        .collect()
}

/// Samples schedules, evaluates each distinct one, and returns the best.
/// The all-zero schedule and (optionally) the schedules executed by the
/// local rules are always part of the candidate pool.
pub fn search_schedules(params: &ChainParams, config: &SearchConfig) -> Result<SearchResult, ProtocolError> {
    params.validate()?;
    let levels = params.levels() + 1;
    let budget = params.budget();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut candidates: BTreeSet<ScheduleVector> = BTreeSet::new();
    candidates.insert(ScheduleVector::zeros(levels));
    for _ in 0..config.samples {
        candidates.insert(sample_schedule(
            &mut rng,
            levels,
            budget,
            config.max_steps_per_level,
        ));
    }

    let ld = ld_baselines(params, &config.fth_grid)?;
    if config.include_ld_candidates {
        candidates.extend(ld.iter().map(|b| b.schedule.clone()));
    }

    let candidates: Vec<ScheduleVector> = candidates.into_iter().collect();
    let scored: Vec<(ScheduleVector, f64)> = candidates
        .into_par_iter()
        .map(|schedule| {
            let run = run_protocol(
                params,
                &PolicyKind::Manual {
                    schedule: schedule.clone(),
                },
            )?;
            Ok((schedule, run.skr))
        })
        .collect::<Result<_, ProtocolError>>()?;

    let mut histogram = BTreeMap::new();
    for (schedule, skr) in &scored {
        let slot = histogram.entry(schedule.total()).or_insert(*skr);
        if *skr > *slot {
            *slot = *skr;
        }
    }
    let all_zero = scored.iter().all(|(_, skr)| *skr == 0.0);
    let best = scored
        .iter()
        .min_by(|a, b| better(a, b))
        .cloned()
        .expect("the zero schedule is always a candidate");

    Ok(SearchResult {
        best_schedule: best.0,
        best_skr: best.1,
        evaluated: scored.len(),
        histogram,
        all_zero,
        ld_baselines: ld,
    })
}

/// Every feasible schedule for `levels` entries and the given budget.
pub fn enumerate_schedules(levels: usize, budget: u32) -> Vec<ScheduleVector> {
    fn rec(prefix: &mut Vec<u32>, levels: usize, remaining: u32, out: &mut Vec<ScheduleVector>) {
        if prefix.len() == levels {
            out.push(ScheduleVector::new(prefix.clone()));
            return;
        }
        for d in 0..=remaining {
            prefix.push(d);
            rec(prefix, levels, remaining - d, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(levels), levels, budget, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn zero_budget_gives_zero_schedule() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(sample_schedule(&mut rng, 4, 0, None), ScheduleVector::zeros(4));
        }
    }

    #[test]
    fn single_level_totals_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 30_000;
        let mut counts = HashMap::new();
        for _ in 0..n {
            *counts.entry(sample_schedule(&mut rng, 1, 2, None)).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 3);
        for c in counts.values() {
            let frac = *c as f64 / n as f64;
            assert!((frac - 1.0 / 3.0).abs() < 0.015, "{frac}");
        }
    }

    #[test]
    fn compositions_are_uniform_within_a_total() {
        // total 2 over 3 levels has 6 compositions, each with mass 1/6 of
        // the draws landing on total 2
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = HashMap::new();
        let mut hits = 0usize;
        for _ in 0..60_000 {
            let s = sample_schedule(&mut rng, 3, 2, None);
            if s.total() == 2 {
                hits += 1;
                *counts.entry(s).or_insert(0usize) += 1;
            }
        }
        assert_eq!(counts.len(), 6);
        for c in counts.values() {
            assert!((*c as f64 / hits as f64 - 1.0 / 6.0).abs() < 0.015);
        }
    }

    #[test]
    fn cap_is_honored() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2000 {
            let s = sample_schedule(&mut rng, 3, 9, Some(2));
            assert!(s.max_steps() <= 2 && s.total() <= 6);
        }
    }

    #[test]
    fn sampler_is_deterministic_per_seed() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| sample_schedule(&mut rng, 5, 9, None))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_schedules(2, 2).len(), 6);
        assert_eq!(enumerate_schedules(3, 2).len(), 10);
        assert!(enumerate_schedules(4, 3).iter().all(|s| s.total() <= 3));
    }

    #[test]
    fn noiseless_lossless_chain_prefers_no_distillation() {
        let params = ChainParams::new(8, 64, 1.0, 0.0, 0.0);
        let result = search_schedules(&params, &SearchConfig { samples: 100, ..Default::default() }).unwrap();
        assert_eq!(result.best_schedule, ScheduleVector::zeros(4));
    }

    #[test]
    fn tie_break_prefers_fewer_steps_then_lexicographic() {
        let a = (ScheduleVector::new(vec![1, 0]), 0.5);
        let b = (ScheduleVector::new(vec![0, 1]), 0.5);
        let c = (ScheduleVector::new(vec![0, 0]), 0.5);
        let d = (ScheduleVector::new(vec![2, 0]), 0.6);
        let mut v = vec![a.clone(), b.clone(), c.clone(), d.clone()];
        v.sort_by(better);
        assert_eq!(v, vec![d, c, b, a]);
    }
}
