//! The multiplexed two-way protocol: level-by-level distillation, swapping
//! and memory decoherence over an equidistant chain.

use std::fmt;
use std::str::FromStr;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linkstats::LinkCountDistribution;
use crate::params::{ChainParams, ParamsError};
use crate::policy;
use crate::states::{dejmps_step, swap_states, BellDiagonalState, StateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamsError),
    #[error("schedule uses {total} distillation steps but the budget is log2(M) = {budget}")]
    BudgetExceeded { total: u32, budget: u32 },
    #[error("schedule has {got} entries but the chain needs log2(N) + 1 = {expected}")]
    ScheduleLength { expected: usize, got: usize },
    #[error("F_th threshold must be in (1/2, 1], got {0}")]
    InvalidThreshold(f64),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Per-level distillation step counts. Entry `i < log2 N` is applied before
/// the level-`i` swap; the last entry distills the end-to-end pairs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(transparent)]
pub struct ScheduleVector(Vec<u32>);

impl ScheduleVector {
    pub fn new(steps: Vec<u32>) -> Self {
        Self(steps)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn steps(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn max_steps(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Checks the length and the `Σ D_i <= log2 M` budget for `params`.
    pub fn check(&self, params: &ChainParams) -> Result<(), ProtocolError> {
        let expected = params.levels() + 1;
        if self.0.len() != expected {
            return Err(ProtocolError::ScheduleLength {
                expected,
                got: self.0.len(),
            });
        }
        let budget = params.budget();
        let total = self.total();
        if total > budget {
            return Err(ProtocolError::BudgetExceeded { total, budget });
        }
        Ok(())
    }
}

impl fmt::Display for ScheduleVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for ScheduleVector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|e| format!("bad schedule entry {p:?}: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

/// How the number of distillation steps is chosen at each level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    /// Distill once whenever the fidelity is below the threshold.
    Fth { threshold: f64 },
    /// Distill once whenever that raises the stage secret key rate.
    Skr,
    /// Follow a precomputed schedule.
    Manual { schedule: ScheduleVector },
}

impl PolicyKind {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        match self {
            PolicyKind::Fth { threshold } if !(*threshold > 0.5 && *threshold <= 1.0) => {
                Err(ProtocolError::InvalidThreshold(*threshold))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Fth { threshold } => write!(f, "fth:{threshold}"),
            PolicyKind::Skr => f.write_str("skr"),
            PolicyKind::Manual { schedule } => write!(f, "manual:{schedule}"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("skr") {
            return Ok(PolicyKind::Skr);
        }
        if let Some(t) = s.strip_prefix("fth:") {
            let threshold = t
                .parse::<f64>()
                .map_err(|e| format!("bad F_th threshold {t:?}: {e}"))?;
            return Ok(PolicyKind::Fth { threshold });
        }
        if let Some(d) = s.strip_prefix("manual:") {
            return Ok(PolicyKind::Manual {
                schedule: d.parse()?,
            });
        }
        Err(format!(
            "unknown policy {s:?}; expected fth:<threshold>, skr or manual:<d0,d1,...>"
        ))
    }
}

/// What happened at one protocol level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct LevelTrace {
    pub level: usize,
    pub fidelity_before: f64,
    pub fidelity_after: f64,
    pub steps: u32,
    /// DEJMPS success probability of each executed step.
    pub success_probs: Vec<f64>,
    /// Expected link count after distillation (before the swap).
    pub expected_links: f64,
    /// Secret key rate of the links right after distillation.
    pub stage_skr: f64,
    /// Average state after distillation.
    pub state: BellDiagonalState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceFlag {
    /// A distillation step had zero success probability; no links survive.
    DegenerateState { level: usize },
    /// No links are expected to survive to the end.
    NoLinks,
}

/// Level-by-level record of a protocol run. The last entry is the
/// end-to-end distillation stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct StageTrace {
    pub levels: Vec<LevelTrace>,
    pub flags: Vec<TraceFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ProtocolRun {
    pub skr: f64,
    pub schedule: ScheduleVector,
    pub secret_fraction: f64,
    pub expected_links: f64,
    pub final_state: BellDiagonalState,
    pub trace: StageTrace,
}

/// Werner state with fidelity `1 - 1.25 ε_G`.
pub fn initial_link_state(params: &ChainParams) -> Result<BellDiagonalState, ProtocolError> {
    let fidelity = 1.0 - 1.25 * params.gate_error();
    if fidelity <= 0.5 {
        return Err(ParamsError {
            field: "gate_error",
            message: format!("initial fidelity {fidelity} must exceed 1/2"),
        }
        .into());
    }
    Ok(BellDiagonalState::werner(fidelity)?)
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Asymptotic BB84 secret fraction `max(0, 1 - h(e_Z) - h(e_X))`.
pub fn secret_fraction(state: &BellDiagonalState) -> f64 {
    (1.0 - binary_entropy(state.bit_error()) - binary_entropy(state.phase_error())).max(0.0)
}

/// Secret key per channel use: expected links times secret fraction over `M`.
pub fn compute_skr(links: &LinkCountDistribution, state: &BellDiagonalState, multiplexing: u32) -> f64 {
    links.expectation() * secret_fraction(state) / multiplexing as f64
}

struct Stage {
    links: LinkCountDistribution,
    state: BellDiagonalState,
}

impl Stage {
    fn distill(&mut self, steps: u32, params: &ChainParams) -> (Vec<f64>, bool) {
        let mut probs = Vec::with_capacity(steps as usize);
        for _ in 0..steps {
            match dejmps_step(&self.state, &params.noise) {
                Ok(out) => {
                    self.links = self
                        .links
                        .distill_thin(out.success_prob)
                        .expect("success probability in [0, 1]");
                    self.state = out.state;
                    probs.push(out.success_prob);
                }
                Err(_) => {
                    self.links = LinkCountDistribution::point_mass(0, self.links.capacity());
                    probs.push(0.0);
                    return (probs, true);
                }
            }
        }
        (probs, false)
    }

    fn record(&self, level: usize, before: f64, steps: u32, probs: Vec<f64>, m: u32) -> LevelTrace {
        LevelTrace {
            level,
            fidelity_before: before,
            fidelity_after: self.state.fidelity(),
            steps,
            success_probs: probs,
            expected_links: self.links.expectation(),
            stage_skr: compute_skr(&self.links, &self.state, m),
            state: self.state,
        }
    }
}

/// Runs the protocol for one chain and one distillation policy.
///
/// Identical inputs always give bit-identical outputs. A `Manual` schedule
/// must have `log2 N + 1` entries and respect the `log2 M` budget; the
/// local rules never exceed the budget and never distill end-to-end.
pub fn run_protocol(params: &ChainParams, policy: &PolicyKind) -> Result<ProtocolRun, ProtocolError> {
    params.validate()?;
    policy.validate()?;
    if let PolicyKind::Manual { schedule } = policy {
        schedule.check(params)?;
    }

    let m = params.multiplexing;
    let levels = params.levels();
    let budget = params.budget();
    let segment = params.segment_length_m();

    let mut stage = Stage {
        links: LinkCountDistribution::binomial(m as usize, params.link_success_probability())
            .expect("validated probability"),
        state: initial_link_state(params)?,
    };
    let mut executed = Vec::with_capacity(levels + 1);
    let mut trace = StageTrace {
        levels: Vec::with_capacity(levels + 1),
        flags: Vec::new(),
    };
    let mut used = 0u32;

    for level in 0..=levels {
        let remaining = budget - used;
        let steps = match policy {
            PolicyKind::Manual { schedule } => schedule.steps()[level],
            _ if level == levels => 0,
            PolicyKind::Fth { threshold } => policy::decide_fth(&stage.state, *threshold, remaining),
            PolicyKind::Skr => policy::decide_skr_rule(&stage.links, &stage.state, params, remaining),
        };
        used += steps;
        executed.push(steps);

        let before = stage.state.fidelity();
        let (probs, degenerate) = stage.distill(steps, params);
        if degenerate {
            trace.flags.push(TraceFlag::DegenerateState { level });
        }
        trace.levels.push(stage.record(level, before, steps, probs, m));

        if level < levels {
            stage.state = swap_states(&stage.state, &stage.state, &params.noise);
            stage.links = stage
                .links
                .min_combine(&stage.links)
                .expect("same capacity");
            let wait = segment * (1u64 << level) as f64;
            stage.state = stage.state.dephase(wait, &params.noise);
        }
    }

    let expected_links = stage.links.expectation();
    if expected_links == 0.0 {
        trace.flags.push(TraceFlag::NoLinks);
    }
    let fraction = secret_fraction(&stage.state);
    Ok(ProtocolRun {
        skr: compute_skr(&stage.links, &stage.state, m),
        schedule: ScheduleVector::new(executed),
        secret_fraction: fraction,
        expected_links,
        final_state: stage.state,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::NoiseParams;

    #[test]
    fn initial_state_examples() {
        let mut p = ChainParams::new(4, 512, 1.0, 0.0, 1e4);
        assert_eq!(initial_link_state(&p).unwrap(), BellDiagonalState::PERFECT);
        p.noise.gate_error = 0.001;
        assert!((initial_link_state(&p).unwrap().fidelity() - 0.99875).abs() < 1e-15);
        p.noise.gate_error = 0.0001;
        assert!((initial_link_state(&p).unwrap().fidelity() - 0.999875).abs() < 1e-15);
        p.noise.gate_error = 0.4;
        assert!(initial_link_state(&p).is_err());
    }

    #[test]
    fn skr_examples() {
        let full = LinkCountDistribution::point_mass(512, 512);
        assert_eq!(compute_skr(&full, &BellDiagonalState::PERFECT, 512), 1.0);
        let bad = BellDiagonalState::new([0.0, 0.5, 0.0, 0.5]).unwrap();
        assert_eq!(bad.bit_error(), 0.5);
        assert_eq!(bad.phase_error(), 1.0);
        let half = BellDiagonalState::new([0.5, 0.0, 0.25, 0.25]).unwrap();
        assert_eq!(compute_skr(&full, &half, 512), 0.0);
        let w = BellDiagonalState::werner(0.95).unwrap();
        let r = 1.0 - 2.0 * binary_entropy(1.0 / 30.0);
        assert!((compute_skr(&full, &w, 512) - r).abs() < 1e-12);
    }

    #[test]
    fn policy_strings_round_trip() {
        for s in ["skr", "fth:0.95", "manual:0,1,2"] {
            let p: PolicyKind = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("greedy".parse::<PolicyKind>().is_err());
        assert!("manual:1,x".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn budget_and_length_are_enforced() {
        let p = ChainParams::new(4, 8, 1.0, 1e-3, 1e4);
        let over = PolicyKind::Manual {
            schedule: ScheduleVector::new(vec![2, 1, 1]),
        };
        assert_eq!(
            run_protocol(&p, &over).unwrap_err(),
            ProtocolError::BudgetExceeded { total: 4, budget: 3 }
        );
        let short = PolicyKind::Manual {
            schedule: ScheduleVector::new(vec![0, 0]),
        };
        assert!(matches!(
            run_protocol(&p, &short),
            Err(ProtocolError::ScheduleLength { expected: 3, got: 2 })
        ));
        assert!(run_protocol(&p, &PolicyKind::Fth { threshold: 0.4 }).is_err());
    }

    #[test]
    fn noiseless_two_segment_chain() {
        let p = ChainParams::new(2, 512, 1.0, 0.0, 0.0);
        let run = run_protocol(
            &p,
            &PolicyKind::Manual {
                schedule: ScheduleVector::zeros(2),
            },
        )
        .unwrap();
        assert_eq!(run.secret_fraction, 1.0);
        let b = LinkCountDistribution::binomial(512, 0.5).unwrap();
        let expected = b.min_combine(&b).unwrap().expectation() / 512.0;
        assert!((run.skr - expected).abs() < 1e-12);
        assert_eq!(run.trace.levels.len(), 2);
    }

    #[test]
    fn local_rules_never_distill_end_to_end() {
        let p = ChainParams::new(16, 512, 0.5, 1e-3, 1e5);
        for policy in [PolicyKind::Skr, PolicyKind::Fth { threshold: 0.999 }] {
            let run = run_protocol(&p, &policy).unwrap();
            assert_eq!(*run.schedule.steps().last().unwrap(), 0);
            assert!(run.schedule.steps().iter().all(|&d| d <= 1));
            assert!(run.schedule.total() <= p.budget());
        }
    }

    #[test]
    fn fth_budget_guard_limits_steps() {
        // every level wants to distill, but M = 4 allows only two steps
        let p = ChainParams::new(16, 4, 1.0, 1e-2, 1e3);
        let run = run_protocol(&p, &PolicyKind::Fth { threshold: 1.0 }).unwrap();
        assert_eq!(run.schedule.steps(), &[1, 1, 0, 0, 0]);
    }

    #[test]
    fn degenerate_links_give_zero_rate() {
        let p = ChainParams::new(4, 8, 0.0, 1e-3, 1e3);
        let run = run_protocol(&p, &PolicyKind::Skr).unwrap();
        assert_eq!(run.skr, 0.0);
        assert!(run.trace.flags.contains(&TraceFlag::NoLinks));
        let _ = NoiseParams::default();
    }
}
