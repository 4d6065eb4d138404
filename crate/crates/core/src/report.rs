//! Serializable single-run report shared by the command line and the HTTP
//! facade.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::analysis::{plob_bound, ultimate_bound};
use crate::params::ChainParams;
use crate::protocol::{run_protocol, PolicyKind, ProtocolError, ProtocolRun, ScheduleVector, StageTrace};
use crate::states::BellDiagonalState;

/// Capacity bounds at the chain's end-to-end transmissivity. Infinite
/// bounds (lossless fiber) are reported as `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Bounds {
    pub transmissivity: f64,
    pub plob: Option<f64>,
    /// Bound for the chain's `N - 1` intermediate repeaters.
    pub ultimate: Option<f64>,
}

impl Bounds {
    pub fn for_chain(params: &ChainParams) -> Self {
        let eta = params.end_to_end_transmissivity();
        let finite = |v: f64| v.is_finite().then_some(v);
        Self {
            transmissivity: eta,
            plob: plob_bound(eta).ok().and_then(finite),
            ultimate: ultimate_bound(eta, params.segments - 1).ok().and_then(finite),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct RunReport {
    pub params: ChainParams,
    pub distance_km: f64,
    pub policy: PolicyKind,
    pub skr: f64,
    pub schedule: ScheduleVector,
    pub secret_fraction: f64,
    pub expected_links: f64,
    pub final_fidelity: f64,
    pub final_state: BellDiagonalState,
    pub bounds: Bounds,
    pub trace: StageTrace,
}

impl RunReport {
    pub fn from_run(params: &ChainParams, policy: &PolicyKind, run: ProtocolRun) -> Self {
        Self {
            params: *params,
            distance_km: params.total_distance_m / 1e3,
            policy: policy.clone(),
            skr: run.skr,
            schedule: run.schedule,
            secret_fraction: run.secret_fraction,
            expected_links: run.expected_links,
            final_fidelity: run.final_state.fidelity(),
            final_state: run.final_state,
            bounds: Bounds::for_chain(params),
            trace: run.trace,
        }
    }

    pub fn evaluate(params: &ChainParams, policy: &PolicyKind) -> Result<Self, ProtocolError> {
        let run = run_protocol(params, policy)?;
        Ok(Self::from_run(params, policy, run))
    }

    /// Human-readable multi-line summary.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let p = &self.params;
        let _ = writeln!(
            s,
            "chain: N={} M={} eta_c={} eps_G={} distance={} km",
            p.segments, p.multiplexing, p.coupling_eff, p.noise.gate_error, self.distance_km
        );
        let _ = writeln!(s, "policy: {}", self.policy);
        let _ = writeln!(s, "skr: {:e}", self.skr);
        let _ = writeln!(s, "schedule: {}", self.schedule);
        let _ = writeln!(s, "final fidelity: {:.9}", self.final_fidelity);
        let _ = writeln!(s, "secret fraction: {:.9}", self.secret_fraction);
        let _ = writeln!(s, "expected links: {:.6}", self.expected_links);
        let show = |v: Option<f64>| v.map_or_else(|| "inf".to_string(), |v| format!("{v:e}"));
        let _ = writeln!(
            s,
            "bounds: plob={} ultimate={}",
            show(self.bounds.plob),
            show(self.bounds.ultimate)
        );
        let _ = writeln!(s, "level  steps  F_before     F_after      E[links]     stage_skr");
        for l in &self.trace.levels {
            let _ = writeln!(
                s,
                "{:>5}  {:>5}  {:<11.9}  {:<11.9}  {:<11.5}  {:e}",
                l.level, l.steps, l.fidelity_before, l.fidelity_after, l.expected_links, l.stage_skr
            );
        }
        for f in &self.trace.flags {
            let _ = writeln!(s, "flag: {f:?}");
        }
        s
    }
}

/// Flat per-level rows for CSV output of a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct LevelRow {
    pub level: usize,
    pub steps: u32,
    pub fidelity_before: f64,
    pub fidelity_after: f64,
    pub expected_links: f64,
    pub stage_skr: f64,
    pub run_skr: f64,
    pub schedule: String,
}

impl RunReport {
    pub fn level_rows(&self) -> Vec<LevelRow> {
        self.trace
            .levels
            .iter()
            .map(|l| LevelRow {
                level: l.level,
                steps: l.steps,
                fidelity_before: l.fidelity_before,
                fidelity_after: l.fidelity_after,
                expected_links: l.expected_links,
                stage_skr: l.stage_skr,
                run_skr: self.skr,
                schedule: self.schedule.to_string(),
            })
            .collect()
    }
}
