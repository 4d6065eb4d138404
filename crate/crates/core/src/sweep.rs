//! Parameter sweeps over the chain grid, persisted point by point.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::optimizer::{search_schedules, SearchConfig};
use crate::params::{ChainParams, ParamsError};
use crate::protocol::{run_protocol, PolicyKind, ProtocolError, ProtocolRun, ScheduleVector, StageTrace};
use crate::states::{NoiseParams, DEFAULT_COHERENCE_TIME_S, DEFAULT_SIGNAL_SPEED_M_PER_S};
use crate::store::{ResultsStore, StoreError};

/// Policy label used for records produced by the schedule search.
pub const GD_LABEL: &str = "gd";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistanceGrid {
    LogSpaced { min_km: f64, max_km: f64, points: usize },
    Explicit { values_km: Vec<f64> },
}

impl DistanceGrid {
    pub fn values_km(&self) -> Vec<f64> {
        match self {
            DistanceGrid::Explicit { values_km } => values_km.clone(),
            DistanceGrid::LogSpaced { min_km, max_km, points } => {
                if *points == 1 {
                    return vec![*min_km];
                }
                let ratio = (max_km / min_km).ln();
                (0..*points)
                    .map(|i| {
                        if i + 1 == *points {
                            *max_km
                        } else {
                            min_km * (ratio * i as f64 / (*points - 1) as f64).exp()
                        }
                    })
                    .collect()
            }
        }
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            DistanceGrid::LogSpaced { min_km, max_km, points } => {
                if *points == 0 {
                    return Err("distances.points must be at least 1".into());
                }
                if !(*min_km > 0.0 && max_km >= min_km && max_km.is_finite()) {
                    return Err(format!(
                        "log-spaced distances need 0 < min_km <= max_km, got [{min_km}, {max_km}]"
                    ));
                }
            }
            DistanceGrid::Explicit { values_km } => {
                if values_km.is_empty() {
                    return Err("distances.values_km must not be empty".into());
                }
                if values_km.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                    return Err("distances.values_km must be finite and non-negative".into());
                }
            }
        }
        Ok(())
    }
}

/// The chain parameter space of a sweep. Distances are in kilometers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub segments: Vec<u32>,
    pub multiplexing: Vec<u32>,
    pub coupling_eff: Vec<f64>,
    pub gate_error: Vec<f64>,
    pub distances: DistanceGrid,
    #[serde(default = "default_attenuation_km")]
    pub attenuation_length_km: f64,
    #[serde(default = "default_coherence")]
    pub coherence_time_s: f64,
    #[serde(default = "default_signal_speed")]
    pub signal_speed_m_per_s: f64,
}

fn default_attenuation_km() -> f64 {
    crate::linkstats::DEFAULT_ATTENUATION_LENGTH_M / 1e3
}
fn default_coherence() -> f64 {
    DEFAULT_COHERENCE_TIME_S
}
fn default_signal_speed() -> f64 {
    DEFAULT_SIGNAL_SPEED_M_PER_S
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            segments: (2..=12).map(|k| 1u32 << k).collect(),
            multiplexing: vec![512, 1024, 2048],
            coupling_eff: vec![0.3, 0.5, 0.9, 1.0],
            gate_error: vec![1e-4, 1e-3],
            distances: DistanceGrid::LogSpaced {
                min_km: 10.0,
                max_km: 1e4,
                points: 40,
            },
            attenuation_length_km: default_attenuation_km(),
            coherence_time_s: default_coherence(),
            signal_speed_m_per_s: default_signal_speed(),
        }
    }
}

/// One parameter point of the grid; distances vary within a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct GridPoint {
    pub segments: u32,
    pub multiplexing: u32,
    pub coupling_eff: f64,
    pub gate_error: f64,
}

impl GridPoint {
    /// File-name-safe identifier, stable across runs.
    pub fn key(&self) -> String {
        format!(
            "n{}-m{}-eta{}-eps{}",
            self.segments, self.multiplexing, self.coupling_eff, self.gate_error
        )
    }
}

impl SweepGrid {
    /// Points in canonical order: N, then M, then coupling, then gate error.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &segments in &self.segments {
            for &multiplexing in &self.multiplexing {
                for &coupling_eff in &self.coupling_eff {
                    for &gate_error in &self.gate_error {
                        out.push(GridPoint {
                            segments,
                            multiplexing,
                            coupling_eff,
                            gate_error,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn chain_params(&self, point: &GridPoint, distance_km: f64) -> ChainParams {
        ChainParams {
            segments: point.segments,
            multiplexing: point.multiplexing,
            coupling_eff: point.coupling_eff,
            total_distance_m: distance_km * 1e3,
            attenuation_length_m: self.attenuation_length_km * 1e3,
            noise: NoiseParams {
                gate_error: point.gate_error,
                coherence_time_s: self.coherence_time_s,
                signal_speed_m_per_s: self.signal_speed_m_per_s,
            },
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let empty = [
            ("segments", self.segments.is_empty()),
            ("multiplexing", self.multiplexing.is_empty()),
            ("coupling_eff", self.coupling_eff.is_empty()),
            ("gate_error", self.gate_error.is_empty()),
        ];
        if let Some((field, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(SweepError::InvalidGrid(format!("{field} must not be empty")));
        }
        self.distances.validate().map_err(SweepError::InvalidGrid)?;
        for point in self.points() {
            self.chain_params(&point, 0.0)
                .validate()
                .map_err(|e: ParamsError| SweepError::InvalidGrid(format!("point {}: {e}", point.key())))?;
        }
        let keys: std::collections::BTreeSet<String> = self.points().iter().map(GridPoint::key).collect();
        if keys.len() != self.points().len() {
            return Err(SweepError::InvalidGrid("grid contains duplicate values".into()));
        }
        Ok(())
    }
}

/// Everything that determines the content of a store.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub grid: SweepGrid,
    /// Sampling settings for the schedule search. Its `seed` is the global
    /// seed from which every per-record seed is derived.
    #[serde(default)]
    pub search: SearchConfig,
}

impl SweepSpec {
    /// Policy labels in record order within each distance.
    pub fn policy_labels(&self) -> Vec<String> {
        let mut labels = vec![GD_LABEL.to_string()];
        labels.extend(self.ld_policies().iter().map(PolicyKind::to_string));
        labels
    }

    pub fn ld_policies(&self) -> Vec<PolicyKind> {
        let mut out: Vec<PolicyKind> = self
            .search
            .fth_grid
            .iter()
            .map(|&threshold| PolicyKind::Fth { threshold })
            .collect();
        out.push(PolicyKind::Skr);
        out
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        self.grid.validate()?;
        for p in self.ld_policies() {
            p.validate()
                .map_err(|e| SweepError::InvalidGrid(format!("policy {p}: {e}")))?;
        }
        Ok(())
    }
}

/// Outcome of one policy at one distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct RecordResult {
    pub skr: f64,
    pub schedule: ScheduleVector,
    pub secret_fraction: f64,
    pub final_fidelity: f64,
    pub expected_links: f64,
    /// Hex SHA-256 of the serialized per-level trace.
    pub trace_digest: String,
    /// Distinct schedules evaluated; only set for search records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluated: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct SweepRecord {
    pub point: String,
    pub distance_index: usize,
    pub distance_km: f64,
    pub params: ChainParams,
    pub policy: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<RecordResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn skr(&self) -> Option<f64> {
        self.result.as_ref().map(|r| r.skr)
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

pub fn trace_digest(trace: &StageTrace) -> String {
    let bytes = serde_json::to_vec(trace).expect("traces always serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// Seed for one (point, distance) cell, independent of evaluation order.
pub fn derive_seed(global: u64, point_key: &str, distance_index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(global.to_le_bytes());
    h.update(point_key.as_bytes());
    h.update((distance_index as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

fn result_from_run(run: &ProtocolRun, evaluated: Option<usize>) -> RecordResult {
    RecordResult {
        skr: run.skr,
        schedule: run.schedule.clone(),
        secret_fraction: run.secret_fraction,
        final_fidelity: run.final_state.fidelity(),
        expected_links: run.expected_links,
        trace_digest: trace_digest(&run.trace),
        evaluated,
    }
}

fn evaluate_search(params: &ChainParams, search: &SearchConfig) -> Result<RecordResult, ProtocolError> {
    let found = search_schedules(params, search)?;
    let run = run_protocol(
        params,
        &PolicyKind::Manual {
            schedule: found.best_schedule,
        },
    )?;
    Ok(result_from_run(&run, Some(found.evaluated)))
}

/// Evaluates every policy at every distance of one grid point.
pub fn evaluate_point(spec: &SweepSpec, point: &GridPoint) -> Vec<SweepRecord> {
    let key = point.key();
    let ld = spec.ld_policies();
    let mut out = Vec::new();
    for (distance_index, distance_km) in spec.grid.distances.values_km().into_iter().enumerate() {
        let params = spec.grid.chain_params(point, distance_km);
        let seed = derive_seed(spec.search.seed, &key, distance_index);
        let record = |policy: String, outcome: Result<RecordResult, ProtocolError>| {
            let (result, error) = match outcome {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SweepRecord {
                point: key.clone(),
                distance_index,
                distance_km,
                params,
                policy,
                seed,
                result,
                error,
            }
        };
        let search = SearchConfig {
            seed,
            ..spec.search.clone()
        };
        out.push(record(GD_LABEL.to_string(), evaluate_search(&params, &search)));
        for policy in &ld {
            let outcome = run_protocol(&params, policy).map(|run| result_from_run(&run, None));
            out.push(record(policy.to_string(), outcome));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepProgress {
    pub completed: usize,
    pub total: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepOptions {
    /// Stop after this many newly evaluated points.
    pub max_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepSummary {
    pub total_points: usize,
    pub skipped_points: usize,
    pub evaluated_points: usize,
    pub failed_records: usize,
}

/// Evaluates every grid point missing from `store`. Points are written as
/// they finish, so an interrupted run can be resumed.
pub fn run_sweep(
    spec: &SweepSpec,
    store: &ResultsStore,
    options: SweepOptions,
    progress: &(dyn Fn(SweepProgress) + Sync),
) -> Result<SweepSummary, SweepError> {
    spec.validate()?;
    let all = spec.grid.points();
    let mut pending = Vec::new();
    for p in &all {
        if !store.has_point(&p.key()) {
            pending.push(*p);
        }
    }
    let skipped = all.len() - pending.len();
    if let Some(limit) = options.max_points {
        pending.truncate(limit);
    }

    let done = AtomicUsize::new(0);
    let failed = AtomicUsize::new(0);
    let total = all.len();
    pending.par_iter().try_for_each(|point| -> Result<(), SweepError> {
        let records = evaluate_point(spec, point);
        failed.fetch_add(records.iter().filter(|r| r.error.is_some()).count(), Ordering::Relaxed);
        store.write_point(&point.key(), &records)?;
        let completed = skipped + done.fetch_add(1, Ordering::Relaxed) + 1;
        progress(SweepProgress {
            completed,
            total,
            skipped,
        });
        Ok(())
    })?;

    Ok(SweepSummary {
        total_points: total,
        skipped_points: skipped,
        evaluated_points: done.into_inner(),
        failed_records: failed.into_inner(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_matches_parameter_table() {
        let g = SweepGrid::default();
        assert_eq!(g.segments.first(), Some(&4));
        assert_eq!(g.segments.last(), Some(&4096));
        assert_eq!(g.segments.len(), 11);
        assert_eq!(g.points().len(), 11 * 3 * 4 * 2);
        let d = g.distances.values_km();
        assert_eq!(d.len(), 40);
        assert_eq!(d[0], 10.0);
        assert_eq!(d[39], 1e4);
        assert!(d.windows(2).all(|w| w[1] > w[0]));
        let r = d[1] / d[0];
        assert!(d.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-12));
        g.validate().unwrap();
    }

    #[test]
    fn seeds_depend_on_coordinates_only() {
        let a = derive_seed(1, "n4-m512-eta1-eps0.001", 0);
        assert_eq!(a, derive_seed(1, "n4-m512-eta1-eps0.001", 0));
        assert_ne!(a, derive_seed(2, "n4-m512-eta1-eps0.001", 0));
        assert_ne!(a, derive_seed(1, "n4-m512-eta1-eps0.001", 1));
        assert_ne!(a, derive_seed(1, "n8-m512-eta1-eps0.001", 0));
    }

    #[test]
    fn point_cardinality() {
        let spec = SweepSpec {
            grid: SweepGrid {
                segments: vec![4],
                multiplexing: vec![512],
                coupling_eff: vec![1.0],
                gate_error: vec![1e-3],
                distances: DistanceGrid::LogSpaced {
                    min_km: 10.0,
                    max_km: 1000.0,
                    points: 5,
                },
                ..Default::default()
            },
            search: SearchConfig {
                samples: 20,
                ..Default::default()
            },
        };
        let records = evaluate_point(&spec, &spec.grid.points()[0]);
        let ld = spec.ld_policies().len();
        assert_eq!(records.iter().filter(|r| r.policy == GD_LABEL).count(), 5);
        assert_eq!(records.len(), 5 * (1 + ld));
        for r in &records {
            let res = r.result.as_ref().unwrap();
            let replay = run_protocol(
                &r.params,
                &PolicyKind::Manual {
                    schedule: res.schedule.clone(),
                },
            )
            .unwrap();
            assert_eq!(replay.skr.to_bits(), res.skr.to_bits());
            assert_eq!(trace_digest(&replay.trace), res.trace_digest);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let mut g = SweepGrid::default();
        g.segments = vec![6];
        assert!(g.validate().is_err());
        let mut g = SweepGrid::default();
        g.coupling_eff.clear();
        assert!(g.validate().is_err());
        let mut g = SweepGrid::default();
        g.distances = DistanceGrid::LogSpaced {
            min_km: 0.0,
            max_km: 10.0,
            points: 3,
        };
        assert!(g.validate().is_err());
        let mut g = SweepGrid::default();
        g.gate_error = vec![1e-3, 1e-3];
        assert!(g.validate().is_err());
    }
}
