//! Plot-ready tables derived from a results store.
//!
//! Every table is a flat row type so the same rows serialize to CSV (column
//! order = field order) and to JSON arrays.

use std::collections::BTreeMap;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    minimal_advantage_n, plateau_ratio, plateau_stats, plob_bound, pointwise_max, ultimate_bound,
    AnalysisError, CurvePoint, PlateauRatio, DEFAULT_PLATEAU_THRESHOLD,
};
use crate::sweep::{GridPoint, SweepRecord, GD_LABEL};

/// Local baselines compared against the search. `fth` is the best of the
/// F_th thresholds at each distance.
pub const BASELINES: [&str; 2] = ["fth", "skr"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct CurveRow {
    pub segments: u32,
    pub multiplexing: u32,
    pub coupling_eff: f64,
    pub gate_error: f64,
    pub distance_km: f64,
    pub policy: String,
    pub skr: Option<f64>,
    pub schedule: Option<String>,
    pub final_fidelity: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct PlateauRow {
    pub segments: u32,
    pub multiplexing: u32,
    pub coupling_eff: f64,
    pub gate_error: f64,
    pub baseline: String,
    pub gd_max_skr: f64,
    pub gd_plateau_mean: f64,
    pub ld_max_skr: f64,
    pub ld_plateau_mean: f64,
    pub ratio: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct MinNRow {
    pub multiplexing: u32,
    pub coupling_eff: f64,
    pub gate_error: f64,
    pub baseline: String,
    pub min_segments: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct BoundRow {
    pub distance_km: Option<f64>,
    pub transmissivity: f64,
    pub repeaters: u32,
    /// `None` when unbounded (`transmissivity = 1`).
    pub plob: Option<f64>,
    pub ultimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ScheduleRow {
    pub segments: u32,
    pub multiplexing: u32,
    pub coupling_eff: f64,
    pub gate_error: f64,
    pub distance_km: f64,
    pub level: usize,
    pub steps: u32,
    pub skr: f64,
}

fn point_of(r: &SweepRecord) -> GridPoint {
    GridPoint {
        segments: r.params.segments,
        multiplexing: r.params.multiplexing,
        coupling_eff: r.params.coupling_eff,
        gate_error: r.params.noise.gate_error,
    }
}

pub fn curve_rows(records: &[SweepRecord]) -> Vec<CurveRow> {
    records
        .iter()
        .map(|r| {
            let p = point_of(r);
            CurveRow {
                segments: p.segments,
                multiplexing: p.multiplexing,
                coupling_eff: p.coupling_eff,
                gate_error: p.gate_error,
                distance_km: r.distance_km,
                policy: r.policy.clone(),
                skr: r.skr(),
                schedule: r.result.as_ref().map(|x| x.schedule.to_string()),
                final_fidelity: r.result.as_ref().map(|x| x.final_fidelity),
                error: r.error.clone(),
            }
        })
        .collect()
}

/// Curves of one grid point, keyed by policy label. Failed records count
/// as zero key.
#[derive(Debug, Clone)]
pub struct PointCurves {
    pub point: GridPoint,
    pub curves: BTreeMap<String, Vec<CurvePoint>>,
}

impl PointCurves {
    pub fn curve(&self, policy: &str) -> Option<&[CurvePoint]> {
        self.curves.get(policy).map(Vec::as_slice)
    }

    /// Baseline curve by name: `skr`, or the pointwise best `fth:*` curve.
    pub fn baseline(&self, name: &str) -> Result<Option<Vec<CurvePoint>>, AnalysisError> {
        if name == "fth" {
            let fth: Vec<Vec<CurvePoint>> = self
                .curves
                .iter()
                .filter(|(k, _)| k.starts_with("fth:"))
                .map(|(_, v)| v.clone())
                .collect();
            if fth.is_empty() {
                return Ok(None);
            }
            return pointwise_max(&fth).map(Some);
        }
        Ok(self.curves.get(name).cloned())
    }

    pub fn ratio(&self, baseline: &str) -> Result<Option<PlateauRatio>, AnalysisError> {
        let (Some(gd), Some(ld)) = (self.curve(GD_LABEL), self.baseline(baseline)?) else {
            return Ok(None);
        };
        plateau_ratio(gd, &ld).map(Some)
    }
}

/// Groups records into per-point curves, preserving first-seen point order.
pub fn group_curves(records: &[SweepRecord]) -> Vec<PointCurves> {
    let mut order: Vec<String> = Vec::new();
    let mut map: BTreeMap<String, PointCurves> = BTreeMap::new();
    for r in records {
        let entry = map.entry(r.point.clone()).or_insert_with(|| {
            order.push(r.point.clone());
            PointCurves {
                point: point_of(r),
                curves: BTreeMap::new(),
            }
        });
        let curve = entry.curves.entry(r.policy.clone()).or_default();
        curve.push(CurvePoint {
            distance_km: r.distance_km,
            skr: r.skr().unwrap_or(0.0),
        });
    }
    order
        .into_iter()
        .map(|k| map.remove(&k).expect("key inserted above"))
        .collect()
}

pub fn plateau_rows(records: &[SweepRecord]) -> Result<Vec<PlateauRow>, AnalysisError> {
    let mut rows = Vec::new();
    for pc in group_curves(records) {
        let Some(gd) = pc.curve(GD_LABEL) else { continue };
        let g = plateau_stats(gd, DEFAULT_PLATEAU_THRESHOLD)?;
        for name in BASELINES {
            let Some(ld) = pc.baseline(name)? else { continue };
            let l = plateau_stats(&ld, DEFAULT_PLATEAU_THRESHOLD)?;
            let ratio = plateau_ratio(gd, &ld)?;
            rows.push(PlateauRow {
                segments: pc.point.segments,
                multiplexing: pc.point.multiplexing,
                coupling_eff: pc.point.coupling_eff,
                gate_error: pc.point.gate_error,
                baseline: name.to_string(),
                gd_max_skr: g.max_skr,
                gd_plateau_mean: g.plateau_mean_skr,
                ld_max_skr: l.max_skr,
                ld_plateau_mean: l.plateau_mean_skr,
                ratio: ratio.value(),
                status: ratio.label().to_string(),
            });
        }
    }
    Ok(rows)
}

fn ratio_from_row(row: &PlateauRow) -> PlateauRatio {
    match (row.ratio, row.status.as_str()) {
        (Some(v), _) => PlateauRatio::Defined(v),
        (None, "omitted") => PlateauRatio::Omitted,
        (None, _) => PlateauRatio::UndefinedLdZero,
    }
}

pub fn min_n_rows(plateau: &[PlateauRow]) -> Vec<MinNRow> {
    // (M, eta bits, eps bits, baseline) -> N -> ratio, keeping first-seen order
    type Key = (u32, u64, u64, String);
    let mut order: Vec<Key> = Vec::new();
    let mut groups: BTreeMap<Key, (f64, f64, BTreeMap<u32, PlateauRatio>)> = BTreeMap::new();
    for row in plateau {
        let key = (
            row.multiplexing,
            row.coupling_eff.to_bits(),
            row.gate_error.to_bits(),
            row.baseline.clone(),
        );
        let g = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (row.coupling_eff, row.gate_error, BTreeMap::new())
        });
        g.2.insert(row.segments, ratio_from_row(row));
    }
    order
        .into_iter()
        .map(|key| {
            let (eta, eps, ratios) = &groups[&key];
            MinNRow {
                multiplexing: key.0,
                coupling_eff: *eta,
                gate_error: *eps,
                baseline: key.3.clone(),
                min_segments: minimal_advantage_n(ratios),
            }
        })
        .collect()
}

pub fn bound_row(distance_km: Option<f64>, eta: f64, repeaters: u32) -> Result<BoundRow, AnalysisError> {
    Ok(BoundRow {
        distance_km,
        transmissivity: eta,
        repeaters,
        plob: Some(plob_bound(eta)?).filter(|v| v.is_finite()),
        ultimate: Some(ultimate_bound(eta, repeaters)?).filter(|v| v.is_finite()),
    })
}

/// Per-level step counts of the searched schedules.
pub fn schedule_rows(records: &[SweepRecord]) -> Vec<ScheduleRow> {
    let mut rows = Vec::new();
    for r in records.iter().filter(|r| r.policy == GD_LABEL) {
        let Some(res) = &r.result else { continue };
        let p = point_of(r);
        for (level, &steps) in res.schedule.steps().iter().enumerate() {
            rows.push(ScheduleRow {
                segments: p.segments,
                multiplexing: p.multiplexing,
                coupling_eff: p.coupling_eff,
                gate_error: p.gate_error,
                distance_km: r.distance_km,
                level,
                steps,
                skr: res.skr,
            });
        }
    }
    rows
}
