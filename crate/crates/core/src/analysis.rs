//! Capacity bounds and curve-level comparison metrics.

use std::collections::BTreeMap;
use std::fmt;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// SKR values below this count as zero when flagging curves.
pub const NEGLIGIBLE_SKR: f64 = 1e-10;

/// Fraction of the maximum that defines the plateau.
pub const DEFAULT_PLATEAU_THRESHOLD: f64 = 0.9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("transmissivity must be in [0, 1], got {0}")]
    InvalidTransmissivity(f64),
    #[error("curve is empty")]
    EmptyCurve,
    #[error("curves are sampled on different distance grids")]
    GridMismatch,
    #[error("plateau threshold must be in (0, 1], got {0}")]
    InvalidThreshold(f64),
}

fn check_eta(eta: f64) -> Result<(), AnalysisError> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(AnalysisError::InvalidTransmissivity(eta))
    }
}

/// Repeaterless key capacity of a pure-loss channel. Infinite at `eta = 1`.
pub fn plob_bound(eta: f64) -> Result<f64, AnalysisError> {
    check_eta(eta)?;
    Ok(-(-eta).ln_1p() / std::f64::consts::LN_2)
}

/// Capacity of an equidistant chain with `repeaters` intermediate nodes.
pub fn ultimate_bound(eta: f64, repeaters: u32) -> Result<f64, AnalysisError> {
    check_eta(eta)?;
    let per_hop = eta.powf(1.0 / (f64::from(repeaters) + 1.0));
    Ok(-(-per_hop).ln_1p() / std::f64::consts::LN_2)
}

/// One sampled point of an SKR-versus-distance curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct CurvePoint {
    pub distance_km: f64,
    pub skr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct PlateauStats {
    pub max_skr: f64,
    pub plateau_mean_skr: f64,
    pub plateau_distances_km: Vec<f64>,
    pub negligible: bool,
}

pub fn plateau_stats(curve: &[CurvePoint], threshold: f64) -> Result<PlateauStats, AnalysisError> {
    if curve.is_empty() {
        return Err(AnalysisError::EmptyCurve);
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(AnalysisError::InvalidThreshold(threshold));
    }
    let max_skr = curve.iter().map(|p| p.skr).fold(f64::NEG_INFINITY, f64::max);
    if max_skr < NEGLIGIBLE_SKR {
        return Ok(PlateauStats {
            max_skr,
            plateau_mean_skr: 0.0,
            plateau_distances_km: Vec::new(),
            negligible: true,
        });
    }
    let cut = threshold * max_skr;
    let members: Vec<&CurvePoint> = curve.iter().filter(|p| p.skr >= cut).collect();
    let mean = members.iter().map(|p| p.skr).sum::<f64>() / members.len() as f64;
    Ok(PlateauStats {
        max_skr,
        plateau_mean_skr: mean,
        plateau_distances_km: members.iter().map(|p| p.distance_km).collect(),
        negligible: false,
    })
}

/// Ratio of plateau means, with the two omission cases kept distinct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum PlateauRatio {
    Defined(f64),
    /// The baseline curve is negligible while the global curve is not.
    UndefinedLdZero,
    /// Both curves are negligible.
    Omitted,
}

impl PlateauRatio {
    pub fn value(&self) -> Option<f64> {
        match self {
            PlateauRatio::Defined(v) => Some(*v),
            _ => None,
        }
    }

    /// Whether the global curve beats the baseline by more than `factor`.
    /// A zero baseline under a nonzero global curve is an unbounded ratio.
    pub fn exceeds(&self, factor: f64) -> bool {
        match self {
            PlateauRatio::Defined(v) => *v > factor,
            PlateauRatio::UndefinedLdZero => true,
            PlateauRatio::Omitted => false,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PlateauRatio::Defined(_) => "defined",
            PlateauRatio::UndefinedLdZero => "undefined (LD zero)",
            PlateauRatio::Omitted => "omitted",
        }
    }
}

impl fmt::Display for PlateauRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlateauRatio::Defined(v) => write!(f, "{v}"),
            other => f.write_str(other.label()),
        }
    }
}

pub fn plateau_ratio(gd: &[CurvePoint], ld: &[CurvePoint]) -> Result<PlateauRatio, AnalysisError> {
    if gd.len() != ld.len()
        || gd
            .iter()
            .zip(ld)
            .any(|(a, b)| a.distance_km.to_bits() != b.distance_km.to_bits())
    {
        return Err(AnalysisError::GridMismatch);
    }
    let g = plateau_stats(gd, DEFAULT_PLATEAU_THRESHOLD)?;
    let l = plateau_stats(ld, DEFAULT_PLATEAU_THRESHOLD)?;
    Ok(match (g.negligible, l.negligible) {
        (_, false) => PlateauRatio::Defined(g.plateau_mean_skr / l.plateau_mean_skr),
        (false, true) => PlateauRatio::UndefinedLdZero,
        (true, true) => PlateauRatio::Omitted,
    })
}

/// Smallest segment count at which the global schedule has an advantage.
pub fn minimal_advantage_n(ratios: &BTreeMap<u32, PlateauRatio>) -> Option<u32> {
    ratios
        .iter()
        .find(|(_, r)| r.exceeds(1.0))
        .map(|(n, _)| *n)
}

/// Pointwise maximum of several curves on a shared grid.
pub fn pointwise_max(curves: &[Vec<CurvePoint>]) -> Result<Vec<CurvePoint>, AnalysisError> {
    let Some(first) = curves.first() else {
        return Err(AnalysisError::EmptyCurve);
    };
    let mut out = first.clone();
    for c in &curves[1..] {
        if c.len() != out.len() {
            return Err(AnalysisError::GridMismatch);
        }
        for (o, p) in out.iter_mut().zip(c) {
            if o.distance_km.to_bits() != p.distance_km.to_bits() {
                return Err(AnalysisError::GridMismatch);
            }
            o.skr = o.skr.max(p.skr);
        }
    }
    Ok(out)
}
