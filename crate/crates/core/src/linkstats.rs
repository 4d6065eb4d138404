//! Exact distributions of surviving link counts.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default attenuation length of the fiber, in meters.
pub const DEFAULT_ATTENUATION_LENGTH_M: f64 = 20_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkStatsError {
    #[error("{name} must be in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    NegativeLength { name: &'static str, value: f64 },
    #[error("attenuation length must be positive, got {0}")]
    InvalidAttenuation(f64),
    #[error("pmf must be non-negative and sum to 1 (sum {0})")]
    InvalidPmf(f64),
    #[error("distributions have different capacities ({0} vs {1})")]
    CapacityMismatch(usize, usize),
}

/// Probability that one multiplexed attempt heralds an elementary link:
/// `½ η_c² exp(-L₀ / L_att)`.
pub fn link_success_probability(
    coupling_eff: f64,
    segment_length: f64,
    attenuation_length: f64,
) -> Result<f64, LinkStatsError> {
    if !(0.0..=1.0).contains(&coupling_eff) {
        return Err(LinkStatsError::InvalidProbability {
            name: "coupling_eff",
            value: coupling_eff,
        });
    }
    if !(segment_length >= 0.0) {
        return Err(LinkStatsError::NegativeLength {
            name: "segment_length",
            value: segment_length,
        });
    }
    if !(attenuation_length > 0.0) {
        return Err(LinkStatsError::InvalidAttenuation(attenuation_length));
    }
    Ok(0.5 * coupling_eff * coupling_eff * (-segment_length / attenuation_length).exp())
}

/// Probability mass over the number of usable links, `0..=capacity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct LinkCountDistribution {
    pmf: Vec<f64>,
}

impl LinkCountDistribution {
    pub fn from_pmf(pmf: Vec<f64>) -> Result<Self, LinkStatsError> {
        let sum: f64 = pmf.iter().sum();
        if pmf.is_empty() || pmf.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(LinkStatsError::InvalidPmf(sum));
        }
        Ok(Self { pmf })
    }

    pub fn point_mass(count: usize, capacity: usize) -> Self {
        assert!(count <= capacity, "point mass {count} beyond capacity {capacity}");
        let mut pmf = vec![0.0; capacity + 1];
        pmf[count] = 1.0;
        Self { pmf }
    }

    /// Binomial(trials, p), evaluated by the ratio recurrence outward from
    /// the mode and normalized, so nothing overflows for large `trials`.
    pub fn binomial(trials: usize, p: f64) -> Result<Self, LinkStatsError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(LinkStatsError::InvalidProbability { name: "p", value: p });
        }
        Ok(Self {
            pmf: binomial_pmf(trials, p, trials),
        })
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Largest representable count.
    pub fn capacity(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn prob(&self, count: usize) -> f64 {
        self.pmf.get(count).copied().unwrap_or(0.0)
    }

    pub fn expectation(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(m, p)| m as f64 * p)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.pmf.iter().sum()
    }

    /// `P(count >= k)` for `k = 0..=capacity+1`.
    fn survival(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.pmf.len() + 1];
        for k in (0..self.pmf.len()).rev() {
            s[k] = s[k + 1] + self.pmf[k];
        }
        s
    }

    /// Distribution of `min(X, Y)` for independent `X ~ self`, `Y ~ other`.
    pub fn min_combine(&self, other: &Self) -> Result<Self, LinkStatsError> {
        if self.pmf.len() != other.pmf.len() {
            return Err(LinkStatsError::CapacityMismatch(
                self.capacity(),
                other.capacity(),
            ));
        }
        let sx = self.survival();
        let sy = other.survival();
        let joint: Vec<f64> = sx.iter().zip(&sy).map(|(a, b)| a * b).collect();
        let pmf = (0..self.pmf.len())
            .map(|k| (joint[k] - joint[k + 1]).max(0.0))
            .collect();
        Ok(Self { pmf })
    }

    /// Pairs the links up (an odd leftover is dropped) and keeps each pair's
    /// output with probability `success_prob`.
    pub fn distill_thin(&self, success_prob: f64) -> Result<Self, LinkStatsError> {
        if !(0.0..=1.0).contains(&success_prob) {
            return Err(LinkStatsError::InvalidProbability {
                name: "success_prob",
                value: success_prob,
            });
        }
        let mut out = vec![0.0; self.pmf.len()];
        // counts 2j and 2j+1 both feed Binomial(j, s)
        for j in 0..=(self.capacity() / 2) {
            let weight = self.prob(2 * j) + self.prob(2 * j + 1);
            if weight == 0.0 {
                continue;
            }
            let kernel = binomial_pmf(j, success_prob, j);
            for (k, q) in kernel.iter().enumerate() {
                out[k] += weight * q;
            }
        }
        Ok(Self { pmf: out })
    }
}

/// Binomial(n, p) pmf padded with zeros up to `capacity`.
fn binomial_pmf(n: usize, p: f64, capacity: usize) -> Vec<f64> {
    let mut pmf = vec![0.0; capacity + 1];
    if p <= 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    if p >= 1.0 {
        pmf[n] = 1.0;
        return pmf;
    }
    let q = 1.0 - p;
    let odds = p / q;
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as usize;
    pmf[mode] = 1.0;
    for k in mode..n {
        pmf[k + 1] = pmf[k] * ((n - k) as f64 / (k + 1) as f64) * odds;
        if pmf[k + 1] == 0.0 {
            break;
        }
    }
    for k in (1..=mode).rev() {
        pmf[k - 1] = pmf[k] * (k as f64 / (n - k + 1) as f64) / odds;
        if pmf[k - 1] == 0.0 {
            break;
        }
    }
    let sum: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|x| *x /= sum);
    pmf
}
