use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linkstats::{self, DEFAULT_ATTENUATION_LENGTH_M};
use crate::states::NoiseParams;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{field}: {message}")]
pub struct ParamsError {
    pub field: &'static str,
    pub message: String,
}

impl ParamsError {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self {
            field,
            message: message.into(),
        }
    }
}

fn default_attenuation() -> f64 {
    DEFAULT_ATTENUATION_LENGTH_M
}

/// One equidistant repeater chain configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ChainParams {
    /// Number of segments `N`, a power of two.
    pub segments: u32,
    /// Multiplexed link attempts per segment `M`, a power of two.
    pub multiplexing: u32,
    /// Bell-state-analyzer coupling efficiency.
    pub coupling_eff: f64,
    /// End-to-end distance in meters.
    pub total_distance_m: f64,
    #[serde(default = "default_attenuation")]
    pub attenuation_length_m: f64,
    pub noise: NoiseParams,
}

impl ChainParams {
    pub fn new(
        segments: u32,
        multiplexing: u32,
        coupling_eff: f64,
        gate_error: f64,
        total_distance_m: f64,
    ) -> Self {
        Self {
            segments,
            multiplexing,
            coupling_eff,
            total_distance_m,
            attenuation_length_m: DEFAULT_ATTENUATION_LENGTH_M,
            noise: NoiseParams::with_gate_error(gate_error),
        }
    }

    pub fn with_noise(mut self, noise: NoiseParams) -> Self {
        self.noise = noise;
        self
    }

    pub fn gate_error(&self) -> f64 {
        self.noise.gate_error
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.segments < 2 || !self.segments.is_power_of_two() {
            return Err(ParamsError::new(
                "segments",
                format!("must be a power of two >= 2, got {}", self.segments),
            ));
        }
        if self.multiplexing < 2 || !self.multiplexing.is_power_of_two() {
            return Err(ParamsError::new(
                "multiplexing",
                format!("must be a power of two >= 2, got {}", self.multiplexing),
            ));
        }
        if !(0.0..=1.0).contains(&self.coupling_eff) {
            return Err(ParamsError::new(
                "coupling_eff",
                format!("must be in [0, 1], got {}", self.coupling_eff),
            ));
        }
        if !(self.total_distance_m >= 0.0) || !self.total_distance_m.is_finite() {
            return Err(ParamsError::new(
                "total_distance_m",
                format!("must be finite and non-negative, got {}", self.total_distance_m),
            ));
        }
        if !(self.attenuation_length_m > 0.0) {
            return Err(ParamsError::new(
                "attenuation_length_m",
                format!("must be positive, got {}", self.attenuation_length_m),
            ));
        }
        self.noise.validate().map_err(|m| ParamsError::new("noise", m))?;
        if self.noise.gate_error >= 0.4 {
            return Err(ParamsError::new(
                "gate_error",
                format!(
                    "initial fidelity 1 - 1.25*{} must exceed 1/2",
                    self.noise.gate_error
                ),
            ));
        }
        Ok(())
    }

    /// Number of swap levels, `log2 N`.
    pub fn levels(&self) -> usize {
        self.segments.trailing_zeros() as usize
    }

    /// Distillation budget, `log2 M`.
    pub fn budget(&self) -> u32 {
        self.multiplexing.trailing_zeros()
    }

    pub fn segment_length_m(&self) -> f64 {
        self.total_distance_m / self.segments as f64
    }

    pub fn link_success_probability(&self) -> f64 {
        linkstats::link_success_probability(
            self.coupling_eff,
            self.segment_length_m(),
            self.attenuation_length_m,
        )
        .expect("validated parameters")
    }

    /// Transmissivity of the whole fiber, `exp(-L_tot / L_att)`.
    pub fn end_to_end_transmissivity(&self) -> f64 {
        (-self.total_distance_m / self.attenuation_length_m).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let p = ChainParams::new(8, 512, 0.5, 1e-3, 80_000.0);
        p.validate().unwrap();
        assert_eq!(p.levels(), 3);
        assert_eq!(p.budget(), 9);
        assert_eq!(p.segment_length_m(), 10_000.0);
        let expected = 0.5 * 0.25 * (-0.5f64).exp();
        assert!((p.link_success_probability() - expected).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_fields() {
        let base = ChainParams::new(8, 512, 0.5, 1e-3, 1e4);
        let cases = [
            (ChainParams { segments: 6, ..base }, "segments"),
            (ChainParams { segments: 1, ..base }, "segments"),
            (ChainParams { multiplexing: 500, ..base }, "multiplexing"),
            (ChainParams { coupling_eff: 1.5, ..base }, "coupling_eff"),
            (ChainParams { total_distance_m: -1.0, ..base }, "total_distance_m"),
            (base.with_noise(NoiseParams::with_gate_error(0.4)), "gate_error"),
        ];
        for (params, field) in cases {
            assert_eq!(params.validate().unwrap_err().field, field);
        }
    }
}
