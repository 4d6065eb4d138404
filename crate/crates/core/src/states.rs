//! Bell-diagonal state algebra.
//!
//! States are stored as the four Bell-basis weights in the order
//! (Φ⁺, Ψ⁻, Ψ⁺, Φ⁻). Every channel in this module maps Bell-diagonal states to
//! Bell-diagonal states, so the average link state of a repeater level is
//! always described by four numbers.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the normalization of a user-supplied state.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("Bell coefficients must be in [0, 1], got {0:?}")]
    OutOfRange([f64; 4]),
    #[error("Bell coefficients must sum to 1 (got sum {0})")]
    NotNormalized(f64),
    #[error("fidelity {0} is outside [0, 1]")]
    InvalidFidelity(f64),
    #[error("probability {name} = {value} is outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("distillation success probability is zero")]
    Degenerate,
}

/// Index of each Bell state inside [`BellDiagonalState::coeffs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellIndex {
    PhiPlus = 0,
    PsiMinus = 1,
    PsiPlus = 2,
    PhiMinus = 3,
}

impl BellIndex {
    pub const ALL: [BellIndex; 4] = [
        BellIndex::PhiPlus,
        BellIndex::PsiMinus,
        BellIndex::PsiPlus,
        BellIndex::PhiMinus,
    ];

    /// Pauli error syndrome `(x, z)` relative to Φ⁺.
    pub fn syndrome(self) -> (u8, u8) {
        match self {
            BellIndex::PhiPlus => (0, 0),
            BellIndex::PsiPlus => (1, 0),
            BellIndex::PhiMinus => (0, 1),
            BellIndex::PsiMinus => (1, 1),
        }
    }

    pub fn from_syndrome(x: u8, z: u8) -> Self {
        match (x & 1, z & 1) {
            (0, 0) => BellIndex::PhiPlus,
            (1, 0) => BellIndex::PsiPlus,
            (0, 1) => BellIndex::PhiMinus,
            _ => BellIndex::PsiMinus,
        }
    }
}

/// Average state of an EPR pair, diagonal in the Bell basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BellDiagonalState {
    coeffs: [f64; 4],
}

impl TryFrom<[f64; 4]> for BellDiagonalState {
    type Error = StateError;

    fn try_from(coeffs: [f64; 4]) -> Result<Self, Self::Error> {
        Self::new(coeffs)
    }
}

impl From<BellDiagonalState> for [f64; 4] {
    fn from(state: BellDiagonalState) -> Self {
        state.coeffs
    }
}

impl BellDiagonalState {
    pub const PERFECT: BellDiagonalState = BellDiagonalState {
        coeffs: [1.0, 0.0, 0.0, 0.0],
    };

    pub const MAXIMALLY_MIXED: BellDiagonalState = BellDiagonalState {
        coeffs: [0.25, 0.25, 0.25, 0.25],
    };

    pub fn new(coeffs: [f64; 4]) -> Result<Self, StateError> {
        if coeffs.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(StateError::OutOfRange(coeffs));
        }
        let sum: f64 = coeffs.iter().sum();
        if (sum - 1.0).abs() > NORM_TOLERANCE {
            return Err(StateError::NotNormalized(sum));
        }
        Ok(Self { coeffs })
    }

    /// Werner state `(F, (1-F)/3, (1-F)/3, (1-F)/3)`.
    pub fn werner(fidelity: f64) -> Result<Self, StateError> {
        if !(0.0..=1.0).contains(&fidelity) {
            return Err(StateError::InvalidFidelity(fidelity));
        }
        let e = (1.0 - fidelity) / 3.0;
        Ok(Self {
            coeffs: [fidelity, e, e, e],
        })
    }

    /// The state with all weight on a single Bell state.
    pub fn pure(index: BellIndex) -> Self {
        let mut coeffs = [0.0; 4];
        coeffs[index as usize] = 1.0;
        Self { coeffs }
    }

    pub fn coeffs(&self) -> [f64; 4] {
        self.coeffs
    }

    pub fn coeff(&self, index: BellIndex) -> f64 {
        self.coeffs[index as usize]
    }

    /// Overlap with Φ⁺.
    pub fn fidelity(&self) -> f64 {
        self.coeffs[0]
    }

    /// Probability of a bit flip between the two halves (Z-basis QBER).
    pub fn bit_error(&self) -> f64 {
        self.coeffs[BellIndex::PsiMinus as usize] + self.coeffs[BellIndex::PsiPlus as usize]
    }

    /// Probability of a phase flip between the two halves (X-basis QBER).
    pub fn phase_error(&self) -> f64 {
        self.coeffs[BellIndex::PsiMinus as usize] + self.coeffs[BellIndex::PhiMinus as usize]
    }

    /// Mixes the state with the maximally mixed state.
    pub fn depolarize(&self, weight: f64) -> Result<Self, StateError> {
        check_probability("weight", weight)?;
        Ok(self.depolarized(weight))
    }

    pub(crate) fn depolarized(&self, weight: f64) -> Self {
        let keep = 1.0 - weight;
        let mix = weight * 0.25;
        Self {
            coeffs: self.coeffs.map(|c| keep * c + mix),
        }
    }

    /// Applies a phase flip with probability `lambda`, exchanging Φ⁺↔Φ⁻ and
    /// Ψ⁻↔Ψ⁺ weight.
    pub fn dephase_with(&self, lambda: f64) -> Result<Self, StateError> {
        check_probability("lambda", lambda)?;
        Ok(self.dephased(lambda))
    }

    pub(crate) fn dephased(&self, lambda: f64) -> Self {
        let [a, b, c, d] = self.coeffs;
        let keep = 1.0 - lambda;
        Self {
            coeffs: [
                keep * a + lambda * d,
                keep * b + lambda * c,
                keep * c + lambda * b,
                keep * d + lambda * a,
            ],
        }
    }

    /// Memory decoherence while the pair waits for a classical signal to
    /// travel `wait_distance` meters.
    pub fn dephase(&self, wait_distance: f64, noise: &NoiseParams) -> Self {
        self.dephased(noise.dephasing_weight(wait_distance))
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<(), StateError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(StateError::InvalidProbability { name, value })
    }
}

/// Hardware noise constants shared by every protocol level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct NoiseParams {
    /// Depolarizing probability per two-qubit operation.
    pub gate_error: f64,
    /// Memory dephasing time constant in seconds.
    pub coherence_time_s: f64,
    /// Speed of classical signals in fiber, meters per second.
    pub signal_speed_m_per_s: f64,
}

pub const DEFAULT_COHERENCE_TIME_S: f64 = 1.0;
pub const DEFAULT_SIGNAL_SPEED_M_PER_S: f64 = 2.0e8;

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            gate_error: 0.0,
            coherence_time_s: DEFAULT_COHERENCE_TIME_S,
            signal_speed_m_per_s: DEFAULT_SIGNAL_SPEED_M_PER_S,
        }
    }
}

impl NoiseParams {
    pub fn with_gate_error(gate_error: f64) -> Self {
        Self {
            gate_error,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..1.0).contains(&self.gate_error) {
            return Err(format!("gate_error must be in [0, 1), got {}", self.gate_error));
        }
        if !(self.coherence_time_s > 0.0) {
            return Err(format!(
                "coherence_time_s must be positive, got {}",
                self.coherence_time_s
            ));
        }
        if !(self.signal_speed_m_per_s > 0.0) || !self.signal_speed_m_per_s.is_finite() {
            return Err(format!(
                "signal_speed_m_per_s must be positive and finite, got {}",
                self.signal_speed_m_per_s
            ));
        }
        Ok(())
    }

    /// Phase-flip probability `(1 - exp(-t/T)) / 2` after waiting for a signal
    /// to cross `wait_distance` meters.
    pub fn dephasing_weight(&self, wait_distance: f64) -> f64 {
        let t = wait_distance / self.signal_speed_m_per_s;
        -0.5 * (-t / self.coherence_time_s).exp_m1()
    }
}

/// Average BBPSSW output fidelity for two Werner pairs of fidelity `f`.
pub fn bbpssw_fidelity_update(f: f64) -> Result<f64, StateError> {
    if !(0.0..=1.0).contains(&f) {
        return Err(StateError::InvalidFidelity(f));
    }
    let e = (1.0 - f) / 3.0;
    let num = f * f + e * e;
    let den = f * f + 2.0 * f * e + 5.0 * e * e;
    Ok(num / den)
}

/// Result of one DEJMPS round on two identical pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistillOutcome {
    pub state: BellDiagonalState,
    pub success_prob: f64,
}

/// One DEJMPS round. Both inputs are copies of `state`; each copy is first
/// depolarized with the gate error, then the ideal recurrence map is applied.
pub fn dejmps_step(
    state: &BellDiagonalState,
    noise: &NoiseParams,
) -> Result<DistillOutcome, StateError> {
    let noisy = state.depolarized(noise.gate_error);
    let [a, b, c, d] = noisy.coeffs;
    let success_prob = (a + b) * (a + b) + (c + d) * (c + d);
    if !(success_prob > 0.0) {
        return Err(StateError::Degenerate);
    }
    let coeffs = [
        (a * a + b * b) / success_prob,
        2.0 * c * d / success_prob,
        (c * c + d * d) / success_prob,
        2.0 * a * b / success_prob,
    ];
    Ok(DistillOutcome {
        state: BellDiagonalState { coeffs },
        success_prob,
    })
}

/// Entanglement swapping of two adjacent pairs followed by gate noise on the
/// Bell-state measurement. Pauli errors of the two pairs compose by XOR of
/// their syndromes.
pub fn swap_states(
    left: &BellDiagonalState,
    right: &BellDiagonalState,
    noise: &NoiseParams,
) -> BellDiagonalState {
    let mut coeffs = [0.0; 4];
    for l in BellIndex::ALL {
        let (lx, lz) = l.syndrome();
        for r in BellIndex::ALL {
            let (rx, rz) = r.syndrome();
            let out = BellIndex::from_syndrome(lx ^ rx, lz ^ rz);
            coeffs[out as usize] += left.coeff(l) * right.coeff(r);
        }
    }
    BellDiagonalState { coeffs }.depolarized(noise.gate_error)
}
