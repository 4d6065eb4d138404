//! Analytic Bell-diagonal maps versus explicit 4-qubit density-matrix
//! circuits.

#[path = "support/density.rs"]
mod density;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repeater_core::states::{dejmps_step, swap_states, BellDiagonalState, NoiseParams};

fn max_diff(a: [f64; 4], b: [f64; 4]) -> f64 {
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn dejmps_matches_circuit_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD3_1A);
    let mut next = || rng.random::<f64>();
    let noise = NoiseParams::default();
    for _ in 0..100 {
        let coeffs = density::random_coeffs(&mut next);
        let state = BellDiagonalState::new(coeffs).unwrap();
        let analytic = dejmps_step(&state, &noise).unwrap();
        let (oracle, success, coherence) = density::dejmps_circuit(coeffs, coeffs);
        assert!(
            max_diff(analytic.state.coeffs(), oracle) < 1e-12,
            "{coeffs:?}: {:?} vs {oracle:?}",
            analytic.state.coeffs()
        );
        assert!((analytic.success_prob - success).abs() < 1e-12);
        assert!(coherence < 1e-12);
    }
}

#[test]
fn dejmps_werner_examples_match_circuit() {
    let werner = BellDiagonalState::werner(0.9).unwrap();
    for eps in [0.0, 0.001] {
        let noise = NoiseParams::with_gate_error(eps);
        let noisy = werner.depolarize(eps).unwrap().coeffs();
        let (oracle, success, _) = density::dejmps_circuit(noisy, noisy);
        let analytic = dejmps_step(&werner, &noise).unwrap();
        assert!(max_diff(analytic.state.coeffs(), oracle) < 1e-12);
        assert!((analytic.success_prob - success).abs() < 1e-12);
    }
}

#[test]
fn swap_matches_bell_measurement_circuit() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5_A4B);
    let mut next = || rng.random::<f64>();
    let noise = NoiseParams::default();
    for _ in 0..100 {
        let left = density::random_coeffs(&mut next);
        let right = density::random_coeffs(&mut next);
        let analytic = swap_states(
            &BellDiagonalState::new(left).unwrap(),
            &BellDiagonalState::new(right).unwrap(),
            &noise,
        );
        let oracle = density::swap_circuit(left, right);
        assert!(max_diff(analytic.coeffs(), oracle) < 1e-12, "{left:?} {right:?}");
    }
    let w = BellDiagonalState::werner(0.9).unwrap();
    let oracle = density::swap_circuit(w.coeffs(), w.coeffs());
    assert!(max_diff(swap_states(&w, &w, &noise).coeffs(), oracle) < 1e-12);
}
