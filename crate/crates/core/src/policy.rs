//! Local-deterministic distillation rules. Both decide at most one DEJMPS
//! step per level from the precomputed stage quantities only.

use crate::linkstats::LinkCountDistribution;
use crate::params::ChainParams;
use crate::protocol::compute_skr;
use crate::states::{dejmps_step, BellDiagonalState};

/// One step iff the average fidelity is below `threshold` and budget remains.
pub fn decide_fth(state: &BellDiagonalState, threshold: f64, remaining_budget: u32) -> u32 {
    u32::from(remaining_budget > 0 && state.fidelity() < threshold)
}

/// One step iff distilling now strictly raises the stage secret key rate.
pub fn decide_skr_rule(
    links: &LinkCountDistribution,
    state: &BellDiagonalState,
    params: &ChainParams,
    remaining_budget: u32,
) -> u32 {
    if remaining_budget == 0 {
        return 0;
    }
    let m = params.multiplexing;
    let current = compute_skr(links, state, m);
    let Ok(out) = dejmps_step(state, &params.noise) else {
        return 0;
    };
    let Ok(thinned) = links.distill_thin(out.success_prob) else {
        return 0;
    };
    u32::from(compute_skr(&thinned, &out.state, m) > current)
}
