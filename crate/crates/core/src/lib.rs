//! Simulation and schedule search for entanglement distillation in
//! multiplexed, equidistant quantum-repeater chains.

pub mod analysis;
pub mod api;
pub mod export;
pub mod linkstats;
pub mod optimizer;
pub mod params;
pub mod policy;
pub mod protocol;
pub mod report;
pub mod schemas;
pub mod states;
pub mod store;
pub mod sweep;

pub use linkstats::{link_success_probability, LinkCountDistribution};
pub use optimizer::{search_schedules, SearchConfig, SearchResult};
pub use params::{ChainParams, ParamsError};
pub use protocol::{
    compute_skr, initial_link_state, run_protocol, PolicyKind, ProtocolError, ProtocolRun,
    ScheduleVector, StageTrace,
};
pub use report::RunReport;
pub use states::{bbpssw_fidelity_update, dejmps_step, swap_states, BellDiagonalState, NoiseParams};
