//! Agent-based simulation of emotion propagation on weighted networks.
//!
//! Nodes and information fragments carry fixed-length binary emotion codes.
//! Fragments spread through an ignorant/spreader process whose per-node
//! rate mixes emotional similarity with neighbor and network-wide coupling;
//! receptions copy code segments from the fragment (crossover) and codes
//! drift through random-prefix mutation.

pub mod affect;
pub mod analysis;
pub mod config;
pub mod emotion;
pub mod engine;
pub mod error;
pub mod meanfield;
pub mod network;
pub mod rng;

pub use affect::{
    active_fragment, esef, global_coupling, neighbor_coupling, spread_rate, EsefParams, FragmentSchedule, InfoFragment,
    RateWeights,
};
pub use config::Config;
pub use emotion::{code_with_etv, crossover, etv, mutate, EmotionCode, MutationParams};
pub use engine::{
    run, seed_initial, step, AgentState, Compartment, FragmentSpec, GraphSpec, Outcome, RoundRecord, SimConfig,
    Simulation, SimulationTrace,
};
pub use error::{Error, Result};
pub use network::{HybridParams, InitConfig, WeightedGraph};
