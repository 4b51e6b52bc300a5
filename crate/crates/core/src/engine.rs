//! Round-based ignorant/spreader simulation.
//!
//! Each round is computed from the round-start snapshot:
//!
//! 1. the active fragment and its local round are resolved;
//! 2. every node with spreader neighbors draws one reception per spreader
//!    neighbor (ascending id) against its spread rate β; the first success
//!    turns an ignorant node into a spreader and applies one crossover with
//!    the fragment code, using the node's ESEF as segment fraction;
//! 3. every node that was a spreader at round start forgets with
//!    probability γ (its code is left alone);
//! 4. every node's code is mutated.
//!
//! Node `v` in round `t` draws, in this order, from its own stream
//! [`crate::rng::node_stream`]: reception uniforms (with the crossover start
//! immediately after the first success), the forgetting uniform if it was a
//! spreader, then the mutation draws.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affect::{
    esef_unchecked, global_coupling, neighbor_coupling_unchecked, spread_rate, EsefParams, FragmentSchedule,
    InfoFragment, RateWeights,
};
use crate::emotion::{code_with_etv, crossover, mutate, EmotionCode, MutationParams};
use crate::error::{Error, Result};
use crate::network::{
    assign_weights, generate_ba, generate_hybrid, generate_ws, init_etvs, HybridParams, InitConfig, WeightedGraph,
};
use crate::rng::{init_stream, node_stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Compartment {
    Ignorant,
    Spreader,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentState {
    pub compartment: Compartment,
    pub code: EmotionCode,
    pub etv: u32,
}

impl AgentState {
    pub fn new(compartment: Compartment, code: EmotionCode) -> Self {
        let etv = code.etv();
        AgentState { compartment, code, etv }
    }

    pub fn is_spreader(&self) -> bool {
        self.compartment == Compartment::Spreader
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    Ba { m_attach: usize },
    Ws { k: usize, p_rewire: f64 },
    Hybrid(HybridParams),
}

impl GraphSpec {
    pub fn build<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<WeightedGraph> {
        match *self {
            GraphSpec::Ba { m_attach } => generate_ba(n, m_attach, rng),
            GraphSpec::Ws { k, p_rewire } => generate_ws(n, k, p_rewire, rng),
            GraphSpec::Hybrid(ref hp) => generate_hybrid(n, hp, rng),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentSpec {
    pub etv: u32,
    pub duration: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub num_nodes: usize,
    pub graph: GraphSpec,
    pub fragments: Vec<FragmentSpec>,
    pub esef: EsefParams,
    pub weights: RateWeights,
    pub mutation: MutationParams,
    pub gamma_forget: f64,
    pub init: InitConfig,
    pub seed: u64,
}

impl SimConfig {
    pub fn total_rounds(&self) -> u32 {
        self.fragments.iter().map(|f| f.duration).sum()
    }

    pub fn m(&self) -> u32 {
        self.esef.m
    }

    pub fn validate(&self) -> Result<()> {
        self.esef.validate()?;
        self.weights.validate()?;
        self.init.validate()?;
        if self.init.m != self.esef.m {
            return Err(Error::config("m", "code length differs between ESEF and init settings"));
        }
        if self.num_nodes < 2 {
            return Err(Error::config(
                "num_all",
                format!("need at least 2 nodes, got {}", self.num_nodes),
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma_forget) {
            return Err(Error::config(
                "gamma_forget",
                format!("must lie in [0, 1], got {}", self.gamma_forget),
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation.rate) {
            return Err(Error::config(
                "mutation_rate",
                format!("must lie in [0, 1], got {}", self.mutation.rate),
            ));
        }
        if self.fragments.is_empty() {
            return Err(Error::config("fragments", "at least one fragment is required"));
        }
        for (i, f) in self.fragments.iter().enumerate() {
            if f.etv > self.esef.m {
                return Err(Error::config(
                    format!("fragments[{i}].etv"),
                    format!("must lie in [0, {}], got {}", self.esef.m, f.etv),
                ));
            }
            if f.duration == 0 {
                return Err(Error::config(format!("fragments[{i}].duration"), "must be at least 1"));
            }
        }
        Ok(())
    }
}

/// Aggregate state after one round (or after seeding, for record 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: u32,
    /// Zero-based index of the fragment active during the round.
    pub fragment: usize,
    pub t_local: u32,
    pub ignorant: usize,
    pub spreaders: usize,
    pub phi: f64,
    /// Population-mean spread rate in effect during the round.
    pub beta_mean: f64,
    pub etvs: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub num_nodes: usize,
    pub m: u32,
    pub records: Vec<RoundRecord>,
}

impl SimulationTrace {
    pub fn phi_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.phi).collect()
    }

    /// Mean spread rate of each executed round, in round order.
    pub fn beta_series(&self) -> Vec<f64> {
        self.records.iter().skip(1).map(|r| r.beta_mean).collect()
    }

    pub fn final_etvs(&self) -> &[u32] {
        &self.records.last().expect("trace always holds the initial record").etvs
    }
}

/// Per-node ESEF and spread rates evaluated on one snapshot.
struct Rates {
    esef: Vec<f64>,
    beta: Vec<f64>,
}

impl Rates {
    fn mean_beta(&self) -> f64 {
        self.beta.iter().sum::<f64>() / self.beta.len() as f64
    }
}

fn evaluate_rates(graph: &WeightedGraph, etvs: &[u32], info_etv: u32, t_local: u32, cfg: &SimConfig) -> Result<Rates> {
    let phi = global_coupling(etvs)?;
    let m = cfg.m();
    let (esef, beta) = (0..graph.node_count())
        .map(|v| {
            let g = esef_unchecked(etvs[v], info_etv, t_local, &cfg.esef);
            let nb = neighbor_coupling_unchecked(v, graph, etvs);
            (g, spread_rate(g, nb, phi, &cfg.weights, m))
        })
        .unzip();
    Ok(Rates { esef, beta })
}

/// Marks `round(mean β · N)` uniformly chosen nodes as spreaders, where β
/// is each node's spread rate against the first fragment at round 0.
pub fn seed_initial<R: Rng + ?Sized>(
    graph: &WeightedGraph,
    codes: Vec<EmotionCode>,
    schedule: &FragmentSchedule,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Vec<AgentState>> {
    Ok(seed_with_rate(graph, codes, schedule, cfg, rng)?.0)
}

fn seed_with_rate<R: Rng + ?Sized>(
    graph: &WeightedGraph,
    codes: Vec<EmotionCode>,
    schedule: &FragmentSchedule,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<(Vec<AgentState>, f64)> {
    let n = graph.node_count();
    if codes.len() != n {
        return Err(Error::arg(format!("{} codes for {n} nodes", codes.len())));
    }
    let etvs: Vec<u32> = codes.iter().map(EmotionCode::etv).collect();
    let first = schedule.fragment(0);
    let rates = evaluate_rates(graph, &etvs, first.etv(), 0, cfg)?;
    let mean_beta = rates.mean_beta();
    let i0 = (mean_beta * n as f64).round() as usize;
    if i0 == 0 {
        return Err(Error::NoInitialSpreaders);
    }
    let mut states: Vec<AgentState> = codes
        .into_iter()
        .map(|c| AgentState::new(Compartment::Ignorant, c))
        .collect();
    for v in index::sample(rng, n, i0.min(n)) {
        states[v].compartment = Compartment::Spreader;
    }
    Ok((states, mean_beta))
}

fn record(t: u32, fragment: usize, t_local: u32, beta_mean: f64, states: &[AgentState]) -> RoundRecord {
    let etvs: Vec<u32> = states.iter().map(|s| s.etv).collect();
    let spreaders = states.iter().filter(|s| s.is_spreader()).count();
    RoundRecord {
        t,
        fragment,
        t_local,
        ignorant: states.len() - spreaders,
        spreaders,
        phi: global_coupling(&etvs).expect("non-empty population"),
        beta_mean,
        etvs,
    }
}

/// Advances the population by one synchronous round. The record's `t` is
/// `t_global + 1`.
pub fn step(
    states: &[AgentState],
    graph: &WeightedGraph,
    schedule: &FragmentSchedule,
    cfg: &SimConfig,
    t_global: u32,
) -> Result<(Vec<AgentState>, RoundRecord)> {
    if states.len() != graph.node_count() {
        return Err(Error::arg(format!(
            "{} agent states for {} nodes",
            states.len(),
            graph.node_count()
        )));
    }
    let (n_frag, t_local) = schedule.active_fragment(t_global)?;
    let info: &InfoFragment = schedule.fragment(n_frag);
    let etvs: Vec<u32> = states.iter().map(|s| s.etv).collect();
    let rates = evaluate_rates(graph, &etvs, info.etv(), t_local, cfg)?;

    let next: Vec<AgentState> = (0..states.len())
        .into_par_iter()
        .map(|v| {
            let mut rng = node_stream(cfg.seed, t_global, v);
            let start = &states[v];
            let beta = rates.beta[v];
            let mut code = start.code.clone();
            let mut received = false;
            for &(u, _) in graph.neighbors(v) {
                if !states[u].is_spreader() {
                    continue;
                }
                if rng.random::<f64>() < beta && !received {
                    received = true;
                    let gamma = rates.esef[v].min(1.0);
                    code = crossover(&code, info.code(), gamma, &mut rng)
                        .expect("node and fragment codes share the configured length");
                }
            }
            let mut compartment = if received {
                Compartment::Spreader
            } else {
                start.compartment
            };
            if start.is_spreader() && rng.random::<f64>() < cfg.gamma_forget {
                compartment = Compartment::Ignorant;
            }
            let code = mutate(&code, cfg.mutation, &mut rng);
            AgentState::new(compartment, code)
        })
        .collect();

    let rec = record(t_global + 1, n_frag, t_local, rates.mean_beta(), &next);
    Ok((next, rec))
}

/// A fully constructed run: graph, fragment codes and seeded agents.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub config: SimConfig,
    pub graph: WeightedGraph,
    pub schedule: FragmentSchedule,
    pub initial: Vec<AgentState>,
    initial_beta: f64,
}

/// A finished run.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub graph: WeightedGraph,
    pub schedule: FragmentSchedule,
    pub trace: SimulationTrace,
    pub final_states: Vec<AgentState>,
}

impl Simulation {
    /// Builds the topology, edge weights, initial codes, fragment codes and
    /// initial compartments from the construction stream, in that order.
    pub fn build(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let m = cfg.m() as usize;
        let mut rng = init_stream(cfg.seed);
        let topology = cfg.graph.build(cfg.num_nodes, &mut rng)?;
        let graph = assign_weights(&topology, &cfg.init, &mut rng)?;
        let etvs = init_etvs(cfg.num_nodes, &cfg.init, &mut rng)?;
        let codes = etvs
            .iter()
            .map(|&e| code_with_etv(e, m, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let fragments = cfg
            .fragments
            .iter()
            .map(|f| InfoFragment::new(code_with_etv(f.etv, m, &mut rng)?, f.duration))
            .collect::<Result<Vec<_>>>()?;
        let schedule = FragmentSchedule::new(fragments)?;
        let (initial, initial_beta) = seed_with_rate(&graph, codes, &schedule, cfg, &mut rng)?;
        Ok(Simulation {
            config: cfg.clone(),
            graph,
            schedule,
            initial,
            initial_beta,
        })
    }

    pub fn initial_record(&self) -> RoundRecord {
        record(0, 0, 0, self.initial_beta, &self.initial)
    }

    pub fn run(self) -> Result<Outcome> {
        let total = self.schedule.total_rounds();
        self.run_rounds(total)
    }

    /// Runs only the first `rounds` rounds of the schedule.
    pub fn run_rounds(self, rounds: u32) -> Result<Outcome> {
        let total = self.schedule.total_rounds();
        if rounds > total {
            return Err(Error::arg(format!("{rounds} rounds requested, schedule has {total}")));
        }
        let mut records = Vec::with_capacity(total as usize + 1);
        records.push(self.initial_record());
        let mut states = self.initial;
        for t in 0..rounds {
            let (next, rec) = step(&states, &self.graph, &self.schedule, &self.config, t)?;
            states = next;
            records.push(rec);
        }
        Ok(Outcome {
            graph: self.graph,
            schedule: self.schedule,
            trace: SimulationTrace {
                num_nodes: self.config.num_nodes,
                m: self.config.m(),
                records,
            },
            final_states: states,
        })
    }
}

pub fn run(cfg: &SimConfig) -> Result<SimulationTrace> {
    Ok(Simulation::build(cfg)?.run()?.trace)
}
