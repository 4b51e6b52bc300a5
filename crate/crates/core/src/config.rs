//! TOML run configuration.
//!
//! Keys follow the model's symbol names (`m`, `d`, `sigma`, `vartheta`,
//! `gamma_forget`, `num_all`, `fragments`). Unknown keys are rejected so
//! typos surface as validation errors.

use serde::{Deserialize, Serialize};

use crate::affect::{EsefParams, RateWeights};
use crate::analysis::{BandSpec, DEFAULT_P_ABSTAIN};
use crate::emotion::MutationParams;
use crate::engine::{FragmentSpec, GraphSpec, SimConfig};
use crate::error::{Error, Result};
use crate::network::{HybridParams, InitConfig};

pub const TABLE1_TOML: &str = include_str!("../../../configs/table1.toml");
pub const SINGLE_INFO_TOML: &str = include_str!("../../../configs/single_info.toml");
pub const ELECTION_TOML: &str = include_str!("../../../configs/election.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "tenth")]
    pub neighbor: f64,
    #[serde(default = "tenth")]
    pub global: f64,
    #[serde(default = "yes")]
    pub normalize: bool,
}

impl Default for WeightsSection {
    fn default() -> Self {
        let w = RateWeights::default();
        WeightsSection {
            gamma: w.w_gamma,
            neighbor: w.w_neighbor,
            global: w.w_global,
            normalize: w.normalize,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    #[serde(default = "half")]
    pub weight_mu: f64,
    #[serde(default = "weight_sigma")]
    pub weight_sigma: f64,
    #[serde(default = "etv_mu")]
    pub etv_mu: f64,
    #[serde(default = "etv_sigma")]
    pub etv_sigma: f64,
}

impl Default for InitSection {
    fn default() -> Self {
        let d = InitConfig::default();
        InitSection {
            weight_mu: d.weight_mu,
            weight_sigma: d.weight_sigma,
            etv_mu: d.etv_mu,
            etv_sigma: d.etv_sigma,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanFieldSection {
    #[serde(default = "default_i0")]
    pub i0: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Defaults to the schedule length.
    #[serde(default)]
    pub horizon: Option<f64>,
}

impl Default for MeanFieldSection {
    fn default() -> Self {
        MeanFieldSection {
            i0: default_i0(),
            dt: default_dt(),
            horizon: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoteSection {
    #[serde(default = "default_p_abstain")]
    pub p_abstain: f64,
}

impl Default for VoteSection {
    fn default() -> Self {
        VoteSection {
            p_abstain: DEFAULT_P_ABSTAIN,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    pub num_all: usize,
    /// Optional cross-check: must equal the sum of fragment durations.
    #[serde(default)]
    pub rounds: Option<u32>,
    pub m: u32,
    pub d: f64,
    pub sigma: f64,
    pub vartheta: f64,
    pub gamma_forget: f64,
    #[serde(default = "default_mutation_rate")]
    pub mutation_rate: f64,
    pub fragments: Vec<FragmentSpec>,
    #[serde(default = "default_graph")]
    pub graph: GraphSpec,
    #[serde(default)]
    pub weights: WeightsSection,
    #[serde(default)]
    pub init: InitSection,
    #[serde(default)]
    pub meanfield: MeanFieldSection,
    #[serde(default)]
    pub vote: VoteSection,
    /// ETV band edges for the band-count export.
    #[serde(default = "default_bands")]
    pub bands: Vec<u32>,
}

fn one() -> f64 {
    1.0
}
fn tenth() -> f64 {
    0.1
}
fn yes() -> bool {
    true
}
fn half() -> f64 {
    InitConfig::default().weight_mu
}
fn weight_sigma() -> f64 {
    InitConfig::default().weight_sigma
}
fn etv_mu() -> f64 {
    InitConfig::default().etv_mu
}
fn etv_sigma() -> f64 {
    InitConfig::default().etv_sigma
}
fn default_i0() -> f64 {
    0.01
}
fn default_dt() -> f64 {
    0.01
}
fn default_p_abstain() -> f64 {
    DEFAULT_P_ABSTAIN
}
fn default_mutation_rate() -> f64 {
    MutationParams::default().rate
}
fn default_bands() -> Vec<u32> {
    BandSpec::five_band().edges().to_vec()
}

/// Composite topology used by the presets.
pub fn default_graph() -> GraphSpec {
    GraphSpec::Hybrid(HybridParams {
        ba_fraction: 0.5,
        m_attach: 3,
        k: 6,
        p_rewire: 0.1,
        bridge_edges: 50,
    })
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            Error::config(backticked(&msg).unwrap_or("<document>"), msg.clone())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn table1() -> Self {
        Self::from_toml_str(TABLE1_TOML).expect("shipped preset is valid")
    }

    pub fn single_info() -> Self {
        Self::from_toml_str(SINGLE_INFO_TOML).expect("shipped preset is valid")
    }

    pub fn election() -> Self {
        Self::from_toml_str(ELECTION_TOML).expect("shipped preset is valid")
    }

    pub fn validate(&self) -> Result<()> {
        self.sim_config().validate()?;
        let total: u64 = self.fragments.iter().map(|f| f.duration as u64).sum();
        if total > u32::MAX as u64 {
            return Err(Error::config("fragments", "total duration overflows"));
        }
        if let Some(r) = self.rounds {
            if r as u64 != total {
                return Err(Error::config(
                    "rounds",
                    format!("is {r} but fragment durations sum to {total}"),
                ));
            }
        }
        self.band_spec()?;
        if !(self.meanfield.i0 > 0.0 && self.meanfield.i0 < 1.0) {
            return Err(Error::config("meanfield.i0", "must lie strictly between 0 and 1"));
        }
        if !(self.meanfield.dt > 0.0 && self.meanfield.dt.is_finite()) {
            return Err(Error::config("meanfield.dt", "must be positive"));
        }
        if let Some(h) = self.meanfield.horizon {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(Error::config("meanfield.horizon", "must be non-negative"));
            }
        }
        if !(0.0..=1.0).contains(&self.vote.p_abstain) {
            return Err(Error::config("vote.p_abstain", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn band_spec(&self) -> Result<BandSpec> {
        BandSpec::new(self.bands.clone(), self.m).map_err(|e| Error::config("bands", e.to_string()))
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            num_nodes: self.num_all,
            graph: self.graph.clone(),
            fragments: self.fragments.clone(),
            esef: EsefParams {
                d: self.d,
                sigma: self.sigma,
                theta_decay: self.vartheta,
                m: self.m,
            },
            weights: RateWeights {
                w_gamma: self.weights.gamma,
                w_neighbor: self.weights.neighbor,
                w_global: self.weights.global,
                normalize: self.weights.normalize,
            },
            mutation: MutationParams {
                rate: self.mutation_rate,
            },
            gamma_forget: self.gamma_forget,
            init: InitConfig {
                weight_mu: self.init.weight_mu,
                weight_sigma: self.init.weight_sigma,
                etv_mu: self.init.etv_mu,
                etv_sigma: self.init.etv_sigma,
                m: self.m,
            },
            seed: self.seed,
        }
    }

    pub fn total_rounds(&self) -> u32 {
        self.fragments.iter().map(|f| f.duration).sum()
    }

    /// Canonical JSON of every field except the seed. Comments, key order
    /// and spelled-out defaults do not affect it.
    pub fn canonical_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("seed");
        }
        value.to_string()
    }
}

fn backticked(msg: &str) -> Option<&str> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(&msg[start..start + len])
}
