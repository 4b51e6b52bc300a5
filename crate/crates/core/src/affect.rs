//! Emotional similarity, affective coupling, the dynamic spread rate, and
//! the segmented fragment timeline.

use serde::{Deserialize, Serialize};

use crate::emotion::EmotionCode;
use crate::error::{Error, Result};
use crate::network::WeightedGraph;

/// Parameters of the emotional similarity evaluation function (ESEF).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsefParams {
    /// Maximum scale.
    pub d: f64,
    /// Width divisor of the Gaussian kernel.
    pub sigma: f64,
    /// Linear decay per round within a fragment.
    pub theta_decay: f64,
    /// Code length.
    pub m: u32,
}

impl EsefParams {
    pub fn new(d: f64, sigma: f64, theta_decay: f64, m: u32) -> Result<Self> {
        let p = EsefParams {
            d,
            sigma,
            theta_decay,
            m,
        };
        p.validate()?;
        Ok(p)
    }

    /// The shipped defaults: d = 0.67, sigma = 15.7079, decay 0.05, m = 32.
    pub fn table1() -> Self {
        EsefParams {
            d: 0.67,
            sigma: 15.7079,
            theta_decay: 0.05,
            m: 32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::config("d", format!("must be positive, got {}", self.d)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("sigma", format!("must be positive, got {}", self.sigma)));
        }
        if !(self.theta_decay >= 0.0 && self.theta_decay.is_finite()) {
            return Err(Error::config(
                "vartheta",
                format!("must be non-negative, got {}", self.theta_decay),
            ));
        }
        if self.m == 0 || !self.m.is_multiple_of(2) {
            return Err(Error::config(
                "m",
                format!("must be a positive even integer, got {}", self.m),
            ));
        }
        Ok(())
    }
}

/// Emotional similarity between a node's ETV and the active fragment's ETV.
///
/// Gaussian in the ETV distance, scaled by `d`, decayed linearly with the
/// fragment-local round `t_local`, and damped by `exp(-|e_node - m/2|)` when
/// node and fragment sit on opposite sides of neutral. A fragment at exactly
/// `m/2` has no opposite side. Clamped below at zero.
pub fn esef(e_node: u32, e_info: u32, t_local: u32, params: &EsefParams) -> Result<f64> {
    let m = params.m;
    if e_node > m || e_info > m {
        return Err(Error::arg(format!(
            "ETVs must lie in [0, {m}], got node {e_node}, info {e_info}"
        )));
    }
    Ok(esef_unchecked(e_node, e_info, t_local, params))
}

pub(crate) fn esef_unchecked(e_node: u32, e_info: u32, t_local: u32, params: &EsefParams) -> f64 {
    let decay = 1.0 - params.theta_decay * t_local as f64;
    if decay <= 0.0 {
        return 0.0;
    }
    let half = (params.m / 2) as i64;
    let (node, info) = (e_node as i64, e_info as i64);
    let dist = (node - info) as f64;
    let base = params.d * (-(dist * dist) / params.sigma).exp() * decay;
    // integer exponents keep the e -> m - e reflection exact
    let penalty_exp = if info < half && node >= half {
        half - node
    } else if info > half && node <= half {
        node - half
    } else {
        0
    };
    let value = if penalty_exp == 0 {
        base
    } else {
        (penalty_exp as f64).exp() * base
    };
    value.max(0.0)
}

/// Neighbor affective coupling: weighted sum of neighbor ETVs over the
/// neighbor count. Isolated nodes get 0.
pub fn neighbor_coupling(node: usize, graph: &WeightedGraph, etvs: &[u32]) -> Result<f64> {
    if node >= graph.node_count() {
        return Err(Error::arg(format!(
            "node {node} not in graph of {} nodes",
            graph.node_count()
        )));
    }
    if etvs.len() != graph.node_count() {
        return Err(Error::arg(format!(
            "ETV array has {} entries for {} nodes",
            etvs.len(),
            graph.node_count()
        )));
    }
    Ok(neighbor_coupling_unchecked(node, graph, etvs))
}

pub(crate) fn neighbor_coupling_unchecked(node: usize, graph: &WeightedGraph, etvs: &[u32]) -> f64 {
    let nbrs = graph.neighbors(node);
    if nbrs.is_empty() {
        return 0.0;
    }
    let sum: f64 = nbrs.iter().map(|&(v, w)| etvs[v] as f64 * w).sum();
    sum / nbrs.len() as f64
}

/// Global affective coupling: the network-mean ETV.
pub fn global_coupling(etvs: &[u32]) -> Result<f64> {
    if etvs.is_empty() {
        return Err(Error::arg("global coupling of an empty network"));
    }
    let total: u64 = etvs.iter().map(|&e| e as u64).sum();
    Ok(total as f64 / etvs.len() as f64)
}

/// Mixing coefficients for the three spread-rate terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateWeights {
    pub w_gamma: f64,
    pub w_neighbor: f64,
    pub w_global: f64,
    /// Divide the two coupling terms by `m` before mixing. Turning this off
    /// with unit weights gives the raw `Γ + M + Φ` sum.
    pub normalize: bool,
}

impl RateWeights {
    pub fn new(w_gamma: f64, w_neighbor: f64, w_global: f64) -> Result<Self> {
        let w = RateWeights {
            w_gamma,
            w_neighbor,
            w_global,
            normalize: true,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn literal() -> Self {
        RateWeights {
            w_gamma: 1.0,
            w_neighbor: 1.0,
            w_global: 1.0,
            normalize: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("weights.gamma", self.w_gamma),
            ("weights.neighbor", self.w_neighbor),
            ("weights.global", self.w_global),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::config(name, format!("must be non-negative, got {w}")));
            }
        }
        Ok(())
    }
}

impl Default for RateWeights {
    fn default() -> Self {
        RateWeights {
            w_gamma: 1.0,
            w_neighbor: 0.1,
            w_global: 0.1,
            normalize: true,
        }
    }
}

/// Dynamic spread rate, clamped into `[0, 1]`.
pub fn spread_rate(gamma_esef: f64, neighbor: f64, phi: f64, weights: &RateWeights, m: u32) -> f64 {
    let scale = if weights.normalize { m as f64 } else { 1.0 };
    let beta =
        weights.w_gamma * gamma_esef + weights.w_neighbor * (neighbor / scale) + weights.w_global * (phi / scale);
    if beta.is_nan() {
        return 0.0;
    }
    beta.clamp(0.0, 1.0)
}

/// One information piece with its own emotion code and propagation period.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoFragment {
    code: EmotionCode,
    etv: u32,
    duration: u32,
}

impl InfoFragment {
    pub fn new(code: EmotionCode, duration: u32) -> Result<Self> {
        if duration == 0 {
            return Err(Error::arg("fragment duration must be at least one round"));
        }
        let etv = code.etv();
        Ok(InfoFragment { code, etv, duration })
    }

    pub fn code(&self) -> &EmotionCode {
        &self.code
    }

    pub fn etv(&self) -> u32 {
        self.etv
    }

    pub fn duration(&self) -> u32 {
        self.duration
    }
}

/// Fragments played back to back; fragment `n` owns a contiguous block of
/// rounds directly after fragment `n - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FragmentSchedule {
    fragments: Vec<InfoFragment>,
    starts: Vec<u32>,
    total: u32,
}

impl FragmentSchedule {
    pub fn new(fragments: Vec<InfoFragment>) -> Result<Self> {
        if fragments.is_empty() {
            return Err(Error::arg("fragment schedule must not be empty"));
        }
        let mut starts = Vec::with_capacity(fragments.len());
        let mut total: u32 = 0;
        for f in &fragments {
            starts.push(total);
            total = total
                .checked_add(f.duration)
                .ok_or_else(|| Error::arg("total rounds overflow"))?;
        }
        Ok(FragmentSchedule {
            fragments,
            starts,
            total,
        })
    }

    pub fn fragments(&self) -> &[InfoFragment] {
        &self.fragments
    }

    pub fn fragment(&self, n: usize) -> &InfoFragment {
        &self.fragments[n]
    }

    /// First global round of each fragment.
    pub fn starts(&self) -> &[u32] {
        &self.starts
    }

    pub fn total_rounds(&self) -> u32 {
        self.total
    }

    /// Zero-based index of the fragment active at `t_global`, and the round
    /// index within that fragment's period.
    pub fn active_fragment(&self, t_global: u32) -> Result<(usize, u32)> {
        if t_global >= self.total {
            return Err(Error::arg(format!(
                "round {t_global} is outside the schedule of {} rounds",
                self.total
            )));
        }
        let n = self.starts.partition_point(|&s| s <= t_global) - 1;
        Ok((n, t_global - self.starts[n]))
    }
}

pub fn active_fragment(t_global: u32, schedule: &FragmentSchedule) -> Result<(usize, u32)> {
    schedule.active_fragment(t_global)
}
