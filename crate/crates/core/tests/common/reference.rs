//! Unoptimized reference simulator written directly from the model's
//! pseudocode: codes are `Vec<u8>` edited with remove/insert, couplings are
//! recomputed from the raw edge list, and every branch of the similarity
//! function is spelled out. Shares nothing with the library except the
//! documented per-node stream derivation, which it re-derives itself.

use affectsim::WeightedGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ROUND_DOMAIN: u64 = 0x9e6c_63d0_676a_9a99;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream(seed: u64, round: u32, node: usize) -> ChaCha8Rng {
    let a = splitmix(seed ^ ROUND_DOMAIN);
    let b = splitmix(a ^ round as u64);
    ChaCha8Rng::seed_from_u64(splitmix(b ^ node as u64))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefNode {
    pub spreader: bool,
    pub code: Vec<u8>,
}

pub struct RefParams {
    pub m: usize,
    pub d: f64,
    pub sigma: f64,
    pub vartheta: f64,
    pub w_gamma: f64,
    pub w_neighbor: f64,
    pub w_global: f64,
    pub gamma_forget: f64,
    pub mutation_rate: f64,
    pub seed: u64,
}

pub struct RefFragment {
    pub code: Vec<u8>,
    pub duration: u32,
}

pub fn sum1(code: &[u8]) -> u32 {
    code.iter().map(|&b| b as u32).sum()
}

/// Four-branch similarity with the Gaussian sign, lower clamp at zero.
#[allow(clippy::if_same_then_else)]
pub fn ref_esef(e_i: u32, e_info: u32, t: u32, p: &RefParams) -> f64 {
    let half = (p.m / 2) as f64;
    let ei = e_i as f64;
    let einfo = e_info as f64;
    let gauss = p.d * (-(ei - einfo) * (ei - einfo) / p.sigma).exp() * (1.0 - p.vartheta * t as f64);
    let v = if einfo < half {
        if ei < half {
            gauss
        } else {
            (half - ei).exp() * gauss
        }
    } else if einfo == half {
        gauss
    } else if ei > half {
        gauss
    } else {
        (ei - half).exp() * gauss
    };
    if v < 0.0 {
        0.0
    } else {
        v
    }
}

fn neighbors_of(edges: &[(usize, usize, f64)], i: usize) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for &(u, v, w) in edges {
        if u == i {
            out.push((v, w));
        } else if v == i {
            out.push((u, w));
        }
    }
    out.sort_by_key(|&(x, _)| x);
    out
}

pub fn ref_mutation(code: &mut Vec<u8>, sigma: f64, rng: &mut ChaCha8Rng) {
    let m = code.len();
    let len = rng.random_range(0..=m as u32) as usize;
    let mut mut_list = Vec::new();
    for j in 0..len {
        if rng.random::<f64>() < sigma {
            mut_list.push(j);
        }
    }
    for j in mut_list {
        if code[j] == 1 {
            code.remove(j);
            code.insert(j, 0);
        } else {
            code.remove(j);
            code.insert(j, 1);
        }
    }
}

pub fn ref_crossover(code: &mut Vec<u8>, info: &[u8], gamma: f64, rng: &mut ChaCha8Rng) {
    let m = code.len();
    let len = (gamma * m as f64).floor() as usize;
    let start = rng.random_range(0..=(m - len) as u32) as usize;
    let end = start + len;
    if code[start..end] != info[start..end] {
        let copyinfo: Vec<u8> = info[start..end].to_vec();
        for _ in start..end {
            code.remove(start);
        }
        for (j, &b) in copyinfo.iter().enumerate() {
            code.insert(start + j, b);
        }
    }
}

/// Advances `nodes` by one round of global time `t`.
pub fn ref_round(
    nodes: &[RefNode],
    graph: &WeightedGraph,
    fragments: &[RefFragment],
    p: &RefParams,
    t: u32,
) -> Vec<RefNode> {
    let edges: Vec<(usize, usize, f64)> = graph.edges().collect();
    // locate the active fragment by walking the cumulative durations
    let mut begin = 0;
    let mut active = None;
    for (n, f) in fragments.iter().enumerate() {
        if t >= begin && t < begin + f.duration {
            active = Some((n, t - begin));
            break;
        }
        begin += f.duration;
    }
    let (n_frag, t_local) = active.expect("round inside schedule");
    let info = &fragments[n_frag].code;
    let e_info = sum1(info);

    let num_all = nodes.len();
    let mut total = 0u32;
    for node in nodes {
        total += sum1(&node.code);
    }
    let phi = total as f64 / num_all as f64;

    let mut next = Vec::with_capacity(num_all);
    for i in 0..num_all {
        let mut rng = stream(p.seed, t, i);
        let e_i = sum1(&nodes[i].code);
        let ner = neighbors_of(&edges, i);
        let m_coupling = if ner.is_empty() {
            0.0
        } else {
            let mut s = 0.0;
            for &(j, w) in &ner {
                s += sum1(&nodes[j].code) as f64 * w;
            }
            s / ner.len() as f64
        };
        let gamma = ref_esef(e_i, e_info, t_local, p);
        let raw = p.w_gamma * gamma + p.w_neighbor * (m_coupling / p.m as f64) + p.w_global * (phi / p.m as f64);
        let beta = raw.clamp(0.0, 1.0);

        let mut code = nodes[i].code.clone();
        let mut infected = false;
        for &(j, _) in &ner {
            if nodes[j].spreader {
                let r: f64 = rng.random();
                if r < beta && !infected {
                    infected = true;
                    ref_crossover(&mut code, info, gamma.min(1.0), &mut rng);
                }
            }
        }
        let mut spreader = nodes[i].spreader || infected;
        if nodes[i].spreader {
            let r: f64 = rng.random();
            if r < p.gamma_forget {
                spreader = false;
            }
        }
        ref_mutation(&mut code, p.mutation_rate, &mut rng);
        next.push(RefNode { spreader, code });
    }
    next
}
