//! Weighted undirected graphs, the three topology generators, edge weights,
//! initial ETV draws, and the edge-list text format.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on node ids accepted from edge-list input.
pub const MAX_NODES: usize = 1 << 24;

/// Undirected graph with per-edge weights. Adjacency lists are kept sorted
/// by neighbor id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedGraph {
    adj: Vec<Vec<(usize, f64)>>,
    edges: usize,
}

impl WeightedGraph {
    pub fn with_nodes(n: usize) -> Self {
        WeightedGraph {
            adj: vec![Vec::new(); n],
            edges: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weight(u, v).is_some()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        let row = self.adj.get(u)?;
        row.binary_search_by_key(&v, |&(x, _)| x).ok().map(|i| row[i].1)
    }

    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) -> Result<()> {
        let n = self.node_count();
        if u >= n || v >= n {
            return Err(Error::arg(format!("edge ({u}, {v}) outside graph of {n} nodes")));
        }
        if u == v {
            return Err(Error::arg(format!("self-loop at node {u}")));
        }
        let pos_u = match self.adj[u].binary_search_by_key(&v, |&(x, _)| x) {
            Ok(_) => return Err(Error::arg(format!("duplicate edge ({u}, {v})"))),
            Err(p) => p,
        };
        self.adj[u].insert(pos_u, (v, w));
        let pos_v = self.adj[v].binary_search_by_key(&u, |&(x, _)| x).unwrap_err();
        self.adj[v].insert(pos_v, (u, w));
        self.edges += 1;
        Ok(())
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        let Ok(i) = self.adj[u].binary_search_by_key(&v, |&(x, _)| x) else {
            return false;
        };
        self.adj[u].remove(i);
        let j = self.adj[v].binary_search_by_key(&u, |&(x, _)| x).unwrap();
        self.adj[v].remove(j);
        self.edges -= 1;
        true
    }

    /// Edges as `(u, v, w)` with `u < v`, sorted by `(u, v)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().filter(move |&&(v, _)| v > u).map(move |&(v, w)| (u, v, w)))
    }

    fn set_weight(&mut self, u: usize, v: usize, w: f64) {
        let i = self.adj[u].binary_search_by_key(&v, |&(x, _)| x).unwrap();
        self.adj[u][i].1 = w;
        let j = self.adj[v].binary_search_by_key(&u, |&(x, _)| x).unwrap();
        self.adj[v][j].1 = w;
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    /// Mean local clustering coefficient; nodes of degree < 2 count as 0.
    pub fn average_clustering(&self) -> f64 {
        let n = self.node_count();
        if n == 0 {
            return 0.0;
        }
        let total: f64 = (0..n)
            .map(|u| {
                let nbrs = &self.adj[u];
                let k = nbrs.len();
                if k < 2 {
                    return 0.0;
                }
                let mut links = 0usize;
                for (a, &(x, _)) in nbrs.iter().enumerate() {
                    for &(y, _) in &nbrs[a + 1..] {
                        if self.has_edge(x, y) {
                            links += 1;
                        }
                    }
                }
                2.0 * links as f64 / (k * (k - 1)) as f64
            })
            .sum();
        total / n as f64
    }

    /// Copy with every node id shifted by `offset`, embedded in a graph of `n` nodes.
    fn embed(&self, offset: usize, into: &mut WeightedGraph) {
        for (u, v, w) in self.edges() {
            into.add_edge(u + offset, v + offset, w)
                .expect("embedding a valid graph into a disjoint id range");
        }
    }
}

/// Barabási–Albert preferential attachment.
///
/// Starts from a clique on `m_attach + 1` nodes; each later node attaches to
/// `m_attach` distinct existing nodes chosen with probability proportional
/// to degree. All edge weights are 1.0 until [`assign_weights`] is applied.
pub fn generate_ba<R: Rng + ?Sized>(n: usize, m_attach: usize, rng: &mut R) -> Result<WeightedGraph> {
    if m_attach < 1 || n <= m_attach {
        return Err(Error::arg(format!(
            "preferential attachment needs n > m_attach >= 1, got n={n}, m_attach={m_attach}"
        )));
    }
    let mut g = WeightedGraph::with_nodes(n);
    let n0 = m_attach + 1;
    // one entry per edge endpoint, so uniform picks are degree-proportional
    let mut ends: Vec<usize> = Vec::with_capacity(2 * (n0 * m_attach / 2 + m_attach * n));
    for u in 0..n0 {
        for v in u + 1..n0 {
            g.add_edge(u, v, 1.0)?;
            ends.push(u);
            ends.push(v);
        }
    }
    let mut targets = Vec::with_capacity(m_attach);
    for v in n0..n {
        targets.clear();
        while targets.len() < m_attach {
            let t = ends[rng.random_range(0..ends.len() as u32) as usize];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            g.add_edge(v, t, 1.0)?;
            ends.push(v);
            ends.push(t);
        }
    }
    Ok(g)
}

/// Watts–Strogatz ring lattice with random rewiring.
///
/// Each node links to its `k/2` successors on the ring; then, lap by lap,
/// each lattice edge `(u, u+j)` is rewired with probability `p_rewire` to a
/// uniformly chosen non-neighbor of `u`. The edge count stays `n*k/2`.
pub fn generate_ws<R: Rng + ?Sized>(n: usize, k: usize, p_rewire: f64, rng: &mut R) -> Result<WeightedGraph> {
    if k < 2 || !k.is_multiple_of(2) || n <= k {
        return Err(Error::arg(format!(
            "ring lattice needs even k >= 2 and n > k, got n={n}, k={k}"
        )));
    }
    if !(0.0..=1.0).contains(&p_rewire) {
        return Err(Error::arg(format!(
            "rewire probability must lie in [0, 1], got {p_rewire}"
        )));
    }
    let mut g = WeightedGraph::with_nodes(n);
    for u in 0..n {
        for j in 1..=k / 2 {
            g.add_edge(u, (u + j) % n, 1.0)?;
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.random::<f64>() >= p_rewire || !g.has_edge(u, v) {
                continue;
            }
            if g.degree(u) >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n as u32) as usize;
                if w != u && !g.has_edge(u, w) {
                    break w;
                }
            };
            g.remove_edge(u, v);
            g.add_edge(u, w, 1.0)?;
        }
    }
    Ok(g)
}

/// Parameters of the composite scale-free / small-world topology.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridParams {
    pub ba_fraction: f64,
    pub m_attach: usize,
    pub k: usize,
    pub p_rewire: f64,
    pub bridge_edges: usize,
}

/// Composite graph: the first `floor(ba_fraction * n)` nodes are wired by
/// preferential attachment, the rest form a rewired ring, and
/// `bridge_edges` distinct random edges join the two parts.
///
/// A fraction of 0 or 1 degenerates to the pure ring or pure attachment
/// model, consuming the generator exactly as the pure call would.
pub fn generate_hybrid<R: Rng + ?Sized>(n: usize, params: &HybridParams, rng: &mut R) -> Result<WeightedGraph> {
    if !(0.0..=1.0).contains(&params.ba_fraction) {
        return Err(Error::arg(format!(
            "ba_fraction must lie in [0, 1], got {}",
            params.ba_fraction
        )));
    }
    let n_ba = (params.ba_fraction * n as f64).floor() as usize;
    if n_ba == n {
        return generate_ba(n, params.m_attach, rng);
    }
    if n_ba == 0 {
        return generate_ws(n, params.k, params.p_rewire, rng);
    }
    let n_ws = n - n_ba;
    if params.bridge_edges == 0 {
        return Err(Error::arg(
            "hybrid graph needs at least one bridge edge to be connected",
        ));
    }
    if params.bridge_edges > n_ba * n_ws {
        return Err(Error::arg(format!(
            "{} bridge edges exceed the {} possible cross pairs",
            params.bridge_edges,
            n_ba * n_ws
        )));
    }
    let ba = generate_ba(n_ba, params.m_attach, rng)?;
    let ws = generate_ws(n_ws, params.k, params.p_rewire, rng)?;
    let mut g = WeightedGraph::with_nodes(n);
    ba.embed(0, &mut g);
    ws.embed(n_ba, &mut g);
    let mut added = 0;
    while added < params.bridge_edges {
        let u = rng.random_range(0..n_ba as u32) as usize;
        let v = n_ba + rng.random_range(0..n_ws as u32) as usize;
        if !g.has_edge(u, v) {
            g.add_edge(u, v, 1.0)?;
            added += 1;
        }
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(g)
}

/// Distributions for edge weights and initial ETVs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    pub weight_mu: f64,
    pub weight_sigma: f64,
    pub etv_mu: f64,
    pub etv_sigma: f64,
    pub m: u32,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            weight_mu: 0.5,
            weight_sigma: 0.15,
            etv_mu: 16.0,
            etv_sigma: 4.0,
            m: 32,
        }
    }
}

impl InitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.weight_mu > 0.0 && self.weight_mu.is_finite()) {
            return Err(Error::config(
                "init.weight_mu",
                format!("must be positive, got {}", self.weight_mu),
            ));
        }
        if !(self.weight_sigma >= 0.0 && self.weight_sigma.is_finite()) {
            return Err(Error::config(
                "init.weight_sigma",
                format!("must be non-negative, got {}", self.weight_sigma),
            ));
        }
        if !(self.etv_sigma >= 0.0 && self.etv_sigma.is_finite()) {
            return Err(Error::config(
                "init.etv_sigma",
                format!("must be non-negative, got {}", self.etv_sigma),
            ));
        }
        if !(0.0..=self.m as f64).contains(&self.etv_mu) {
            return Err(Error::config(
                "init.etv_mu",
                format!("must lie in [0, {}], got {}", self.m, self.etv_mu),
            ));
        }
        Ok(())
    }
}

/// Returns a copy of `graph` whose edge weights are drawn from
/// `Normal(weight_mu, weight_sigma²)`: non-positive draws are redrawn and
/// draws above 1 are clamped to 1. Edges are visited in sorted order.
pub fn assign_weights<R: Rng + ?Sized>(graph: &WeightedGraph, cfg: &InitConfig, rng: &mut R) -> Result<WeightedGraph> {
    cfg.validate()?;
    let normal =
        Normal::new(cfg.weight_mu, cfg.weight_sigma).map_err(|e| Error::config("init.weight_sigma", e.to_string()))?;
    let mut out = graph.clone();
    let pairs: Vec<(usize, usize)> = graph.edges().map(|(u, v, _)| (u, v)).collect();
    for (u, v) in pairs {
        let w = loop {
            let w = normal.sample(rng);
            if w > 0.0 {
                break w.min(1.0);
            }
        };
        out.set_weight(u, v, w);
    }
    Ok(out)
}

/// Initial ETVs: `Normal(etv_mu, etv_sigma²)` rounded to the nearest integer
/// and clamped to `[0, m]`.
pub fn init_etvs<R: Rng + ?Sized>(n: usize, cfg: &InitConfig, rng: &mut R) -> Result<Vec<u32>> {
    cfg.validate()?;
    let normal = Normal::new(cfg.etv_mu, cfg.etv_sigma).map_err(|e| Error::config("init.etv_sigma", e.to_string()))?;
    Ok((0..n)
        .map(|_| normal.sample(rng).round().clamp(0.0, cfg.m as f64) as u32)
        .collect())
}

/// Writes `# nodes N` followed by one `u v weight` line per edge, sorted by
/// `(u, v)` with `u < v`. Weights use the shortest round-trip decimal form.
pub fn write_edge_list<W: Write>(graph: &WeightedGraph, mut out: W) -> io::Result<()> {
    let mut buf = String::new();
    writeln!(buf, "# nodes {}", graph.node_count()).unwrap();
    for (u, v, w) in graph.edges() {
        writeln!(buf, "{u} {v} {w}").unwrap();
    }
    out.write_all(buf.as_bytes())
}

/// Parses the edge-list format. Blank lines and `#` comments are skipped; a
/// `# nodes N` comment fixes the node count, otherwise it is one past the
/// largest id seen. Weights must lie in `(0, 1]`.
pub fn parse_edge_list(text: &str) -> Result<WeightedGraph> {
    let mut declared: Option<usize> = None;
    let mut triples = Vec::new();
    let mut max_id: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut parts = comment.split_whitespace();
            if parts.next() == Some("nodes") {
                let n = parts
                    .next()
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|&n| n <= MAX_NODES)
                    .ok_or_else(|| parse_err(line_no, "malformed `# nodes N` header"))?;
                if declared.replace(n).is_some() {
                    return Err(parse_err(line_no, "duplicate `# nodes` header"));
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(line_no, "expected `u v weight`"));
        }
        let id = |s: &str| {
            s.parse::<usize>()
                .ok()
                .filter(|&x| x < MAX_NODES)
                .ok_or_else(|| parse_err(line_no, format!("bad node id `{s}`")))
        };
        let u = id(fields[0])?;
        let v = id(fields[1])?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad weight `{}`", fields[2])))?;
        if !(w > 0.0 && w <= 1.0) {
            return Err(parse_err(line_no, format!("weight {w} outside (0, 1]")));
        }
        max_id = Some(max_id.map_or(u.max(v), |m: usize| m.max(u).max(v)));
        triples.push((line_no, u, v, w));
    }
    let n = match (declared, max_id) {
        (Some(n), Some(m)) if m >= n => {
            return Err(parse_err(0, format!("node id {m} exceeds declared count {n}")));
        }
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => 0,
    };
    let mut g = WeightedGraph::with_nodes(n);
    for (line_no, u, v, w) in triples {
        g.add_edge(u, v, w).map_err(|e| parse_err(line_no, e.to_string()))?;
    }
    Ok(g)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}
