//! Post-processing of traces: ETV band counts, election-style voting,
//! colored graph exports, and CSV/JSON series.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::SimulationTrace;
use crate::error::{Error, Result};
use crate::network::WeightedGraph;

/// ETV cut points `e_0 < e_1 < ... < e_k` with `e_0 = 0` and `e_k = m`.
/// Band `j` is `[e_j, e_{j+1})`, except the last band which includes `m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandSpec {
    edges: Vec<u32>,
}

impl BandSpec {
    pub fn new(edges: Vec<u32>, m: u32) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::arg("a band spec needs at least two edges"));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg(format!("band edges must be strictly ascending: {edges:?}")));
        }
        if edges[0] != 0 || *edges.last().unwrap() != m {
            return Err(Error::arg(format!("band edges must run from 0 to {m}: {edges:?}")));
        }
        Ok(BandSpec { edges })
    }

    /// Five bands 0-7, 7-14, 14-18, 18-25, 25-32 for 32-bit codes.
    pub fn five_band() -> Self {
        BandSpec {
            edges: vec![0, 7, 14, 18, 25, 32],
        }
    }

    /// Alternate single-fragment banding with cuts at 8, 13, 16, 21 and 26.
    pub fn single_fragment() -> Self {
        BandSpec {
            edges: vec![0, 8, 13, 16, 21, 26, 32],
        }
    }

    pub fn edges(&self) -> &[u32] {
        &self.edges
    }

    pub fn band_count(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn band_of(&self, etv: u32) -> Option<usize> {
        let last = *self.edges.last().unwrap();
        if etv > last {
            return None;
        }
        if etv == last {
            return Some(self.band_count() - 1);
        }
        Some(self.edges.partition_point(|&e| e <= etv) - 1)
    }

    pub fn labels(&self) -> Vec<String> {
        self.edges.windows(2).map(|w| format!("b{}_{}", w[0], w[1])).collect()
    }
}

/// Per-round node counts in each band.
pub fn etv_bands(trace: &SimulationTrace, bands: &BandSpec) -> Result<Vec<Vec<usize>>> {
    if *bands.edges.last().unwrap() != trace.m {
        return Err(Error::arg(format!(
            "band edges end at {} but codes have length {}",
            bands.edges.last().unwrap(),
            trace.m
        )));
    }
    trace.records.iter().map(|r| band_counts(&r.etvs, bands)).collect()
}

pub fn band_counts(etvs: &[u32], bands: &BandSpec) -> Result<Vec<usize>> {
    let mut counts = vec![0; bands.band_count()];
    for &e in etvs {
        let b = bands
            .band_of(e)
            .ok_or_else(|| Error::arg(format!("ETV {e} outside band range")))?;
        counts[b] += 1;
    }
    Ok(counts)
}

pub fn write_bands_csv<W: Write>(trace: &SimulationTrace, bands: &BandSpec, mut out: W) -> Result<()> {
    let counts = etv_bands(trace, bands)?;
    let mut buf = String::from("t");
    for label in bands.labels() {
        buf.push(',');
        buf.push_str(&label);
    }
    buf.push('\n');
    for (r, row) in trace.records.iter().zip(counts) {
        write!(buf, "{}", r.t).unwrap();
        for c in row {
            write!(buf, ",{c}").unwrap();
        }
        buf.push('\n');
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

/// Chance that an undecided voter (shifted ETV 0 or -1) abstains. Tuned so
/// that the shipped presets' final distributions, with about a quarter of
/// nodes undecided, abstain at roughly 0.3% of voters.
pub const DEFAULT_P_ABSTAIN: f64 = 0.012;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteTally {
    pub votes_a: usize,
    pub votes_b: usize,
    pub abstained: usize,
}

impl VoteTally {
    pub fn total(&self) -> usize {
        self.votes_a + self.votes_b + self.abstained
    }

    pub fn abstention_fraction(&self) -> f64 {
        self.abstained as f64 / self.total() as f64
    }
}

/// Election mapping for 32-bit codes. After shifting by 16: `[1, 16]` votes
/// A, `[-16, -2]` votes B; `0` leans A and `-1` leans B, each abstaining
/// with probability `p_abstain` (one uniform draw per undecided voter, in
/// node order).
pub fn simulate_vote<R: Rng + ?Sized>(etvs: &[u32], m: u32, p_abstain: f64, rng: &mut R) -> Result<VoteTally> {
    if m != 32 {
        return Err(Error::arg(format!("the voting mapping is defined for m = 32, got {m}")));
    }
    if !(0.0..=1.0).contains(&p_abstain) {
        return Err(Error::arg(format!("p_abstain must lie in [0, 1], got {p_abstain}")));
    }
    let mut tally = VoteTally::default();
    for &e in etvs {
        if e > m {
            return Err(Error::arg(format!("ETV {e} outside [0, {m}]")));
        }
        match e as i64 - 16 {
            1..=16 => tally.votes_a += 1,
            -16..=-2 => tally.votes_b += 1,
            lean => {
                if rng.random::<f64>() < p_abstain {
                    tally.abstained += 1;
                } else if lean == 0 {
                    tally.votes_a += 1;
                } else {
                    tally.votes_b += 1;
                }
            }
        }
    }
    Ok(tally)
}

/// RGB color on the red–white–gray scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn hex(&self) -> String {
        format!("#{:02X}{:02X}{:02X}", self.0, self.1, self.2)
    }

    /// Red excess over the other two channels.
    pub fn redness(&self) -> f64 {
        self.0 as f64 - (self.1 as f64 + self.2 as f64) / 2.0
    }
}

pub const COLOR_LOW: Rgb = Rgb(0x8B, 0x00, 0x00);
pub const COLOR_MID: Rgb = Rgb(0xFF, 0xFF, 0xFF);
pub const COLOR_HIGH: Rgb = Rgb(0x40, 0x40, 0x40);

fn lerp(a: Rgb, b: Rgb, f: f64) -> Rgb {
    let ch = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * f).round() as u8;
    Rgb(ch(a.0, b.0), ch(a.1, b.1), ch(a.2, b.2))
}

/// Dark red at ETV 0, white at `m/2`, dark gray at `m`; linear in RGB on
/// each half.
pub fn etv_color(etv: u32, m: u32) -> Rgb {
    let x = (etv.min(m) as f64 / m as f64).clamp(0.0, 1.0);
    if x <= 0.5 {
        lerp(COLOR_LOW, COLOR_MID, 2.0 * x)
    } else {
        lerp(COLOR_MID, COLOR_HIGH, 2.0 * x - 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphFormat {
    Dot,
    Graphml,
}

impl GraphFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            GraphFormat::Dot => "dot",
            GraphFormat::Graphml => "graphml",
        }
    }
}

pub fn render_colored_graph(graph: &WeightedGraph, etvs: &[u32], m: u32, format: GraphFormat) -> Result<String> {
    if etvs.len() != graph.node_count() {
        return Err(Error::arg(format!(
            "{} ETVs for {} nodes",
            etvs.len(),
            graph.node_count()
        )));
    }
    let mut s = String::new();
    match format {
        GraphFormat::Dot => {
            s.push_str("graph emotions {\n  node [style=filled];\n");
            for (v, &e) in etvs.iter().enumerate() {
                let c = etv_color(e, m).hex();
                writeln!(s, "  {v} [etv={e}, fillcolor=\"{c}\", color=\"{c}\"];").unwrap();
            }
            for (u, v, w) in graph.edges() {
                writeln!(s, "  {u} -- {v} [weight={w}];").unwrap();
            }
            s.push_str("}\n");
        }
        GraphFormat::Graphml => {
            s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
            s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
            s.push_str("  <key id=\"etv\" for=\"node\" attr.name=\"etv\" attr.type=\"int\"/>\n");
            s.push_str("  <key id=\"color\" for=\"node\" attr.name=\"color\" attr.type=\"string\"/>\n");
            s.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
            s.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
            for (v, &e) in etvs.iter().enumerate() {
                writeln!(
                    s,
                    "    <node id=\"n{v}\"><data key=\"etv\">{e}</data><data key=\"color\">{}</data></node>",
                    etv_color(e, m).hex()
                )
                .unwrap();
            }
            for (u, v, w) in graph.edges() {
                writeln!(
                    s,
                    "    <edge source=\"n{u}\" target=\"n{v}\"><data key=\"weight\">{w}</data></edge>"
                )
                .unwrap();
            }
            s.push_str("  </graph>\n</graphml>\n");
        }
    }
    Ok(s)
}

pub fn export_colored_graph(
    graph: &WeightedGraph,
    etvs: &[u32],
    m: u32,
    path: &Path,
    format: GraphFormat,
) -> Result<()> {
    let text = render_colored_graph(graph, etvs, m, format)?;
    fs::write(path, text)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesFormat {
    Csv,
    Json,
}

/// One line of the exported time series. `fragment` is 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: u32,
    pub fragment: usize,
    pub t_local: u32,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "I")]
    pub i: usize,
    pub phi: f64,
}

pub const SERIES_HEADER: &str = "t,fragment,t_local,S,I,phi";

pub fn series_rows(trace: &SimulationTrace) -> Vec<SeriesRow> {
    trace
        .records
        .iter()
        .map(|r| SeriesRow {
            t: r.t,
            fragment: r.fragment + 1,
            t_local: r.t_local,
            s: r.ignorant,
            i: r.spreaders,
            phi: r.phi,
        })
        .collect()
}

pub fn write_timeseries<W: Write>(trace: &SimulationTrace, mut out: W, format: SeriesFormat) -> Result<()> {
    let rows = series_rows(trace);
    match format {
        SeriesFormat::Csv => {
            let mut buf = String::with_capacity(32 * (rows.len() + 1));
            buf.push_str(SERIES_HEADER);
            buf.push('\n');
            for r in &rows {
                writeln!(buf, "{},{},{},{},{},{:.6}", r.t, r.fragment, r.t_local, r.s, r.i, r.phi).unwrap();
            }
            out.write_all(buf.as_bytes())?;
        }
        SeriesFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &rows).map_err(io::Error::from)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn write_timeseries_file(trace: &SimulationTrace, path: &Path, format: SeriesFormat) -> Result<()> {
    let mut buf = Vec::new();
    write_timeseries(trace, &mut buf, format)?;
    fs::write(path, buf)?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(raw: &str, line: usize, name: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("bad {name} value `{raw}`")))
}

/// Data lines of a CSV with a required exact header.
fn csv_body<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)> + 'a> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    if first.trim_end_matches('\r') != header {
        return Err(parse_err(1, format!("expected header `{header}`")));
    }
    Ok(lines
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, l)| (n, l.split(',').collect())))
}

/// Parses a time-series CSV written by [`write_timeseries`].
pub fn parse_timeseries_csv(text: &str) -> Result<Vec<SeriesRow>> {
    let mut rows = Vec::new();
    for (line, cols) in csv_body(text, SERIES_HEADER)? {
        if cols.len() != 6 {
            return Err(parse_err(line, format!("expected 6 columns, found {}", cols.len())));
        }
        let phi: f64 = field(cols[5], line, "phi")?;
        if !phi.is_finite() {
            return Err(parse_err(line, "phi is not finite"));
        }
        rows.push(SeriesRow {
            t: field(cols[0], line, "t")?,
            fragment: field(cols[1], line, "fragment")?,
            t_local: field(cols[2], line, "t_local")?,
            s: field(cols[3], line, "S")?,
            i: field(cols[4], line, "I")?,
            phi,
        });
    }
    Ok(rows)
}

pub const ETV_HEADER: &str = "node,etv";

pub fn write_etv_csv<W: Write>(etvs: &[u32], mut out: W) -> Result<()> {
    let mut buf = String::with_capacity(8 * (etvs.len() + 1));
    buf.push_str(ETV_HEADER);
    buf.push('\n');
    for (v, e) in etvs.iter().enumerate() {
        writeln!(buf, "{v},{e}").unwrap();
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

/// Parses a `node,etv` CSV. Every node id in `0..N` must appear exactly once;
/// rows may come in any order.
pub fn parse_etv_csv(text: &str) -> Result<Vec<u32>> {
    let mut pairs = Vec::new();
    for (line, cols) in csv_body(text, ETV_HEADER)? {
        if cols.len() != 2 {
            return Err(parse_err(line, format!("expected 2 columns, found {}", cols.len())));
        }
        let node: usize = field(cols[0], line, "node")?;
        let etv: u32 = field(cols[1], line, "etv")?;
        pairs.push((line, node, etv));
    }
    let n = pairs.len();
    let mut etvs = vec![None; n];
    for (line, node, etv) in pairs {
        let slot = etvs
            .get_mut(node)
            .ok_or_else(|| parse_err(line, format!("node id {node} out of range for {n} rows")))?;
        if slot.replace(etv).is_some() {
            return Err(parse_err(line, format!("node {node} listed twice")));
        }
    }
    Ok(etvs.into_iter().map(|e| e.expect("ids are a permutation")).collect())
}

pub const BETA_HEADER: &str = "t,beta_mean";

/// One row per executed round: the population-mean spread rate in effect.
pub fn write_beta_csv<W: Write>(trace: &SimulationTrace, mut out: W) -> Result<()> {
    let mut buf = String::from(BETA_HEADER);
    buf.push('\n');
    for (t, b) in trace.beta_series().iter().enumerate() {
        writeln!(buf, "{t},{b}").unwrap();
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

pub fn parse_beta_csv(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (line, cols) in csv_body(text, BETA_HEADER)? {
        if cols.len() != 2 {
            return Err(parse_err(line, format!("expected 2 columns, found {}", cols.len())));
        }
        let t: usize = field(cols[0], line, "t")?;
        if t != out.len() {
            return Err(parse_err(line, format!("expected round {}, found {t}", out.len())));
        }
        let b: f64 = field(cols[1], line, "beta_mean")?;
        if !(0.0..=1.0).contains(&b) {
            return Err(parse_err(line, format!("beta {b} outside [0, 1]")));
        }
        out.push(b);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::RoundRecord;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn trace_of(rounds: Vec<Vec<u32>>) -> SimulationTrace {
        let n = rounds[0].len();
        SimulationTrace {
            num_nodes: n,
            m: 32,
            records: rounds
                .into_iter()
                .enumerate()
                .map(|(t, etvs)| RoundRecord {
                    t: t as u32,
                    fragment: 0,
                    t_local: t as u32,
                    ignorant: n - 1,
                    spreaders: 1,
                    phi: etvs.iter().sum::<u32>() as f64 / n as f64,
                    beta_mean: 0.25,
                    etvs,
                })
                .collect(),
        }
    }

    #[test]
    fn band_spec_validation() {
        assert!(BandSpec::new(vec![0, 7, 7, 32], 32).is_err());
        assert!(BandSpec::new(vec![1, 32], 32).is_err());
        assert!(BandSpec::new(vec![0, 40], 32).is_err());
        assert!(BandSpec::new(vec![0, 16, 32], 32).is_ok());
        assert_eq!(
            BandSpec::five_band(),
            BandSpec::new(vec![0, 7, 14, 18, 25, 32], 32).unwrap()
        );
    }

    #[test]
    fn band_examples() {
        let t = trace_of(vec![vec![16; 10]]);
        assert_eq!(
            etv_bands(&t, &BandSpec::five_band()).unwrap(),
            vec![vec![0, 0, 10, 0, 0]]
        );
        let t = trace_of(vec![vec![0, 31]]);
        let halves = BandSpec::new(vec![0, 16, 32], 32).unwrap();
        assert_eq!(etv_bands(&t, &halves).unwrap(), vec![vec![1, 1]]);
        let t = trace_of(vec![vec![32, 25, 24, 0, 7]]);
        assert_eq!(
            etv_bands(&t, &BandSpec::five_band()).unwrap(),
            vec![vec![1, 1, 0, 1, 2]]
        );
        let short = BandSpec::new(vec![0, 8, 16], 16).unwrap();
        assert!(etv_bands(&t, &short).is_err());
    }

    #[test]
    fn voting_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = simulate_vote(&[32; 50], 32, 0.5, &mut rng).unwrap();
        assert_eq!((t.votes_a, t.votes_b, t.abstained), (50, 0, 0));
        let t = simulate_vote(&[0; 50], 32, 0.5, &mut rng).unwrap();
        assert_eq!(t.votes_b, 50);
        let t = simulate_vote(&[16; 50], 32, 1.0, &mut rng).unwrap();
        assert_eq!(t.abstained, 50);
        let t = simulate_vote(&[15, 16, 17, 14], 32, 0.0, &mut rng).unwrap();
        assert_eq!((t.votes_a, t.votes_b, t.abstained), (2, 2, 0));
        assert!(simulate_vote(&[3], 16, 0.1, &mut rng).is_err());
        assert!(simulate_vote(&[33], 32, 0.1, &mut rng).is_err());
    }

    #[test]
    fn color_anchors_and_monotonicity() {
        assert_eq!(etv_color(0, 32).hex(), "#8B0000");
        assert_eq!(etv_color(16, 32).hex(), "#FFFFFF");
        assert_eq!(etv_color(32, 32).hex(), "#404040");
        for e in 0..32 {
            assert!(etv_color(e + 1, 32).redness() <= etv_color(e, 32).redness());
        }
    }

    #[test]
    fn graph_exports_carry_colors() {
        let mut g = WeightedGraph::with_nodes(3);
        g.add_edge(0, 1, 0.5).unwrap();
        g.add_edge(1, 2, 0.25).unwrap();
        let dot = render_colored_graph(&g, &[0, 16, 32], 32, GraphFormat::Dot).unwrap();
        assert!(dot.contains("0 [etv=0, fillcolor=\"#8B0000\""));
        assert!(dot.contains("1 -- 2 [weight=0.25];"));
        let gml = render_colored_graph(&g, &[0, 16, 32], 32, GraphFormat::Graphml).unwrap();
        assert!(gml.contains("<data key=\"color\">#404040</data>"));
        assert_eq!(gml.matches("<edge ").count(), 2);
        assert!(render_colored_graph(&g, &[0, 16], 32, GraphFormat::Dot).is_err());
    }

    #[test]
    fn timeseries_csv_round_trip() {
        let t = trace_of(vec![vec![1, 2, 4], vec![3, 3, 3], vec![0, 0, 1]]);
        let mut buf = Vec::new();
        write_timeseries(&t, &mut buf, SeriesFormat::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,fragment,t_local,S,I,phi\n0,1,0,2,1,2.333333\n"));
        let rows = parse_timeseries_csv(&text).unwrap();
        assert_eq!(rows.len(), 3);
        for (row, rec) in rows.iter().zip(&t.records) {
            assert_eq!(row.t, rec.t);
            assert_eq!(row.s + row.i, 3);
            assert!((row.phi - rec.phi).abs() <= 5e-7);
        }
        let mut json = Vec::new();
        write_timeseries(&t, &mut json, SeriesFormat::Json).unwrap();
        let back: Vec<SeriesRow> = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, series_rows(&t));
    }

    #[test]
    fn initial_only_trace_has_one_row() {
        let t = trace_of(vec![vec![16, 16]]);
        let mut buf = Vec::new();
        write_timeseries(&t, &mut buf, SeriesFormat::Csv).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn etv_csv_parsing() {
        let mut buf = Vec::new();
        write_etv_csv(&[3, 32, 0], &mut buf).unwrap();
        assert_eq!(
            parse_etv_csv(std::str::from_utf8(&buf).unwrap()).unwrap(),
            vec![3, 32, 0]
        );
        assert_eq!(parse_etv_csv("node,etv\n1,5\n0,7\n").unwrap(), vec![7, 5]);
        assert!(parse_etv_csv("node,etv\n0,1\n0,2\n").is_err());
        assert!(parse_etv_csv("node,etv\n2,1\n").is_err());
        assert!(parse_etv_csv("id,etv\n0,1\n").is_err());
        assert!(parse_etv_csv("").is_err());
    }

    #[test]
    fn beta_csv_round_trip() {
        let t = trace_of(vec![vec![1], vec![2], vec![3]]);
        let mut buf = Vec::new();
        write_beta_csv(&t, &mut buf).unwrap();
        let b = parse_beta_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(b, vec![0.25, 0.25]);
        assert!(parse_beta_csv("t,beta_mean\n1,0.5\n").is_err());
    }
}
