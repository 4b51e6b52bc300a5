use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use affectsim::analysis::{
    parse_beta_csv, parse_etv_csv, render_colored_graph, simulate_vote, write_bands_csv, write_beta_csv, write_etv_csv,
    write_timeseries, GraphFormat, SeriesFormat, VoteTally,
};
use affectsim::meanfield::{integrate, BetaSeries, MeanFieldState};
use affectsim::network::write_edge_list;
use affectsim::{Config, Outcome, Simulation};

use crate::manifest::RunManifest;
use crate::{MeanfieldArgs, SimulateArgs, SweepArgs, VoteArgs};

pub const SEED_ENV: &str = "AFFECTSIM_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] affectsim::Error),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn io(path: &Path, err: io::Error) -> Self {
        CliError::Runtime(format!("{}: {err}", path.display()))
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn load_config(path: &Path) -> Result<Config> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(Config::from_toml_str(&text)?)
}

/// Seed precedence: command-line flag, then `AFFECTSIM_SEED`, then config.
fn resolve_seed(flag: Option<u64>, config: &Config) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{raw}`"))),
        Err(_) => Ok(config.seed),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Writes `bytes` to `dir/rel` and records `rel` in the manifest.
fn emit(manifest: &mut RunManifest, dir: &Path, rel: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    write_file(&path, bytes)?;
    manifest.outputs.push(rel.to_string());
    Ok(())
}

fn run_seed(config: &Config, seed: u64) -> Result<Outcome> {
    let mut sim = config.sim_config();
    sim.seed = seed;
    Ok(Simulation::build(&sim)?.run()?)
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let config = load_config(&args.config)?;
    let seed = resolve_seed(args.seed, &config)?;
    let outcome = run_seed(&config, seed)?;
    let trace = &outcome.trace;
    let final_etvs = trace.final_etvs();
    let dir = &args.out;
    create_dir(dir)?;
    let mut manifest = RunManifest::new("simulate", Some(&config), vec![seed], dir);

    let mut buf = Vec::new();
    write_timeseries(trace, &mut buf, SeriesFormat::Csv)?;
    emit(&mut manifest, dir, "trace.csv", &std::mem::take(&mut buf))?;
    write_timeseries(trace, &mut buf, SeriesFormat::Json)?;
    emit(&mut manifest, dir, "trace.json", &std::mem::take(&mut buf))?;
    write_bands_csv(trace, &config.band_spec()?, &mut buf)?;
    emit(&mut manifest, dir, "bands.csv", &std::mem::take(&mut buf))?;
    write_beta_csv(trace, &mut buf)?;
    emit(&mut manifest, dir, "beta.csv", &std::mem::take(&mut buf))?;
    write_etv_csv(final_etvs, &mut buf)?;
    emit(&mut manifest, dir, "final_etvs.csv", &std::mem::take(&mut buf))?;
    write_edge_list(&outcome.graph, &mut buf).map_err(|e| CliError::io(&dir.join("edges.txt"), e))?;
    emit(&mut manifest, dir, "edges.txt", &buf)?;
    for format in [GraphFormat::Dot, GraphFormat::Graphml] {
        let text = render_colored_graph(&outcome.graph, final_etvs, trace.m, format)?;
        emit(
            &mut manifest,
            dir,
            &format!("graph_final.{}", format.extension()),
            text.as_bytes(),
        )?;
    }
    manifest.write(dir)?;

    let last = trace.records.last().expect("trace has an initial record");
    eprintln!(
        "seed {seed}: {} rounds, phi {:.3} -> {:.3}, outputs in {}",
        trace.records.len() - 1,
        trace.records[0].phi,
        last.phi,
        dir.display()
    );
    Ok(())
}

enum BetaSource {
    Constant(f64),
    Trace(PathBuf, BetaSeries),
}

fn parse_beta_source(values: &[String]) -> Result<BetaSource> {
    match values {
        [v] => {
            let b: f64 = v
                .parse()
                .map_err(|_| CliError::Usage(format!("--beta expects a number or `from-trace <path>`, got `{v}`")))?;
            if !(0.0..=1.0).contains(&b) {
                return Err(CliError::Usage(format!("--beta must lie in [0, 1], got {b}")));
            }
            Ok(BetaSource::Constant(b))
        }
        [mode, path] if mode == "from-trace" => {
            let path = PathBuf::from(path);
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let series = BetaSeries::new(parse_beta_csv(&text)?)?;
            Ok(BetaSource::Trace(path, series))
        }
        _ => Err(CliError::Usage(format!(
            "--beta expects a number or `from-trace <path>`, got `{}`",
            values.join(" ")
        ))),
    }
}

fn trajectory_csv(traj: &[MeanFieldState]) -> String {
    let mut out = String::from("step,t,s,i\n");
    for (n, st) in traj.iter().enumerate() {
        writeln!(out, "{n},{:.6},{},{}", st.t, st.s, st.i).unwrap();
    }
    out
}

pub fn meanfield(args: &MeanfieldArgs) -> Result<()> {
    let config = args.config.as_deref().map(load_config).transpose()?;
    let source = parse_beta_source(&args.beta)?;
    let gamma = args
        .gamma
        .or(config.as_ref().map(|c| c.gamma_forget))
        .ok_or_else(|| CliError::Usage("--gamma is required without a config".into()))?;
    let i0 = args.i0.or(config.as_ref().map(|c| c.meanfield.i0)).unwrap_or(0.01);
    let dt = args.dt.or(config.as_ref().map(|c| c.meanfield.dt)).unwrap_or(0.01);
    let horizon = args
        .horizon
        .or(config.as_ref().and_then(|c| c.meanfield.horizon))
        .or_else(|| match &source {
            BetaSource::Trace(_, s) => Some(s.len() as f64),
            BetaSource::Constant(_) => None,
        })
        .or(config.as_ref().map(|c| c.total_rounds() as f64))
        .unwrap_or(200.0);

    let traj = match &source {
        BetaSource::Constant(b) => integrate(|_| *b, gamma, i0, horizon, dt),
        BetaSource::Trace(_, series) => integrate(|t| series.at(t), gamma, i0, horizon, dt),
    }
    .map_err(|e| match e {
        affectsim::Error::InvalidArgument(msg) => CliError::Usage(msg),
        other => other.into(),
    })?;
    let dir = &args.out;
    create_dir(dir)?;
    let mut manifest = RunManifest::new("meanfield", config.as_ref(), Vec::new(), dir);
    emit(&mut manifest, dir, "meanfield.csv", trajectory_csv(&traj).as_bytes())?;
    manifest.write(dir)?;

    let last = traj.last().expect("trajectory has an initial state");
    let origin = match &source {
        BetaSource::Constant(b) => format!("beta {b}"),
        BetaSource::Trace(p, _) => format!("beta from {}", p.display()),
    };
    eprintln!("{origin}, gamma {gamma}: i({:.3}) = {:.6}", last.t, last.i);
    Ok(())
}

#[derive(Serialize)]
struct TallyRow {
    seed: u64,
    #[serde(flatten)]
    tally: VoteTally,
    abstention_fraction: f64,
}

#[derive(Serialize)]
struct VoteReport {
    voters: usize,
    p_abstain: f64,
    tallies: Vec<TallyRow>,
    mean_abstention_fraction: f64,
}

pub fn vote(args: &VoteArgs) -> Result<()> {
    if args.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    let text = fs::read_to_string(&args.etvs).map_err(|e| CliError::io(&args.etvs, e))?;
    let etvs = parse_etv_csv(&text)?;
    if etvs.is_empty() {
        return Err(CliError::Runtime(format!("{} lists no nodes", args.etvs.display())));
    }
    let tallies = (0..args.repeats)
        .map(|k| {
            let seed = args.seed.wrapping_add(k);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tally = simulate_vote(&etvs, args.m, args.p_abstain, &mut rng)?;
            Ok(TallyRow {
                seed,
                tally,
                abstention_fraction: tally.abstention_fraction(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = tallies.iter().map(|t| t.abstention_fraction).sum::<f64>() / tallies.len() as f64;
    let report = VoteReport {
        voters: etvs.len(),
        p_abstain: args.p_abstain,
        tallies,
        mean_abstention_fraction: mean,
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    match &args.out {
        Some(path) => write_file(path, json.as_bytes()),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

/// Population mean and standard deviation of each column, reduced in row
/// order.
fn column_stats(rows: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let k = rows.len() as f64;
    (0..rows[0].len())
        .map(|t| {
            let mean = rows.iter().map(|r| r[t]).sum::<f64>() / k;
            let var = rows.iter().map(|r| (r[t] - mean).powi(2)).sum::<f64>() / k;
            (mean, var.sqrt())
        })
        .collect()
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    if args.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let config = load_config(&args.config)?;
    let master = resolve_seed(args.seed, &config)?;
    let seeds: Vec<u64> = (0..args.seeds).map(|k| master.wrapping_add(k)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let outcomes: Vec<Outcome> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| run_seed(&config, s))
            .collect::<Result<Vec<_>>>()
    })?;

    let dir = &args.out;
    create_dir(dir)?;
    let mut manifest = RunManifest::new("sweep", Some(&config), seeds.clone(), dir);
    let mut buf = Vec::new();
    for (seed, out) in seeds.iter().zip(&outcomes) {
        write_timeseries(&out.trace, &mut buf, SeriesFormat::Csv)?;
        emit(
            &mut manifest,
            dir,
            &format!("runs/seed_{seed}/trace.csv"),
            &std::mem::take(&mut buf),
        )?;
        write_etv_csv(out.trace.final_etvs(), &mut buf)?;
        emit(
            &mut manifest,
            dir,
            &format!("runs/seed_{seed}/final_etvs.csv"),
            &std::mem::take(&mut buf),
        )?;
    }
    let phis: Vec<Vec<f64>> = outcomes.iter().map(|o| o.trace.phi_series()).collect();
    let mut csv = String::from("t,phi_mean,phi_std\n");
    for (t, (mean, std)) in column_stats(&phis).into_iter().enumerate() {
        writeln!(csv, "{t},{mean:.6},{std:.6}").unwrap();
    }
    emit(&mut manifest, dir, "phi_aggregate.csv", csv.as_bytes())?;
    manifest.write(dir)?;

    let first = phis.iter().map(|p| p[0]).sum::<f64>() / phis.len() as f64;
    let last = phis.iter().map(|p| *p.last().unwrap()).sum::<f64>() / phis.len() as f64;
    eprintln!(
        "{} runs from seed {master}: mean phi {first:.3} -> {last:.3}, outputs in {}",
        seeds.len(),
        dir.display()
    );
    Ok(())
}
