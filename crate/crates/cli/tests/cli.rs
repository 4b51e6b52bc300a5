use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_affectsim");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("AFFECTSIM_SEED")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// A small, fast variant of the table1 preset.
fn small_config(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(configs().join("table1.toml"))
        .unwrap()
        .replace("num_all = 3000", "num_all = 300")
        .replace("bridge_edges = 50", "bridge_edges = 10");
    let path = dir.join("small.toml");
    fs::write(&path, text).unwrap();
    path
}

fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn simulate_twice_gives_identical_trees() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let cfg = configs().join("table1.toml");
    for d in [&a, &b] {
        ok(&run_in(
            d.path(),
            &["simulate", cfg.to_str().unwrap(), "--seed", "42", "--out", "run"],
        ));
    }
    let (ta, tb) = (tree(&a.path().join("run")), tree(&b.path().join("run")));
    let names: Vec<String> = ta.iter().map(|(p, _)| p.display().to_string()).collect();
    assert_eq!(
        names,
        [
            "bands.csv",
            "beta.csv",
            "edges.txt",
            "final_etvs.csv",
            "graph_final.dot",
            "graph_final.graphml",
            "manifest.json",
            "trace.csv",
            "trace.json"
        ]
    );
    assert!(ta == tb, "output trees differ");
}

#[test]
fn manifest_lists_existing_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    ok(&run_in(
        dir.path(),
        &["simulate", cfg.to_str().unwrap(), "--out", "run"],
    ));
    let m: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("run/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seeds"], serde_json::json!([42]));
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    for rel in m["outputs"].as_array().unwrap() {
        assert!(dir.path().join("run").join(rel.as_str().unwrap()).is_file());
    }
}

#[test]
fn seed_precedence_flag_then_env_then_config() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let seeds_of = |out: &str| -> serde_json::Value {
        let m: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join(out).join("manifest.json")).unwrap()).unwrap();
        m["seeds"].clone()
    };
    let cfg = cfg.to_str().unwrap();
    let with_env = |args: &[&str]| {
        Command::new(BIN)
            .args(args)
            .current_dir(dir.path())
            .env("AFFECTSIM_SEED", "7")
            .output()
            .unwrap()
    };
    ok(&with_env(&["simulate", cfg, "--out", "env"]));
    ok(&with_env(&["simulate", cfg, "--seed", "9", "--out", "flag"]));
    ok(&run_in(dir.path(), &["simulate", cfg, "--out", "plain"]));
    assert_eq!(seeds_of("env"), serde_json::json!([7]));
    assert_eq!(seeds_of("flag"), serde_json::json!([9]));
    assert_eq!(seeds_of("plain"), serde_json::json!([42]));
    let garbage = Command::new(BIN)
        .args(["simulate", cfg, "--out", "y"])
        .current_dir(dir.path())
        .env("AFFECTSIM_SEED", "soon")
        .output()
        .unwrap();
    assert_eq!(garbage.status.code(), Some(2));
}

#[test]
fn missing_gamma_forget_exits_two_and_names_it() {
    let dir = TempDir::new().unwrap();
    let text: String = fs::read_to_string(configs().join("table1.toml"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("gamma_forget"))
        .map(|l| format!("{l}\n"))
        .collect();
    let path = dir.path().join("broken.toml");
    fs::write(&path, text).unwrap();
    let out = run_in(dir.path(), &["simulate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma_forget"));
}

#[test]
fn unreadable_config_is_a_runtime_error() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["simulate", "does-not-exist.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn single_fragment_preset_smoke() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("single_info.toml");
    ok(&run_in(
        dir.path(),
        &["simulate", cfg.to_str().unwrap(), "--out", "run"],
    ));
    let rows = csv_rows(&dir.path().join("run/trace.csv"));
    assert_eq!(rows.len(), 181);
    for (t, r) in rows.iter().enumerate() {
        assert_eq!(r[0], t.to_string());
        let phi: f64 = r[5].parse().unwrap();
        assert!((0.0..=32.0).contains(&phi));
        assert_eq!(r[5].split('.').nth(1).unwrap().len(), 6);
        let (s, i): (usize, usize) = (r[3].parse().unwrap(), r[4].parse().unwrap());
        assert_eq!(s + i, 3000);
    }
}

fn final_i(dir: &Path, out: &str) -> Vec<f64> {
    csv_rows(&dir.join(out).join("meanfield.csv"))
        .iter()
        .map(|r| r[3].parse().unwrap())
        .collect()
}

#[test]
fn meanfield_reaches_endemic_equilibrium() {
    let dir = TempDir::new().unwrap();
    ok(&run_in(
        dir.path(),
        &["meanfield", "--beta", "0.4", "--gamma", "0.2", "--out", "mf"],
    ));
    let i = final_i(dir.path(), "mf");
    assert!((i.last().unwrap() - 0.5).abs() < 1e-4);
}

#[test]
fn meanfield_without_spreading_decays() {
    let dir = TempDir::new().unwrap();
    ok(&run_in(
        dir.path(),
        &[
            "meanfield",
            "--beta",
            "0.0",
            "--gamma",
            "0.2",
            "--i0",
            "0.3",
            "--out",
            "mf",
        ],
    ));
    let i = final_i(dir.path(), "mf");
    assert!(i.windows(2).all(|w| w[1] < w[0]));
    assert!(*i.last().unwrap() < 1e-15);
}

#[test]
fn meanfield_replays_a_simulated_rate() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    ok(&run_in(dir.path(), &["simulate", cfg, "--out", "run"]));
    ok(&run_in(
        dir.path(),
        &[
            "meanfield",
            cfg,
            "--beta",
            "from-trace",
            "run/beta.csv",
            "--dt",
            "0.5",
            "--out",
            "mf",
        ],
    ));
    // 179 rounds at dt 0.5 plus the initial state
    assert_eq!(final_i(dir.path(), "mf").len(), 359);
    ok(&run_in(
        dir.path(),
        &[
            "meanfield",
            cfg,
            "--beta",
            "from-trace",
            "run/beta.csv",
            "--horizon",
            "20",
            "--dt",
            "0.1",
            "--out",
            "mf2",
        ],
    ));
    assert_eq!(final_i(dir.path(), "mf2").len(), 201);
    let bad = run_in(dir.path(), &["meanfield", "--beta", "sometimes", "--gamma", "0.1"]);
    assert_eq!(bad.status.code(), Some(2));
    let bad = run_in(dir.path(), &["meanfield", "--beta", "0.3", "--gamma", "1.5"]);
    assert_eq!(bad.status.code(), Some(2));
}

fn vote_json(dir: &Path, args: &[&str]) -> serde_json::Value {
    let out = run_in(dir, args);
    ok(&out);
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn vote_tallies() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("node,etv\n");
    for v in 0..50 {
        csv.push_str(&format!("{v},32\n"));
    }
    fs::write(dir.path().join("all32.csv"), &csv).unwrap();
    let r = vote_json(dir.path(), &["vote", "all32.csv"]);
    assert_eq!(r["tallies"][0]["votes_a"], 50);
    assert_eq!(r["tallies"][0]["votes_b"], 0);

    let mut mixed = String::from("node,etv\n");
    for v in 0..400 {
        mixed.push_str(&format!("{v},{}\n", 15 + v % 2));
    }
    fs::write(dir.path().join("mixed.csv"), &mixed).unwrap();
    let r = vote_json(dir.path(), &["vote", "mixed.csv", "--p-abstain", "0", "--repeats", "5"]);
    for t in r["tallies"].as_array().unwrap() {
        assert_eq!(t["abstained"], 0);
        assert_eq!(t["votes_a"], 200);
    }
    let r = vote_json(dir.path(), &["vote", "mixed.csv", "--p-abstain", "1"]);
    assert_eq!(r["tallies"][0]["abstained"], 400);
}

#[test]
fn vote_on_a_simulated_final_state_stays_in_band() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("table1.toml");
    ok(&run_in(
        dir.path(),
        &["simulate", cfg.to_str().unwrap(), "--out", "run"],
    ));
    let r = vote_json(dir.path(), &["vote", "run/final_etvs.csv", "--repeats", "100"]);
    let mean = r["mean_abstention_fraction"].as_f64().unwrap();
    assert!((0.001..=0.005).contains(&mean), "mean abstention {mean}");
}

#[test]
fn sweep_of_one_seed_matches_the_single_run() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    ok(&run_in(
        dir.path(),
        &["simulate", cfg, "--seed", "5", "--out", "single"],
    ));
    ok(&run_in(
        dir.path(),
        &["sweep", cfg, "--seeds", "1", "--seed", "5", "--out", "sw"],
    ));
    let single = csv_rows(&dir.path().join("single/trace.csv"));
    let agg = csv_rows(&dir.path().join("sw/phi_aggregate.csv"));
    assert_eq!(single.len(), agg.len());
    for (s, a) in single.iter().zip(&agg) {
        assert_eq!(s[5], a[1]);
        assert_eq!(a[2], "0.000000");
    }
    assert_eq!(
        fs::read(dir.path().join("single/trace.csv")).unwrap(),
        fs::read(dir.path().join("sw/runs/seed_5/trace.csv")).unwrap()
    );
}

#[test]
fn sweep_output_does_not_depend_on_jobs() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    ok(&run_in(
        dir.path(),
        &["sweep", cfg, "--seeds", "10", "--jobs", "1", "--out", "out"],
    ));
    let one = tree(&dir.path().join("out"));
    fs::remove_dir_all(dir.path().join("out")).unwrap();
    ok(&run_in(
        dir.path(),
        &["sweep", cfg, "--seeds", "10", "--jobs", "4", "--out", "out"],
    ));
    let four = tree(&dir.path().join("out"));
    assert_eq!(one.len(), 22);
    assert!(one == four, "sweep outputs differ between job counts");
}

#[test]
fn single_fragment_sweep_aggregates_its_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("single_info.toml");
    ok(&run_in(
        dir.path(),
        &[
            "sweep",
            cfg.to_str().unwrap(),
            "--seeds",
            "10",
            "--jobs",
            "4",
            "--out",
            "sw",
        ],
    ));
    let runs: Vec<Vec<f64>> = (42..52)
        .map(|s| {
            csv_rows(&dir.path().join(format!("sw/runs/seed_{s}/trace.csv")))
                .iter()
                .map(|r| r[5].parse().unwrap())
                .collect()
        })
        .collect();
    let agg = csv_rows(&dir.path().join("sw/phi_aggregate.csv"));
    assert_eq!(agg.len(), 181);
    for (t, row) in agg.iter().enumerate() {
        let mean = runs.iter().map(|r| r[t]).sum::<f64>() / 10.0;
        let got: f64 = row[1].parse().unwrap();
        assert!((got - mean).abs() < 2e-6, "t={t}: {got} vs {mean}");
    }
    let phi0: f64 = agg[0][1].parse().unwrap();
    assert!((phi0 - 16.0).abs() < 0.5);
}
