//! Batch front end for the simulation engine: scenario runs, graph
//! reduction, purification tradeoff curves, and satellite passes. Every
//! subcommand writes its artifacts into an output directory together with a
//! manifest that records the configuration and a checksum per file, so any
//! run can be audited and reproduced byte for byte.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use entnet::bench::{
    analytic_tradeoff, csv_string, run_scenario, summarize, ScenarioConfig, ScenarioKind,
};
use entnet::graph::NetworkGraph;
use entnet::reduction::{reduce_fixpoint, ReductionConfig};
use entnet::satellite::{simulate_pass, PassConfig};

#[derive(Parser)]
#[command(name = "entnet", version, about = "Entanglement network simulation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo scenario described by a JSON config.
    Simulate(SimulateArgs),
    /// Shrink a network graph around a terminal set.
    Reduce(ReduceArgs),
    /// Tabulate the purification fidelity/efficiency tradeoff curves.
    Curves(CurvesArgs),
    /// Simulate a satellite pass over two ground stations.
    Satellite(SatelliteArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario config JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Format of the per-pair record table.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for the sample fan-out; the results do not depend on
    /// this, only the wall-clock time does.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ReduceArgs {
    /// Reduction config JSON: a graph document, terminal ids, and an
    /// optional path cost threshold in dB.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CurvesArgs {
    /// Largest purified path count to tabulate.
    #[arg(long, default_value_t = 4)]
    max_paths: usize,
    /// Number of single-path efficiency grid points in (0, 1].
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SatelliteArgs {
    /// Pass config JSON file; built-in illustrative defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Reduction job description: the graph to shrink, which nodes must
/// survive, and an optional dB ceiling for dead-end pruning.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReduceSpec {
    graph: serde_json::Value,
    terminals: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold_db: Option<f64>,
}

/// Audit record emitted next to every run's outputs.
#[derive(Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    config: serde_json::Value,
    /// File name to SHA-256 of the file contents.
    outputs: BTreeMap<String, String>,
    duration_ms: u128,
}

/// Collects output files and their checksums under one directory.
struct OutputSet {
    dir: PathBuf,
    checksums: BTreeMap<String, String>,
    started: Instant,
}

impl OutputSet {
    fn new(dir: &Path) -> anyhow::Result<OutputSet> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            checksums: BTreeMap::new(),
            started: Instant::now(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.checksums.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    fn finish(
        self,
        subcommand: &'static str,
        seed: Option<u64>,
        config: serde_json::Value,
    ) -> anyhow::Result<()> {
        let manifest = RunManifest {
            tool: "entnet",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            seed,
            config,
            outputs: self.checksums,
            duration_ms: self.started.elapsed().as_millis(),
        };
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_vec_pretty(&manifest)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }
}

/// Parses `argv` and executes one subcommand. Returns the process exit
/// code: zero on success, nonzero with a diagnostic on the error stream for
/// config or validation failures.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return err.exit_code();
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Reduce(args) => reduce(args),
        Command::Curves(args) => curves(args),
        Command::Satellite(args) => satellite(args),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let mut config: ScenarioConfig = read_json(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .context("cannot build worker pool")?;
    let mut out = OutputSet::new(&args.out)?;

    emit_run(&mut out, &pool, &config, args.format, "")?;
    if config.kind == ScenarioKind::MemoryComparison {
        // The comparison runs the same scenario again with the memory
        // channels flipped, so both sides land next to each other.
        let mut flipped = config.clone();
        flipped.temporal.memories_enabled = !config.temporal.memories_enabled;
        let suffix = if flipped.temporal.memories_enabled { "_memory" } else { "_no_memory" };
        emit_run(&mut out, &pool, &flipped, args.format, suffix)?;
    }

    let echo = serde_json::to_value(&config)?;
    out.finish("simulate", Some(config.seed), echo)
}

fn emit_run(
    out: &mut OutputSet,
    pool: &rayon::ThreadPool,
    config: &ScenarioConfig,
    format: Format,
    suffix: &str,
) -> anyhow::Result<()> {
    let records = pool.install(|| run_scenario(config))?;
    let summary = summarize(&records)?;
    match format {
        Format::Csv => out.write(&format!("records{suffix}.csv"), csv_string(&records).as_bytes())?,
        Format::Json => {
            out.write(&format!("records{suffix}.json"), &serde_json::to_vec_pretty(&records)?)?
        }
    }
    out.write(&format!("summary{suffix}.json"), &serde_json::to_vec_pretty(&summary)?)?;
    Ok(())
}

fn reduce(args: ReduceArgs) -> anyhow::Result<()> {
    let spec: ReduceSpec = read_json(&args.config)?;
    let mut graph = NetworkGraph::from_json(&serde_json::to_string(&spec.graph)?)
        .context("invalid graph document")?;
    let mut reduction = ReductionConfig::new(spec.terminals.iter().copied());
    if let Some(db) = spec.threshold_db {
        reduction = reduction.with_threshold(db);
    }
    reduce_fixpoint(&mut graph, &reduction)?;
    let mut out = OutputSet::new(&args.out)?;
    out.write("reduced.json", graph.to_json().as_bytes())?;
    out.finish("reduce", None, serde_json::to_value(&spec)?)
}

fn curves(args: CurvesArgs) -> anyhow::Result<()> {
    anyhow::ensure!(args.points > 0, "points must be at least 1");
    let grid: Vec<f64> = (1..=args.points).map(|i| i as f64 / args.points as f64).collect();
    let mut table = String::from("e1,paths,eta,fidelity\n");
    for paths in 1..=args.max_paths {
        let curve = analytic_tradeoff(&grid, paths)?;
        for (e1, (eta, fid)) in grid.iter().zip(curve) {
            table.push_str(&format!("{e1},{paths},{eta},{fid}\n"));
        }
    }
    let mut out = OutputSet::new(&args.out)?;
    out.write("curves.csv", table.as_bytes())?;
    let echo = serde_json::json!({ "max_paths": args.max_paths, "points": args.points });
    out.finish("curves", None, echo)
}

fn satellite(args: SatelliteArgs) -> anyhow::Result<()> {
    let config: PassConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => PassConfig::default(),
    };
    let samples = simulate_pass(&config)?;
    let mut table = String::from("t,eta_static,F_static,eta_fs,F_fs,eta_pur,F_pur\n");
    for s in &samples {
        table.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.t,
            s.static_link.eta(),
            s.static_link.fidelity(),
            s.freespace.eta(),
            s.freespace.fidelity(),
            s.purified.eta(),
            s.purified.fidelity(),
        ));
    }
    let mut out = OutputSet::new(&args.out)?;
    out.write("pass.csv", table.as_bytes())?;
    out.finish("satellite", None, serde_json::to_value(&config)?)
}
