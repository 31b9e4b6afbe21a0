//! Monte-Carlo scenario harness.
//!
//! A scenario fixes a grid topology, an edge cost, a user count, and a
//! routing mode; each sample rebuilds the graph, applies channel failures,
//! draws user pairs, routes them, and emits one record per pair. Samples are
//! independent: sample `i` always derives its randomness from RNG stream `i`
//! of the configured seed, so results are identical no matter how many
//! workers the samples are spread across or in which order they finish.

pub mod analytic;
pub mod stats;

pub use analytic::{
    analytic_path_probs, analytic_tradeoff, manhattan_distribution, mean_manhattan,
    purified_scaling_estimates, secret_key_rate, tradeoff_point, unification_advantage,
    ScalingEstimate,
};
pub use stats::{heatmap_bins, network_rates, summarize, threshold_rate, HeatMap, SummaryStats};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostVector;
use crate::graph::{build_grid, percolate, sample_user_pairs, ChannelKind, NetworkGraph, NodeId};
use crate::routing::{greedy_multi_user, Path, RoutingConfig, RoutingOutcome};
use crate::temporal::{build_meta, route_temporal};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    SingleUserGridsize,
    MultiUser,
    Percolation,
    GridScaling,
    TemporalDepth,
    MemoryComparison,
}

impl ScenarioKind {
    pub fn is_temporal(self) -> bool {
        matches!(self, ScenarioKind::TemporalDepth | ScenarioKind::MemoryComparison)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoutingSettings {
    pub max_paths: usize,
    /// Reject paths heavier than this many dB; unlimited when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_db: Option<f64>,
    pub w_loss: f64,
    pub w_deph: f64,
}

impl Default for RoutingSettings {
    fn default() -> Self {
        RoutingSettings {
            max_paths: 4,
            threshold_db: None,
            w_loss: 1.0,
            w_deph: 1.0,
        }
    }
}

impl RoutingSettings {
    pub fn to_config(&self) -> RoutingConfig {
        RoutingConfig {
            max_paths: self.max_paths,
            threshold: self.threshold_db.unwrap_or(f64::INFINITY),
            w_loss: self.w_loss,
            w_deph: self.w_deph,
            shared_nodes: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemporalSettings {
    /// Layer count; defaults to 5 (20 for memory comparisons).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    pub memory_cost_db: CostVector,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub async_epsilon: Option<f64>,
    pub memories_enabled: bool,
}

impl Default for TemporalSettings {
    fn default() -> Self {
        TemporalSettings {
            depth: None,
            memory_cost_db: CostVector::ZERO,
            async_epsilon: None,
            memories_enabled: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default = "default_edge_cost")]
    pub edge_cost: CostVector,
    /// User pairs per sample; defaults to 1 for single-pair scenarios and 50
    /// for saturated ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub users: Option<usize>,
    /// Defaults to 5000 for static scenarios, 1000 for temporal ones, 500
    /// for grid scaling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Probability that any given channel has failed.
    #[serde(default)]
    pub percolation_q: f64,
    #[serde(default)]
    pub routing: RoutingSettings,
    #[serde(default)]
    pub temporal: TemporalSettings,
}

fn default_grid_n() -> usize {
    10
}

fn default_edge_cost() -> CostVector {
    CostVector::new(1.0, 1.0).expect("constant cost")
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind) -> Self {
        ScenarioConfig {
            kind,
            grid_n: default_grid_n(),
            edge_cost: default_edge_cost(),
            users: None,
            samples: None,
            seed: 0,
            percolation_q: 0.0,
            routing: RoutingSettings::default(),
            temporal: TemporalSettings::default(),
        }
    }

    pub fn user_count(&self) -> usize {
        self.users.unwrap_or(match self.kind {
            ScenarioKind::SingleUserGridsize | ScenarioKind::Percolation => 1,
            _ => 50,
        })
    }

    pub fn sample_count(&self) -> usize {
        self.samples.unwrap_or(match self.kind {
            ScenarioKind::GridScaling => 500,
            k if k.is_temporal() => 1000,
            _ => 5000,
        })
    }

    pub fn temporal_depth(&self) -> usize {
        self.temporal.depth.unwrap_or(match self.kind {
            ScenarioKind::MemoryComparison => 20,
            _ => 5,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 2 {
            return Err(Error::GridTooSmall(self.grid_n));
        }
        if self.sample_count() == 0 {
            return Err(Error::InvalidConfig("samples must be at least 1".into()));
        }
        let users = self.user_count();
        let nodes = self.grid_n * self.grid_n;
        if users == 0 {
            return Err(Error::InvalidConfig("users must be at least 1".into()));
        }
        if 2 * users > nodes {
            return Err(Error::TooManyPairs {
                requested: users,
                available: nodes,
            });
        }
        if !(0.0..=1.0).contains(&self.percolation_q) {
            return Err(Error::InvalidProbability(self.percolation_q));
        }
        if self.edge_cost.is_blocked() {
            return Err(Error::InvalidConfig("edge cost may not be blocked".into()));
        }
        if self.routing.max_paths == 0 {
            return Err(Error::InvalidConfig("max_paths must be at least 1".into()));
        }
        for w in [self.routing.w_loss, self.routing.w_deph] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "weight components must be finite and non-negative, got {w}"
                )));
            }
        }
        if self.routing.w_loss == 0.0 && self.routing.w_deph == 0.0 {
            return Err(Error::InvalidConfig(
                "at least one weight component must be positive".into(),
            ));
        }
        if let Some(t) = self.routing.threshold_db {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "threshold_db must be positive and finite, got {t}"
                )));
            }
        }
        if self.kind.is_temporal() {
            if self.temporal_depth() == 0 {
                return Err(Error::ZeroDepth);
            }
            if let Some(e) = self.temporal.async_epsilon {
                if !(e.is_finite() && e > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "async_epsilon must be positive and finite, got {e}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One routed pair in one Monte-Carlo sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: u64,
    pub pair_id: u32,
    pub src: NodeId,
    pub dst: NodeId,
    pub path_count: usize,
    /// Transmission hops per accepted path (memory waits not counted).
    pub lengths: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    /// Distinct layers the paths did transmission work in; 1 for static
    /// routing. Absent when no path was found.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers_used: Option<usize>,
    pub manhattan: usize,
    pub found: bool,
    pub last_in_queue: bool,
    /// Deepest layer any routed path of the sample reached, counted from 1.
    /// Shared by every record of a temporal sample; absent for static runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth_reached: Option<usize>,
}

pub const CSV_HEADER: &str =
    "sample_id,pair_id,src,dst,path_count,len1,len2,len3,len4,eta,fidelity,layers_used";

fn csv_row(r: &SampleRecord) -> String {
    let len = |i: usize| r.lengths.get(i).map(|l| l.to_string()).unwrap_or_default();
    let opt_f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let opt_u = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.sample_id,
        r.pair_id,
        r.src,
        r.dst,
        r.path_count,
        len(0),
        len(1),
        len(2),
        len(3),
        opt_f(r.eta),
        opt_f(r.fidelity),
        opt_u(r.layers_used)
    )
}

pub fn write_csv<W: std::io::Write>(mut out: W, records: &[SampleRecord]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", csv_row(r))?;
    }
    Ok(())
}

pub fn csv_string(records: &[SampleRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("rows are ascii")
}

fn manhattan_between(n: usize, a: NodeId, b: NodeId) -> usize {
    let (ar, ac) = (a as usize / n, a as usize % n);
    let (br, bc) = (b as usize / n, b as usize % n);
    ar.abs_diff(br) + ac.abs_diff(bc)
}

fn transmission_hops(p: &Path) -> usize {
    p.kinds
        .iter()
        .filter(|k| matches!(k, ChannelKind::Fiber | ChannelKind::Freespace))
        .count()
}

fn make_record(
    sample_id: u64,
    pair_index: usize,
    users: usize,
    pair: (NodeId, NodeId),
    grid_n: usize,
    outcome: &RoutingOutcome,
    layers_used: Option<usize>,
    depth_reached: Option<usize>,
) -> SampleRecord {
    let found = outcome.path_count() > 0;
    let (eta, fidelity) = outcome
        .end_to_end
        .map(|p| (p.eta(), p.fidelity()))
        .unzip();
    SampleRecord {
        sample_id,
        pair_id: pair_index as u32,
        src: pair.0,
        dst: pair.1,
        path_count: outcome.path_count(),
        lengths: outcome.paths.iter().map(transmission_hops).collect(),
        eta,
        fidelity,
        layers_used,
        manhattan: manhattan_between(grid_n, pair.0, pair.1),
        found,
        last_in_queue: pair_index + 1 == users,
        depth_reached,
    }
}

fn run_sample(config: &ScenarioConfig, sample_id: u64) -> Result<Vec<SampleRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(sample_id);

    let n = config.grid_n;
    let mut g = build_grid(n, config.edge_cost)?;
    percolate(&mut g, config.percolation_q, &mut rng)?;
    let users = config.user_count();
    let pairs = sample_user_pairs(&g, users, &mut rng)?;
    let routing = config.routing.to_config();

    let mut records = Vec::with_capacity(users);
    if config.kind.is_temporal() {
        if config.temporal.memories_enabled {
            let ids: Vec<NodeId> = g.node_ids().collect();
            for id in ids {
                g.set_memory(id, true, CostVector::ZERO)?;
            }
        }
        let meta = build_meta(
            &g,
            config.temporal_depth(),
            config.temporal.memory_cost_db,
            &pairs,
            config.temporal.async_epsilon,
        )?;
        let result = route_temporal(&meta, &pairs, &routing);
        for (i, outcome) in result.outcomes.iter().enumerate() {
            let layers = (outcome.path_count() > 0).then(|| meta.layers_used(outcome));
            let depth = Some(result.depth_reached);
            records.push(make_record(sample_id, i, users, pairs[i], n, outcome, layers, depth));
        }
    } else {
        let outcomes = greedy_multi_user(&g, &pairs, &routing);
        for (i, outcome) in outcomes.iter().enumerate() {
            let layers = (outcome.path_count() > 0).then_some(1);
            records.push(make_record(sample_id, i, users, pairs[i], n, outcome, layers, None));
        }
    }
    Ok(records)
}

/// Runs every sample of the scenario and returns the records in sample
/// order, one per user pair. Samples are fanned out across the current rayon
/// pool; the output does not depend on the worker count.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<SampleRecord>> {
    config.validate()?;
    let samples = config.sample_count() as u64;
    let nested: Result<Vec<Vec<SampleRecord>>> = (0..samples)
        .into_par_iter()
        .map(|s| run_sample(config, s))
        .collect();
    Ok(nested?.into_iter().flatten().collect())
}

/// Convenience wrapper equipping a graph clone with memories everywhere,
/// used when comparing memory and memoryless variants outside scenarios.
pub fn with_memories(graph: &NetworkGraph, cost: CostVector) -> NetworkGraph {
    let mut g = graph.clone();
    let ids: Vec<NodeId> = g.node_ids().collect();
    for id in ids {
        g.set_memory(id, true, cost).expect("listed node");
    }
    g
}
