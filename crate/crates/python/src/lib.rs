//! Python bindings for the entanglement network engine.
//!
//! Exposes the cost algebra, the network graph with routing and reduction,
//! time-expanded routing, Monte-Carlo scenarios, and the satellite pass
//! model as the `entnet_py` extension module. Build the cdylib with
//! `cargo build --release -p entnet-python` and import it directly; see
//! `python/smoke_test.py` for a worked example.
//!
//! Functions that take a config in Rust take keyword arguments here, and
//! the JSON-configured entry points (scenarios, satellite passes) speak
//! JSON strings in both directions so Python stays schema-agnostic.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use entnet::bench;
use entnet::cost;
use entnet::graph::{self, ChannelKind, NetworkGraph, NodeRecord};
use entnet::reduction::{self, ReductionConfig};
use entnet::routing::{self, RoutingConfig};
use entnet::satellite;
use entnet::temporal;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn kind_name(kind: ChannelKind) -> &'static str {
    match kind {
        ChannelKind::Fiber => "fiber",
        ChannelKind::Freespace => "freespace",
        ChannelKind::Memory => "memory",
        ChannelKind::Asynchronous => "asynchronous",
    }
}

/// Additive channel cost: attenuation and dephasing, both in decibels.
#[pyclass(name = "CostVector", from_py_object)]
#[derive(Clone, Copy)]
struct PyCostVector(cost::CostVector);

#[pymethods]
impl PyCostVector {
    #[new]
    fn new(loss_db: f64, deph_db: f64) -> PyResult<Self> {
        cost::CostVector::new(loss_db, deph_db).map(PyCostVector).map_err(err)
    }

    #[staticmethod]
    fn zero() -> Self {
        PyCostVector(cost::CostVector::ZERO)
    }

    /// The sentinel for an unusable channel.
    #[staticmethod]
    fn blocked() -> Self {
        PyCostVector(cost::CostVector::BLOCKED)
    }

    #[getter]
    fn loss_db(&self) -> f64 {
        self.0.loss_db()
    }

    #[getter]
    fn deph_db(&self) -> f64 {
        self.0.deph_db()
    }

    fn is_blocked(&self) -> bool {
        self.0.is_blocked()
    }

    fn magnitude_db(&self) -> f64 {
        self.0.magnitude_db()
    }

    /// Converts to transmission probability and fidelity.
    fn to_physical(&self) -> PyPhysicalCost {
        PyPhysicalCost(cost::to_physical(self.0))
    }

    fn __add__(&self, other: &Self) -> Self {
        PyCostVector(self.0 + other.0)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("CostVector(loss_db={}, deph_db={})", self.0.loss_db(), self.0.deph_db())
    }
}

/// Physical channel figures: success probability `eta` and fidelity.
#[pyclass(name = "PhysicalCost", from_py_object)]
#[derive(Clone, Copy)]
struct PyPhysicalCost(cost::PhysicalCost);

#[pymethods]
impl PyPhysicalCost {
    #[new]
    fn new(eta: f64, fidelity: f64) -> PyResult<Self> {
        cost::PhysicalCost::new(eta, fidelity).map(PyPhysicalCost).map_err(err)
    }

    #[staticmethod]
    fn perfect() -> Self {
        PyPhysicalCost(cost::PhysicalCost::PERFECT)
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.0.eta()
    }

    #[getter]
    fn fidelity(&self) -> f64 {
        self.0.fidelity()
    }

    /// Converts back to decibel costs.
    fn to_cost_vector(&self) -> PyCostVector {
        PyCostVector(cost::from_physical(self.0))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("PhysicalCost(eta={}, fidelity={})", self.0.eta(), self.0.fidelity())
    }
}

/// Fidelity after an entanglement swap joins two links.
#[pyfunction]
fn swap_fidelity(f1: f64, f2: f64) -> f64 {
    cost::swap_fidelity(f1, f2)
}

/// Fidelity after purifying two links into one.
#[pyfunction]
fn purify_fidelity(f1: f64, f2: f64) -> f64 {
    cost::purify_fidelity(f1, f2)
}

/// Series composition of two links by an entanglement swap.
#[pyfunction]
fn swap_compose(a: PyPhysicalCost, b: PyPhysicalCost) -> PyPhysicalCost {
    PyPhysicalCost(cost::swap_compose(a.0, b.0))
}

/// Parallel composition of two links by purification.
#[pyfunction]
fn purify(a: PyPhysicalCost, b: PyPhysicalCost) -> PyPhysicalCost {
    PyPhysicalCost(cost::purify(a.0, b.0))
}

/// Purifies any number of links; the result is order-independent.
#[pyfunction]
fn purify_n(costs: Vec<PyPhysicalCost>) -> PyResult<PyPhysicalCost> {
    let inner: Vec<cost::PhysicalCost> = costs.iter().map(|c| c.0).collect();
    cost::purify_n(&inner).map(PyPhysicalCost).map_err(err)
}

/// Number of distinct binary purification trees over `leaves` links, or
/// None when the count overflows.
#[pyfunction]
fn tree_count(leaves: usize) -> Option<u128> {
    cost::tree_count(leaves)
}

/// End-to-end cost of a `diameter`-hop line, each hop purified from
/// `branching` copies of `edge` and chained by probabilistic swaps.
#[pyfunction]
fn area_law(
    branching: usize,
    diameter: usize,
    edge: PyPhysicalCost,
    swap_success: f64,
) -> PyResult<PyPhysicalCost> {
    cost::area_law(branching, diameter, edge.0, swap_success)
        .map(PyPhysicalCost)
        .map_err(err)
}

/// Multigraph of nodes and channels; parallel channels are first-class.
#[pyclass(name = "NetworkGraph", skip_from_py_object)]
#[derive(Clone)]
struct PyNetworkGraph {
    inner: NetworkGraph,
}

#[pymethods]
impl PyNetworkGraph {
    #[new]
    fn new() -> Self {
        PyNetworkGraph { inner: NetworkGraph::new() }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        NetworkGraph::from_json(text)
            .map(|inner| PyNetworkGraph { inner })
            .map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn channel_count(&self) -> usize {
        self.inner.channel_count()
    }

    fn node_ids(&self) -> Vec<u32> {
        self.inner.node_ids().collect()
    }

    fn contains_node(&self, id: u32) -> bool {
        self.inner.contains_node(id)
    }

    fn degree(&self, id: u32) -> usize {
        self.inner.degree(id)
    }

    /// Adds a ground node with the given id.
    fn add_node(&mut self, id: u32) -> PyResult<()> {
        self.inner.add_node(NodeRecord::ground(id)).map_err(err)
    }

    /// Adds an undirected channel and returns its edge id. `kind` is
    /// "fiber" or "freespace".
    #[pyo3(signature = (a, b, cost, kind = "fiber"))]
    fn add_edge(&mut self, a: u32, b: u32, cost: PyCostVector, kind: &str) -> PyResult<u32> {
        let kind = match kind {
            "fiber" => ChannelKind::Fiber,
            "freespace" => ChannelKind::Freespace,
            other => return Err(err(format!("unknown channel kind {other:?}"))),
        };
        self.inner.add_edge(a, b, kind, cost.0).map_err(err)
    }

    /// Removes a node and every channel touching it.
    fn remove_node(&mut self, id: u32) -> PyResult<()> {
        self.inner.remove_node(id).map(|_| ()).map_err(err)
    }

    fn remove_channel(&mut self, id: u32) -> PyResult<()> {
        self.inner.remove_channel(id).map(|_| ()).map_err(err)
    }

    fn set_channel_active(&mut self, id: u32, active: bool) -> PyResult<()> {
        self.inner.set_channel_active(id, active).map_err(err)
    }

    /// Equips (or strips) a node's quantum memory. `cost` is the per-step
    /// surcharge for waiting there; defaults to zero.
    #[pyo3(signature = (id, has_memory, cost = None))]
    fn set_memory(&mut self, id: u32, has_memory: bool, cost: Option<PyCostVector>) -> PyResult<()> {
        let cost = cost.map_or(cost::CostVector::ZERO, |c| c.0);
        self.inner.set_memory(id, has_memory, cost).map_err(err)
    }

    /// Deactivates each channel independently with probability `q`,
    /// deterministically in `seed`. Returns how many were hit.
    fn percolate(&mut self, q: f64, seed: u64) -> PyResult<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        graph::percolate(&mut self.inner, q, &mut rng).map_err(err)
    }

    /// Draws `m` disjoint user pairs uniformly, deterministically in `seed`.
    fn sample_user_pairs(&self, m: usize, seed: u64) -> PyResult<Vec<(u32, u32)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        graph::sample_user_pairs(&self.inner, m, &mut rng).map_err(err)
    }

    /// Shrinks the graph in place, keeping `terminals` and everything that
    /// matters for routing between them: parallel channels collapse by
    /// purification, pass-through nodes by swapping, and (given a
    /// threshold) channels too costly to ever help are dropped.
    #[pyo3(signature = (terminals, threshold_db = None))]
    fn reduce(&mut self, terminals: Vec<u32>, threshold_db: Option<f64>) -> PyResult<()> {
        let mut config = ReductionConfig::new(terminals);
        if let Some(t) = threshold_db {
            config = config.with_threshold(t);
        }
        reduction::reduce_fixpoint(&mut self.inner, &config).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "NetworkGraph(nodes={}, channels={})",
            self.inner.node_count(),
            self.inner.channel_count()
        )
    }
}

/// Square grid of `n * n` nodes with uniform edge cost.
#[pyfunction]
fn build_grid(n: usize, edge_cost: PyCostVector) -> PyResult<PyNetworkGraph> {
    graph::build_grid(n, edge_cost.0)
        .map(|inner| PyNetworkGraph { inner })
        .map_err(err)
}

/// One accepted route between a user pair.
#[pyclass(name = "Path", skip_from_py_object)]
#[derive(Clone)]
struct PyPath(routing::Path);

#[pymethods]
impl PyPath {
    #[getter]
    fn src(&self) -> u32 {
        self.0.src
    }

    #[getter]
    fn dst(&self) -> u32 {
        self.0.dst
    }

    /// Visited nodes, source first.
    #[getter]
    fn nodes(&self) -> Vec<u32> {
        self.0.nodes.clone()
    }

    /// Edge ids in travel order.
    #[getter]
    fn edges(&self) -> Vec<u32> {
        self.0.edges.clone()
    }

    /// Channel kind of each edge, same order.
    #[getter]
    fn kinds(&self) -> Vec<&'static str> {
        self.0.kinds.iter().map(|&k| kind_name(k)).collect()
    }

    /// Sum of edge weights, excluding any layer bias.
    #[getter]
    fn weight(&self) -> f64 {
        self.0.weight
    }

    /// Physical cost of the whole path (series swap along its edges).
    #[getter]
    fn cost(&self) -> PyPhysicalCost {
        PyPhysicalCost(self.0.cost)
    }

    fn hops(&self) -> usize {
        self.0.hops()
    }

    /// Hops over real channels (memory included, virtual attachments not).
    fn network_hops(&self) -> usize {
        self.0.network_hops()
    }

    fn __repr__(&self) -> String {
        format!(
            "Path(src={}, dst={}, hops={}, weight={})",
            self.0.src,
            self.0.dst,
            self.0.hops(),
            self.0.weight
        )
    }
}

/// Everything one pair got out of a routing session.
#[pyclass(name = "RoutingOutcome", skip_from_py_object)]
#[derive(Clone)]
struct PyRoutingOutcome(routing::RoutingOutcome);

#[pymethods]
impl PyRoutingOutcome {
    #[getter]
    fn src(&self) -> u32 {
        self.0.src
    }

    #[getter]
    fn dst(&self) -> u32 {
        self.0.dst
    }

    /// Accepted paths, mutually edge-disjoint.
    #[getter]
    fn paths(&self) -> Vec<PyPath> {
        self.0.paths.iter().cloned().map(PyPath).collect()
    }

    /// Purification of all accepted paths; None when nothing was routed.
    #[getter]
    fn end_to_end(&self) -> Option<PyPhysicalCost> {
        self.0.end_to_end.map(PyPhysicalCost)
    }

    fn path_count(&self) -> usize {
        self.0.path_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "RoutingOutcome(src={}, dst={}, paths={})",
            self.0.src,
            self.0.dst,
            self.0.path_count()
        )
    }
}

fn make_config(
    max_paths: usize,
    threshold: f64,
    w_loss: f64,
    w_deph: f64,
    shared_nodes: bool,
) -> RoutingConfig {
    RoutingConfig { max_paths, threshold, w_loss, w_deph, shared_nodes }
}

/// Cheapest path between two nodes, or None when disconnected.
#[pyfunction]
#[pyo3(signature = (graph, src, dst, threshold = f64::INFINITY, w_loss = 1.0, w_deph = 1.0))]
fn shortest_path(
    graph: &PyNetworkGraph,
    src: u32,
    dst: u32,
    threshold: f64,
    w_loss: f64,
    w_deph: f64,
) -> Option<PyPath> {
    let config = make_config(1, threshold, w_loss, w_deph, false);
    routing::shortest_path(&graph.inner, src, dst, &config).map(PyPath)
}

/// Up to `max_paths` edge-disjoint paths for one pair, cheapest first.
/// The graph is left untouched.
#[pyfunction]
#[pyo3(signature = (graph, src, dst, max_paths = 4, threshold = f64::INFINITY, w_loss = 1.0, w_deph = 1.0))]
fn greedy_multi_path(
    graph: &PyNetworkGraph,
    src: u32,
    dst: u32,
    max_paths: usize,
    threshold: f64,
    w_loss: f64,
    w_deph: f64,
) -> PyRoutingOutcome {
    let config = make_config(max_paths, threshold, w_loss, w_deph, false);
    PyRoutingOutcome(routing::greedy_multi_path(&graph.inner, src, dst, &config))
}

/// Round-robin routing of several pairs competing on one graph. With
/// `shared_nodes` pairs exclude each other per channel instead of
/// committing whole nodes. The graph is left untouched.
#[pyfunction]
#[pyo3(signature = (graph, pairs, max_paths = 4, threshold = f64::INFINITY, w_loss = 1.0, w_deph = 1.0, shared_nodes = false))]
fn greedy_multi_user(
    graph: &PyNetworkGraph,
    pairs: Vec<(u32, u32)>,
    max_paths: usize,
    threshold: f64,
    w_loss: f64,
    w_deph: f64,
    shared_nodes: bool,
) -> Vec<PyRoutingOutcome> {
    let config = make_config(max_paths, threshold, w_loss, w_deph, shared_nodes);
    routing::greedy_multi_user(&graph.inner, &pairs, &config)
        .into_iter()
        .map(PyRoutingOutcome)
        .collect()
}

/// A base graph stacked into `depth` time layers, with memory edges
/// between layers and virtual endpoints for each user pair.
#[pyclass(name = "TemporalMetaGraph")]
struct PyTemporalMetaGraph {
    inner: temporal::TemporalMetaGraph,
}

#[pymethods]
impl PyTemporalMetaGraph {
    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth
    }

    /// Layer-priority increment applied to attachment edges.
    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    /// The user pairs the expansion was built for, in base-graph ids.
    #[getter]
    fn pairs(&self) -> Vec<(u32, u32)> {
        self.inner.pairs.clone()
    }

    /// Nodes per layer.
    fn layer_size(&self) -> usize {
        self.inner.layer_size()
    }

    /// A copy of the expanded graph.
    fn expanded(&self) -> PyNetworkGraph {
        PyNetworkGraph { inner: self.inner.expanded.clone() }
    }

    /// Id of `base`'s copy in `layer`, or None when out of range.
    fn expanded_id(&self, base: u32, layer: usize) -> Option<u32> {
        self.inner.expanded_id(base, layer)
    }

    /// Base node and layer of an expanded id; None for virtual endpoints.
    fn base_of(&self, expanded: u32) -> Option<(u32, usize)> {
        self.inner.base_of(expanded)
    }

    fn source_of(&self, pair: usize) -> PyResult<u32> {
        if pair >= self.inner.pairs.len() {
            return Err(err(format!("no pair {pair}")));
        }
        Ok(self.inner.source_of(pair))
    }

    fn sink_of(&self, pair: usize) -> PyResult<u32> {
        if pair >= self.inner.pairs.len() {
            return Err(err(format!("no pair {pair}")));
        }
        Ok(self.inner.sink_of(pair))
    }

    /// Routes every pair across the layers and reports the utilized depth
    /// and bandwidth along with per-pair outcomes.
    #[pyo3(signature = (max_paths = 4, threshold = f64::INFINITY, w_loss = 1.0, w_deph = 1.0))]
    fn route(
        &self,
        max_paths: usize,
        threshold: f64,
        w_loss: f64,
        w_deph: f64,
    ) -> PyTemporalOutcome {
        let config = make_config(max_paths, threshold, w_loss, w_deph, false);
        let pairs = self.inner.pairs.clone();
        PyTemporalOutcome(temporal::route_temporal(&self.inner, &pairs, &config))
    }

    fn __repr__(&self) -> String {
        format!(
            "TemporalMetaGraph(depth={}, layer_size={}, pairs={})",
            self.inner.depth,
            self.inner.layer_size(),
            self.inner.pairs.len()
        )
    }
}

/// Result of routing on a time-expanded graph.
#[pyclass(name = "TemporalOutcome")]
struct PyTemporalOutcome(temporal::TemporalOutcome);

#[pymethods]
impl PyTemporalOutcome {
    /// Per-pair results, same order as the pairs.
    #[getter]
    fn outcomes(&self) -> Vec<PyRoutingOutcome> {
        self.0.outcomes.iter().cloned().map(PyRoutingOutcome).collect()
    }

    /// Utilized depth (1 when nothing was routed).
    #[getter]
    fn tau(&self) -> usize {
        self.0.tau
    }

    /// Pairs served per time step.
    #[getter]
    fn bandwidth(&self) -> f64 {
        self.0.bandwidth
    }

    /// Like `tau` but 0 when no pair found a path.
    #[getter]
    fn depth_reached(&self) -> usize {
        self.0.depth_reached
    }

    fn __repr__(&self) -> String {
        format!(
            "TemporalOutcome(tau={}, bandwidth={}, depth_reached={})",
            self.0.tau, self.0.bandwidth, self.0.depth_reached
        )
    }
}

/// Stacks `depth` copies of `graph` for the given pairs. `memory_cost` is
/// the network-wide per-step surcharge on memory edges; `epsilon` overrides
/// the automatic layer-priority increment.
#[pyfunction]
#[pyo3(signature = (graph, depth, pairs, memory_cost = None, epsilon = None))]
fn build_meta(
    graph: &PyNetworkGraph,
    depth: usize,
    pairs: Vec<(u32, u32)>,
    memory_cost: Option<PyCostVector>,
    epsilon: Option<f64>,
) -> PyResult<PyTemporalMetaGraph> {
    let memory_cost = memory_cost.map_or(cost::CostVector::ZERO, |c| c.0);
    temporal::build_meta(&graph.inner, depth, memory_cost, &pairs, epsilon)
        .map(|inner| PyTemporalMetaGraph { inner })
        .map_err(err)
}

/// Network bandwidth `M / tau` and the memoryless-to-memory compression
/// ratio.
#[pyfunction]
fn bandwidth_metrics(m: usize, tau: usize, tau_no_memory: usize) -> PyResult<(f64, f64)> {
    temporal::bandwidth_metrics(m, tau, tau_no_memory).map_err(err)
}

/// Runs a Monte-Carlo scenario from its JSON config and returns
/// `(records_csv, summary_json)`.
#[pyfunction]
fn run_scenario(config_json: &str) -> PyResult<(String, String)> {
    let config: bench::ScenarioConfig = serde_json::from_str(config_json).map_err(err)?;
    let records = bench::run_scenario(&config).map_err(err)?;
    let stats = bench::summarize(&records).map_err(err)?;
    let summary = serde_json::to_string_pretty(&stats).map_err(err)?;
    Ok((bench::csv_string(&records), summary))
}

/// Per-pair probabilities of finding 0..=max_paths edge-disjoint paths on
/// an `n * n` grid with both users in the interior.
#[pyfunction]
fn analytic_path_probs(n: usize, max_paths: usize) -> PyResult<Vec<f64>> {
    bench::analytic_path_probs(n, max_paths).map_err(err)
}

/// `(eta, fidelity)` of purifying `paths` routes as the per-path
/// efficiency sweeps over `e1_grid`.
#[pyfunction]
fn analytic_tradeoff(e1_grid: Vec<f64>, paths: usize) -> PyResult<Vec<(f64, f64)>> {
    bench::analytic_tradeoff(&e1_grid, paths).map_err(err)
}

/// Asymptotic secret key rate of BB84 over a pair of given fidelity.
#[pyfunction]
fn secret_key_rate(fidelity: f64, rate: f64) -> PyResult<f64> {
    bench::secret_key_rate(fidelity, rate).map_err(err)
}

/// Simulates a satellite pass over two ground stations and returns the
/// samples as a JSON array. Without a config the reference pass is used.
#[pyfunction]
#[pyo3(signature = (config_json = None))]
fn simulate_pass(config_json: Option<&str>) -> PyResult<String> {
    let config: satellite::PassConfig = match config_json {
        Some(text) => serde_json::from_str(text).map_err(err)?,
        None => satellite::PassConfig::default(),
    };
    let samples = satellite::simulate_pass(&config).map_err(err)?;
    serde_json::to_string_pretty(&samples).map_err(err)
}

#[pymodule]
fn entnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCostVector>()?;
    m.add_class::<PyPhysicalCost>()?;
    m.add_class::<PyNetworkGraph>()?;
    m.add_class::<PyPath>()?;
    m.add_class::<PyRoutingOutcome>()?;
    m.add_class::<PyTemporalMetaGraph>()?;
    m.add_class::<PyTemporalOutcome>()?;
    m.add_function(wrap_pyfunction!(swap_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(purify_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(swap_compose, m)?)?;
    m.add_function(wrap_pyfunction!(purify, m)?)?;
    m.add_function(wrap_pyfunction!(purify_n, m)?)?;
    m.add_function(wrap_pyfunction!(tree_count, m)?)?;
    m.add_function(wrap_pyfunction!(area_law, m)?)?;
    m.add_function(wrap_pyfunction!(build_grid, m)?)?;
    m.add_function(wrap_pyfunction!(shortest_path, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_multi_path, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_multi_user, m)?)?;
    m.add_function(wrap_pyfunction!(build_meta, m)?)?;
    m.add_function(wrap_pyfunction!(bandwidth_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_path_probs, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_tradeoff, m)?)?;
    m.add_function(wrap_pyfunction!(secret_key_rate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_pass, m)?)?;
    Ok(())
}
