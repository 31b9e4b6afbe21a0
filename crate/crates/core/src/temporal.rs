//! Time-expanded routing with quantum memories.
//!
//! The meta-graph stacks `T` copies of the base graph. Nodes with memory get
//! a directed edge to their next-layer copy (waiting one step), and each
//! user pair gets a virtual source wired into every layer's copy of its
//! first endpoint plus a virtual sink collecting every copy of its second.
//! Source and sink attachments at layer `t` carry a bias of `t * epsilon`,
//! with `epsilon` below the smallest real edge weight, so the router prefers
//! the earliest layer that still has capacity without ever trading a shorter
//! path for an earlier one. Memory edges carry [`MEMORY_BIAS_STEPS`] times
//! `epsilon` each, so holding a qubit across a step ranks well below
//! attaching one step later: the router threads through stored entanglement
//! only when waiting saves several layers of working depth, and otherwise
//! hands off asynchronously. Since attachment edges are allocated before
//! memory edges, exact ties also favor asynchronous hand-off.
//!
//! Routing a meta-graph of depth two or more shares nodes between pairs:
//! a node copy occupies the hardware for one slot only, so competing pairs
//! exclude each other per channel, not per node. A depth-1 expansion keeps
//! the static commitment rules.
//!
//! Expanded node ids are `layer * V + rank`, with ranks assigned by
//! ascending base node id, followed by the `2M` virtual endpoints. With one
//! layer and no memories this reduces to the base graph plus inert
//! attachments, and routing results match static routing bit for bit.

use std::collections::{BTreeSet, HashMap};

use crate::cost::CostVector;
use crate::graph::{ChannelKind, ChannelRecord, EdgeId, NetworkGraph, NodeId, NodeKind, NodeRecord};
use crate::routing::{greedy_multi_user, RoutingConfig, RoutingOutcome};
use crate::{Error, Result};

/// Fraction of the smallest positive edge weight used when no explicit
/// layer-priority increment is given.
pub const AUTO_EPSILON_FRACTION: f64 = 1e-6;

/// Priority bias of one memory hop, in units of `epsilon`. Kept well above
/// one so that attaching asynchronously at a later layer outranks holding a
/// qubit in memory unless waiting saves several layers of working depth.
pub const MEMORY_BIAS_STEPS: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct TemporalMetaGraph {
    pub base: NetworkGraph,
    /// Number of layers T.
    pub depth: usize,
    pub expanded: NetworkGraph,
    /// Layer-priority increment applied to attachment edges.
    pub epsilon: f64,
    /// The user pairs the expansion was built for, in base-graph ids.
    pub pairs: Vec<(NodeId, NodeId)>,
    base_ids: Vec<NodeId>,
    rank: HashMap<NodeId, usize>,
}

impl TemporalMetaGraph {
    /// Nodes per layer (V of the base graph).
    pub fn layer_size(&self) -> usize {
        self.base_ids.len()
    }

    pub fn expanded_id(&self, base: NodeId, layer: usize) -> Option<NodeId> {
        if layer >= self.depth {
            return None;
        }
        let r = *self.rank.get(&base)?;
        Some((layer * self.base_ids.len() + r) as NodeId)
    }

    /// Base node and layer of an expanded network node; `None` for the
    /// virtual endpoints.
    pub fn base_of(&self, expanded: NodeId) -> Option<(NodeId, usize)> {
        let v = self.base_ids.len();
        let idx = expanded as usize;
        if v == 0 || idx >= self.depth * v {
            return None;
        }
        Some((self.base_ids[idx % v], idx / v))
    }

    /// Virtual source node of pair `i`.
    pub fn source_of(&self, pair: usize) -> NodeId {
        (self.depth * self.base_ids.len() + 2 * pair) as NodeId
    }

    /// Virtual sink node of pair `i`.
    pub fn sink_of(&self, pair: usize) -> NodeId {
        self.source_of(pair) + 1
    }

    /// Distinct layers in which the outcome's paths traverse real channels
    /// (memory hops and virtual attachments do not count as work).
    pub fn layers_used(&self, outcome: &RoutingOutcome) -> usize {
        let mut layers = BTreeSet::new();
        for p in &outcome.paths {
            for (i, kind) in p.kinds.iter().enumerate() {
                if matches!(kind, ChannelKind::Fiber | ChannelKind::Freespace) {
                    if let Some((_, layer)) = self.base_of(p.nodes[i]) {
                        layers.insert(layer);
                    }
                }
            }
        }
        layers.len()
    }
}

#[derive(Debug, Clone)]
pub struct TemporalOutcome {
    /// Per-pair results on the expanded graph, same order as the pairs.
    pub outcomes: Vec<RoutingOutcome>,
    /// Utilized depth: number of leading layers any accepted path touches
    /// (1 when nothing was routed, so bandwidth stays defined).
    pub tau: usize,
    /// Pairs served per time step, M / tau.
    pub bandwidth: f64,
    /// Like `tau` but 0 when no pair found a path.
    pub depth_reached: usize,
}

fn min_positive_weight(base: &NetworkGraph) -> Option<f64> {
    let mut min: Option<f64> = None;
    for c in base.channels() {
        if !c.active || c.cost.is_blocked() {
            continue;
        }
        let w = c.cost.loss_db() + c.cost.deph_db();
        if w > 0.0 && min.is_none_or(|m| w < m) {
            min = Some(w);
        }
    }
    min
}

/// Builds the time-expanded graph for `pairs` over `depth` layers. Memory
/// edges are created for base nodes flagged `has_memory` and cost
/// `memory_cost` plus the node's own surcharge. `epsilon` defaults to
/// [`AUTO_EPSILON_FRACTION`] of the smallest positive edge weight and must
/// stay below that weight.
pub fn build_meta(
    base: &NetworkGraph,
    depth: usize,
    memory_cost: CostVector,
    pairs: &[(NodeId, NodeId)],
    epsilon: Option<f64>,
) -> Result<TemporalMetaGraph> {
    if depth == 0 {
        return Err(Error::ZeroDepth);
    }
    for n in base.nodes() {
        if n.kind == NodeKind::Asynchronous {
            return Err(Error::InvalidConfig(
                "base graph already contains asynchronous nodes".into(),
            ));
        }
    }
    for &(a, b) in pairs {
        for node in [a, b] {
            if !base.contains_node(node) {
                return Err(Error::UnknownNode(node));
            }
        }
        if a == b {
            return Err(Error::InvalidConfig(format!(
                "pair endpoints coincide at node {a}"
            )));
        }
    }

    let min_weight = min_positive_weight(base);
    let epsilon = match (epsilon, min_weight) {
        (Some(e), _) if !(e > 0.0 && e.is_finite()) => {
            return Err(Error::InvalidConfig(format!(
                "layer increment must be positive and finite, got {e}"
            )));
        }
        (Some(e), Some(m)) if e >= m => {
            return Err(Error::EpsilonTooLarge {
                epsilon: e,
                min_weight: m,
            });
        }
        (Some(e), Some(_)) => e,
        (None, Some(m)) => m * AUTO_EPSILON_FRACTION,
        (_, None) => {
            return Err(Error::InvalidConfig(
                "base graph has no positive-weight channel to scale the layer increment against"
                    .into(),
            ));
        }
    };

    let base_ids: Vec<NodeId> = base.node_ids().collect();
    let v = base_ids.len();
    let rank: HashMap<NodeId, usize> =
        base_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let node_at = |layer: usize, base_id: NodeId| (layer * v + rank[&base_id]) as NodeId;

    let mut expanded = NetworkGraph::new();
    for layer in 0..depth {
        for &id in &base_ids {
            let n = base.node(id).expect("listed node");
            expanded.add_node(NodeRecord {
                id: node_at(layer, id),
                ..n.clone()
            })?;
        }
    }
    for i in 0..pairs.len() {
        for offset in 0..2 {
            expanded.add_node(NodeRecord {
                id: (depth * v + 2 * i + offset) as NodeId,
                kind: NodeKind::Asynchronous,
                position: None,
                velocity: None,
                has_memory: false,
                memory_cost: CostVector::ZERO,
            })?;
        }
    }

    let mut next_edge: EdgeId = 0;
    let mut alloc = || {
        let id = next_edge;
        next_edge += 1;
        id
    };

    // Layer copies of every base channel first: with one layer the ids
    // coincide with the base ids.
    for layer in 0..depth {
        for c in base.channels() {
            expanded.add_channel(ChannelRecord {
                edge_id: alloc(),
                endpoints: (node_at(layer, c.endpoints.0), node_at(layer, c.endpoints.1)),
                ..c.clone()
            })?;
        }
    }
    // Attachment edges next, then memory edges, so that equal-weight and
    // equal-bias ties resolve toward asynchronous hand-off rather than
    // waiting in memory.
    for (i, &(a, b)) in pairs.iter().enumerate() {
        let source = (depth * v + 2 * i) as NodeId;
        let sink = source + 1;
        for layer in 0..depth {
            expanded.add_channel(ChannelRecord {
                edge_id: alloc(),
                endpoints: (source, node_at(layer, a)),
                kind: ChannelKind::Asynchronous,
                cost: CostVector::ZERO,
                directed: true,
                active: true,
                bias: layer as f64 * epsilon,
            })?;
        }
        for layer in 0..depth {
            expanded.add_channel(ChannelRecord {
                edge_id: alloc(),
                endpoints: (node_at(layer, b), sink),
                kind: ChannelKind::Asynchronous,
                cost: CostVector::ZERO,
                directed: true,
                active: true,
                bias: layer as f64 * epsilon,
            })?;
        }
    }
    for layer in 0..depth.saturating_sub(1) {
        for &id in &base_ids {
            let n = base.node(id).expect("listed node");
            if !n.has_memory {
                continue;
            }
            expanded.add_channel(ChannelRecord {
                edge_id: alloc(),
                endpoints: (node_at(layer, id), node_at(layer + 1, id)),
                kind: ChannelKind::Memory,
                cost: memory_cost + n.memory_cost,
                directed: true,
                active: true,
                bias: MEMORY_BIAS_STEPS * epsilon,
            })?;
        }
    }

    Ok(TemporalMetaGraph {
        base: base.clone(),
        depth,
        expanded,
        epsilon,
        pairs: pairs.to_vec(),
        base_ids,
        rank,
    })
}

/// Routes every pair from its virtual source to its sink over the expanded
/// graph (which stays untouched). `pairs` must be the ones the meta-graph
/// was built for. Reported path weights exclude the layer bias, so they
/// equal the sum of real edge weights exactly.
///
/// With two or more layers the session shares nodes between pairs (each
/// node copy ties up the hardware for one slot only); a depth-1 expansion
/// keeps the static commitment rules so it degenerates to static routing.
pub fn route_temporal(
    meta: &TemporalMetaGraph,
    pairs: &[(NodeId, NodeId)],
    config: &RoutingConfig,
) -> TemporalOutcome {
    debug_assert_eq!(pairs, meta.pairs.as_slice());
    let endpoint_pairs: Vec<(NodeId, NodeId)> = (0..pairs.len())
        .map(|i| (meta.source_of(i), meta.sink_of(i)))
        .collect();
    let mut session = config.clone();
    session.shared_nodes = config.shared_nodes || meta.depth > 1;
    let outcomes = greedy_multi_user(&meta.expanded, &endpoint_pairs, &session);

    let mut max_layer: Option<usize> = None;
    for outcome in &outcomes {
        for p in &outcome.paths {
            for &node in &p.nodes {
                if let Some((_, layer)) = meta.base_of(node) {
                    max_layer = Some(max_layer.map_or(layer, |m: usize| m.max(layer)));
                }
            }
        }
    }
    let depth_reached = max_layer.map_or(0, |l| l + 1);
    let tau = depth_reached.max(1);
    let bandwidth = pairs.len() as f64 / tau as f64;
    TemporalOutcome {
        outcomes,
        tau,
        bandwidth,
        depth_reached,
    }
}

/// Network bandwidth `B = M / tau` and the compression ratio between the
/// memoryless and memory-equipped runs.
pub fn bandwidth_metrics(m: usize, tau: usize, tau_no_memory: usize) -> Result<(f64, f64)> {
    if m == 0 || tau == 0 || tau_no_memory == 0 {
        return Err(Error::InvalidConfig(
            "bandwidth needs at least one pair and one utilized layer".into(),
        ));
    }
    let b = m as f64 / tau as f64;
    let b_no_memory = m as f64 / tau_no_memory as f64;
    Ok((b, b_no_memory / b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_grid;
    use crate::routing::greedy_multi_user_mut;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::time::Instant;

    fn one_db() -> CostVector {
        CostVector::new(1.0, 1.0).unwrap()
    }

    fn equip_all(g: &mut NetworkGraph, cost: CostVector) {
        let ids: Vec<NodeId> = g.node_ids().collect();
        for id in ids {
            g.set_memory(id, true, cost).unwrap();
        }
    }

    fn disjoint_pairs(g: &NetworkGraph, m: usize, seed: u64) -> Vec<(NodeId, NodeId)> {
        let mut rng = StdRng::seed_from_u64(seed);
        crate::graph::sample_user_pairs(g, m, &mut rng).unwrap()
    }

    #[test]
    fn expanded_counts_match_formula() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..6 {
            let n = rng.random_range(3..7);
            let depth = rng.random_range(1..6);
            let mut g = build_grid(n, one_db()).unwrap();
            let with_memory = rng.random_range(0..2) == 1;
            if with_memory {
                equip_all(&mut g, CostVector::ZERO);
            }
            let m = rng.random_range(1..=(n * n / 2).min(5));
            let pairs = disjoint_pairs(&g, m, rng.random());
            let meta = build_meta(&g, depth, CostVector::ZERO, &pairs, None).unwrap();
            let v = n * n;
            assert_eq!(meta.expanded.node_count(), depth * v + 2 * m);
            let mem_edges = if with_memory { (depth - 1) * v } else { 0 };
            assert_eq!(
                meta.expanded.channel_count(),
                depth * g.channel_count() + 2 * m * depth + mem_edges
            );
        }
    }

    #[test]
    fn id_map_round_trips() {
        let g = build_grid(4, one_db()).unwrap();
        let meta = build_meta(&g, 3, CostVector::ZERO, &[(0, 15)], None).unwrap();
        for layer in 0..3 {
            for base in g.node_ids() {
                let id = meta.expanded_id(base, layer).unwrap();
                assert_eq!(meta.base_of(id), Some((base, layer)));
            }
        }
        assert!(meta.expanded_id(0, 3).is_none());
        assert!(meta.base_of(meta.source_of(0)).is_none());
        assert!(meta.base_of(meta.sink_of(0)).is_none());
    }

    #[test]
    fn memory_edges_step_one_layer_forward() {
        let mut g = build_grid(4, one_db()).unwrap();
        equip_all(&mut g, CostVector::new(0.1, 0.2).unwrap());
        let extra = CostVector::new(0.3, 0.0).unwrap();
        let meta = build_meta(&g, 4, extra, &[(1, 14)], None).unwrap();
        let mut count = 0;
        for c in meta.expanded.channels() {
            if c.kind != ChannelKind::Memory {
                continue;
            }
            count += 1;
            assert!(c.directed);
            let (from_base, from_layer) = meta.base_of(c.endpoints.0).unwrap();
            let (to_base, to_layer) = meta.base_of(c.endpoints.1).unwrap();
            assert_eq!(from_base, to_base);
            assert_eq!(to_layer, from_layer + 1);
            assert_eq!(c.cost, CostVector::new(0.4, 0.2).unwrap());
            // Waiting one step ranks several layers below entering later.
            assert_eq!(c.bias, MEMORY_BIAS_STEPS * meta.epsilon);
        }
        assert_eq!(count, 3 * 16);
    }

    #[test]
    fn no_accepted_path_ever_goes_back_in_time() {
        let mut g = build_grid(6, one_db()).unwrap();
        equip_all(&mut g, CostVector::ZERO);
        let pairs = disjoint_pairs(&g, 6, 11);
        let meta = build_meta(&g, 4, CostVector::ZERO, &pairs, None).unwrap();
        let result = route_temporal(&meta, &pairs, &RoutingConfig::default());
        let mut saw_path = false;
        for outcome in &result.outcomes {
            for p in &outcome.paths {
                saw_path = true;
                let mut last_layer = 0;
                for &node in &p.nodes {
                    if let Some((_, layer)) = meta.base_of(node) {
                        assert!(layer >= last_layer, "layer decreased");
                        last_layer = layer;
                    }
                }
            }
        }
        assert!(saw_path);
    }

    #[test]
    fn single_layer_without_memory_matches_static_routing() {
        let g = build_grid(6, one_db()).unwrap();
        let config = RoutingConfig::default();
        for seed in 0..5 {
            let pairs = disjoint_pairs(&g, 5, seed);
            let static_outcomes = greedy_multi_user(&g, &pairs, &config);
            let meta = build_meta(&g, 1, CostVector::ZERO, &pairs, None).unwrap();
            let result = route_temporal(&meta, &pairs, &config);
            assert_eq!(result.depth_reached, 1);
            for (s, t) in static_outcomes.iter().zip(&result.outcomes) {
                assert_eq!(s.path_count(), t.path_count());
                for (sp, tp) in s.paths.iter().zip(&t.paths) {
                    // Strip the two attachment hops; everything else is the
                    // same edge ids with the same accumulated cost.
                    assert_eq!(tp.edges[1..tp.edges.len() - 1], sp.edges[..]);
                    assert_eq!(tp.weight.to_bits(), sp.weight.to_bits());
                    assert_eq!(tp.cost.eta().to_bits(), sp.cost.eta().to_bits());
                    assert_eq!(tp.cost.fidelity().to_bits(), sp.cost.fidelity().to_bits());
                }
                match (s.end_to_end, t.end_to_end) {
                    (None, None) => {}
                    (Some(a), Some(b)) => {
                        assert_eq!(a.eta().to_bits(), b.eta().to_bits());
                        assert_eq!(a.fidelity().to_bits(), b.fidelity().to_bits());
                    }
                    _ => panic!("one side found paths, the other did not"),
                }
            }
        }
    }

    #[test]
    fn reported_weights_carry_no_bias_residue() {
        // A lone pair routed across several layers: every accepted path
        // weight must be an exact multiple of the per-hop weight.
        let g = build_grid(5, one_db()).unwrap();
        let pairs = vec![(6u32, 18u32)];
        let meta = build_meta(&g, 3, CostVector::ZERO, &pairs, None).unwrap();
        let result = route_temporal(&meta, &pairs, &RoutingConfig::default());
        assert_eq!(result.outcomes[0].path_count(), 4);
        for p in &result.outcomes[0].paths {
            let expected = 2.0 * p.network_hops() as f64;
            assert_eq!(p.weight.to_bits(), expected.to_bits());
        }
    }

    #[test]
    fn extra_layers_decongest_a_crowded_grid() {
        let g = build_grid(5, one_db()).unwrap();
        let pairs = disjoint_pairs(&g, 10, 3);
        let config = RoutingConfig::default();
        let route = |depth: usize| {
            let meta = build_meta(&g, depth, CostVector::ZERO, &pairs, None).unwrap();
            route_temporal(&meta, &pairs, &config)
        };
        let shallow = route(1);
        let deep = route(8);
        let failed = |r: &TemporalOutcome| {
            r.outcomes.iter().filter(|o| o.path_count() == 0).count()
        };
        let granted = |r: &TemporalOutcome| -> usize {
            r.outcomes.iter().map(|o| o.path_count()).sum()
        };
        assert!(failed(&deep) <= failed(&shallow));
        assert!(granted(&deep) > granted(&shallow));
        assert!(deep.depth_reached <= 8);
    }

    #[test]
    fn one_layer_per_pair_guarantees_service() {
        // With as many layers as pairs and one path each, nobody starves.
        let g = build_grid(5, one_db()).unwrap();
        let config = RoutingConfig {
            max_paths: 1,
            ..RoutingConfig::default()
        };
        for seed in 0..10 {
            let pairs = disjoint_pairs(&g, 8, 100 + seed);
            let meta = build_meta(&g, 8, CostVector::ZERO, &pairs, None).unwrap();
            let result = route_temporal(&meta, &pairs, &config);
            for outcome in &result.outcomes {
                assert_eq!(outcome.path_count(), 1);
            }
        }
    }

    #[test]
    fn attachment_points_serve_several_paths_per_pair() {
        let mut g = build_grid(5, one_db()).unwrap();
        equip_all(&mut g, CostVector::ZERO);
        let pairs = disjoint_pairs(&g, 4, 9);
        let meta = build_meta(&g, 3, CostVector::ZERO, &pairs, None).unwrap();
        let endpoint_pairs: Vec<(NodeId, NodeId)> = (0..pairs.len())
            .map(|i| (meta.source_of(i), meta.sink_of(i)))
            .collect();
        let config = RoutingConfig {
            shared_nodes: true,
            ..RoutingConfig::default()
        };
        let mut working = meta.expanded.clone();
        let outcomes = greedy_multi_user_mut(&mut working, &endpoint_pairs, &config);
        // Attachment edges are never spent, so a pair keeps entering the
        // layers through the same source and sink nodes.
        assert!(outcomes.iter().any(|o| o.path_count() > 1));
        // A time-shared session spends channels, never node hardware: the
        // caller's copy keeps every node and loses exactly the worked edges.
        assert_eq!(working.node_count(), meta.expanded.node_count());
        for outcome in &outcomes {
            for path in &outcome.paths {
                for (&e, kind) in path.edges.iter().zip(&path.kinds) {
                    if *kind == ChannelKind::Asynchronous {
                        assert!(working.channel(e).is_some(), "attachment {e} spent");
                    } else {
                        assert!(working.channel(e).is_none(), "edge {e} still present");
                    }
                }
            }
        }
    }

    #[test]
    fn epsilon_is_validated_against_edge_weights() {
        let g = build_grid(3, one_db()).unwrap();
        let pairs = vec![(0u32, 8u32)];
        // Cheapest edge weighs 2; anything at or above that corrupts path
        // selection.
        assert!(matches!(
            build_meta(&g, 2, CostVector::ZERO, &pairs, Some(2.0)),
            Err(Error::EpsilonTooLarge { .. })
        ));
        assert!(build_meta(&g, 2, CostVector::ZERO, &pairs, Some(1.9)).is_ok());
        assert!(build_meta(&g, 2, CostVector::ZERO, &pairs, Some(0.0)).is_err());
        let auto = build_meta(&g, 2, CostVector::ZERO, &pairs, None).unwrap();
        assert!((auto.epsilon - 2.0 * AUTO_EPSILON_FRACTION).abs() < 1e-18);
        assert!(matches!(
            build_meta(&g, 0, CostVector::ZERO, &pairs, None),
            Err(Error::ZeroDepth)
        ));
        assert!(matches!(
            build_meta(&g, 2, CostVector::ZERO, &[(0, 99)], None),
            Err(Error::UnknownNode(99))
        ));
        assert!(build_meta(&g, 2, CostVector::ZERO, &[(3, 3)], None).is_err());
    }

    #[test]
    fn bandwidth_endpoints() {
        assert_eq!(bandwidth_metrics(50, 50, 50).unwrap().0, 1.0);
        assert_eq!(bandwidth_metrics(50, 1, 1).unwrap().0, 50.0);
        let (_, rc) = bandwidth_metrics(10, 4, 4).unwrap();
        assert_eq!(rc, 1.0);
        let (_, rc) = bandwidth_metrics(10, 2, 6).unwrap();
        assert!((rc - 2.0 / 6.0).abs() < 1e-15);
        assert!(bandwidth_metrics(10, 0, 1).is_err());
        assert!(bandwidth_metrics(0, 1, 1).is_err());
    }

    #[test]
    fn runtime_grows_polynomially_in_pair_count() {
        // Doubling the pair count must not blow past a polynomial step.
        let n = 11;
        let g = build_grid(n, one_db()).unwrap();
        let config = RoutingConfig::default();
        let time_for = |m: usize| {
            let pairs = disjoint_pairs(&g, m, 42);
            let meta = build_meta(&g, 8, CostVector::ZERO, &pairs, None).unwrap();
            // Warm up once, then take the fastest of three runs.
            route_temporal(&meta, &pairs, &config);
            (0..3)
                .map(|_| {
                    let start = Instant::now();
                    route_temporal(&meta, &pairs, &config);
                    start.elapsed()
                })
                .min()
                .unwrap()
        };
        for m in [5usize, 10, 25] {
            let base = time_for(m);
            let doubled = time_for(2 * m);
            let ratio = doubled.as_secs_f64() / base.as_secs_f64().max(1e-9);
            assert!(ratio <= 10.0, "m={m}: ratio {ratio}");
        }
    }
}
