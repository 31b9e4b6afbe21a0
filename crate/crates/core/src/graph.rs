//! Multigraph network model.
//!
//! Channels are keyed by stable edge ids rather than endpoint pairs so that
//! parallel channels (the raw material of purification) are first-class.
//! All maps are ordered; every iteration over nodes or channels is
//! deterministic, which the seeded Monte-Carlo harness relies on.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{from_physical, CostVector};
use crate::satellite::{effective_distance, freespace_cost, AtmosphereModel};
use crate::{Error, Result};

pub type NodeId = u32;
pub type EdgeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Ground,
    Satellite,
    /// Virtual source/sink nodes of time-expanded graphs.
    Asynchronous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Fiber,
    Freespace,
    /// Directed edge between copies of one node in consecutive time layers.
    Memory,
    /// Directed edge attaching a virtual source/sink to a time layer.
    Asynchronous,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Kilometers; required for endpoints of freespace channels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
    /// Kilometers per time step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<[f64; 3]>,
    #[serde(default)]
    pub has_memory: bool,
    #[serde(default)]
    pub memory_cost: CostVector,
}

impl NodeRecord {
    pub fn ground(id: NodeId) -> Self {
        NodeRecord {
            id,
            kind: NodeKind::Ground,
            position: None,
            velocity: None,
            has_memory: false,
            memory_cost: CostVector::ZERO,
        }
    }

    /// Position advanced to `base + t * velocity`; stored fields stay at t = 0.
    pub fn position_at(&self, t: u64) -> Option<[f64; 3]> {
        let p = self.position?;
        match self.velocity {
            Some(v) => {
                let t = t as f64;
                Some([p[0] + t * v[0], p[1] + t * v[1], p[2] + t * v[2]])
            }
            None => Some(p),
        }
    }
}

impl Default for CostVector {
    fn default() -> Self {
        CostVector::ZERO
    }
}

fn default_true() -> bool {
    true
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelRecord {
    pub edge_id: EdgeId,
    pub endpoints: (NodeId, NodeId),
    pub kind: ChannelKind,
    pub cost: CostVector,
    /// Directed channels (memory, asynchronous) are traversable only from
    /// `endpoints.0` to `endpoints.1`.
    #[serde(default)]
    pub directed: bool,
    #[serde(default = "default_true")]
    pub active: bool,
    /// Additive routing-weight offset; time-expanded graphs use it to prefer
    /// earlier layers. Zero for ordinary channels and excluded from the
    /// physical cost.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub bias: f64,
}

impl ChannelRecord {
    /// Whether the channel can be traversed leaving `from`.
    pub fn traversable_from(&self, from: NodeId) -> bool {
        if self.directed {
            self.endpoints.0 == from
        } else {
            self.endpoints.0 == from || self.endpoints.1 == from
        }
    }

    pub fn other_endpoint(&self, from: NodeId) -> NodeId {
        if self.endpoints.0 == from {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct NetworkGraph {
    nodes: BTreeMap<NodeId, NodeRecord>,
    channels: BTreeMap<EdgeId, ChannelRecord>,
    adjacency: BTreeMap<NodeId, Vec<EdgeId>>,
    time: u64,
    next_edge_id: EdgeId,
}

/// Serialized form; adjacency is rebuilt on load.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRepr {
    #[serde(default)]
    time: u64,
    nodes: Vec<NodeRecord>,
    channels: Vec<ChannelRecord>,
}

impl NetworkGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn set_time(&mut self, t: u64) {
        self.time = t;
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeRecord> {
        self.nodes.get(&id)
    }

    pub fn channel(&self, id: EdgeId) -> Option<&ChannelRecord> {
        self.channels.get(&id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.values()
    }

    /// Channels in ascending edge-id order.
    pub fn channels(&self) -> impl Iterator<Item = &ChannelRecord> {
        self.channels.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    /// Incident edge ids in ascending order (both directions for directed
    /// channels; traversal filters).
    pub fn incident(&self, id: NodeId) -> &[EdgeId] {
        self.adjacency.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.incident(id).len()
    }

    pub fn add_node(&mut self, record: NodeRecord) -> Result<()> {
        if self.nodes.contains_key(&record.id) {
            return Err(Error::DuplicateNode(record.id));
        }
        self.adjacency.insert(record.id, Vec::new());
        self.nodes.insert(record.id, record);
        Ok(())
    }

    pub fn add_channel(&mut self, record: ChannelRecord) -> Result<EdgeId> {
        if self.channels.contains_key(&record.edge_id) {
            return Err(Error::DuplicateEdge(record.edge_id));
        }
        for node in [record.endpoints.0, record.endpoints.1] {
            if !self.nodes.contains_key(&node) {
                return Err(Error::DanglingEndpoint {
                    edge: record.edge_id,
                    node,
                });
            }
        }
        let id = record.edge_id;
        self.attach(record.endpoints.0, id);
        if record.endpoints.1 != record.endpoints.0 {
            self.attach(record.endpoints.1, id);
        }
        self.next_edge_id = self.next_edge_id.max(id + 1);
        self.channels.insert(id, record);
        Ok(id)
    }

    /// Adds an undirected channel with a freshly allocated edge id.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId, kind: ChannelKind, cost: CostVector) -> Result<EdgeId> {
        let id = self.next_edge_id;
        self.add_channel(ChannelRecord {
            edge_id: id,
            endpoints: (a, b),
            kind,
            cost,
            directed: false,
            active: true,
            bias: 0.0,
        })
    }

    /// Adds a directed channel with a freshly allocated edge id.
    pub fn add_directed_edge(
        &mut self,
        from: NodeId,
        to: NodeId,
        kind: ChannelKind,
        cost: CostVector,
        bias: f64,
    ) -> Result<EdgeId> {
        let id = self.next_edge_id;
        self.add_channel(ChannelRecord {
            edge_id: id,
            endpoints: (from, to),
            kind,
            cost,
            directed: true,
            active: true,
            bias,
        })
    }

    fn attach(&mut self, node: NodeId, edge: EdgeId) {
        let list = self.adjacency.entry(node).or_default();
        match list.binary_search(&edge) {
            Ok(_) => {}
            Err(pos) => list.insert(pos, edge),
        }
    }

    pub fn remove_channel(&mut self, id: EdgeId) -> Result<ChannelRecord> {
        let record = self.channels.remove(&id).ok_or(Error::UnknownEdge(id))?;
        for node in [record.endpoints.0, record.endpoints.1] {
            if let Some(list) = self.adjacency.get_mut(&node) {
                if let Ok(pos) = list.binary_search(&id) {
                    list.remove(pos);
                }
            }
        }
        Ok(record)
    }

    /// Removes a node together with its incident channels.
    pub fn remove_node(&mut self, id: NodeId) -> Result<NodeRecord> {
        let record = self.nodes.remove(&id).ok_or(Error::UnknownNode(id))?;
        let incident = self.adjacency.remove(&id).unwrap_or_default();
        for edge in incident {
            let _ = self.remove_channel(edge);
        }
        Ok(record)
    }

    pub fn set_channel_cost(&mut self, id: EdgeId, cost: CostVector) -> Result<()> {
        self.channels
            .get_mut(&id)
            .map(|c| c.cost = cost)
            .ok_or(Error::UnknownEdge(id))
    }

    pub fn set_channel_active(&mut self, id: EdgeId, active: bool) -> Result<()> {
        self.channels
            .get_mut(&id)
            .map(|c| c.active = active)
            .ok_or(Error::UnknownEdge(id))
    }

    pub fn set_memory(&mut self, id: NodeId, has_memory: bool, memory_cost: CostVector) -> Result<()> {
        self.nodes
            .get_mut(&id)
            .map(|n| {
                n.has_memory = has_memory;
                n.memory_cost = memory_cost;
            })
            .ok_or(Error::UnknownNode(id))
    }

    pub fn to_json(&self) -> String {
        let repr = GraphRepr {
            time: self.time,
            nodes: self.nodes.values().cloned().collect(),
            channels: self.channels.values().cloned().collect(),
        };
        serde_json::to_string_pretty(&repr).expect("graph serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: GraphRepr = serde_json::from_str(text)?;
        let mut graph = NetworkGraph::new();
        graph.time = repr.time;
        for node in repr.nodes {
            graph.add_node(node)?;
        }
        for channel in repr.channels {
            graph.add_channel(channel)?;
        }
        Ok(graph)
    }
}

/// Square lattice of `n x n` ground nodes (row-major ids) with identical
/// fiber channels on every lattice edge: `n^2` nodes, `2n(n-1)` channels.
pub fn build_grid(n: usize, edge_cost: CostVector) -> Result<NetworkGraph> {
    if n < 2 {
        return Err(Error::GridTooSmall(n));
    }
    let mut graph = NetworkGraph::new();
    for id in 0..(n * n) as NodeId {
        graph.add_node(NodeRecord::ground(id))?;
    }
    for row in 0..n {
        for col in 0..n {
            let id = (row * n + col) as NodeId;
            if col + 1 < n {
                graph.add_edge(id, id + 1, ChannelKind::Fiber, edge_cost)?;
            }
            if row + 1 < n {
                graph.add_edge(id, id + n as NodeId, ChannelKind::Fiber, edge_cost)?;
            }
        }
    }
    Ok(graph)
}

/// Independently removes each non-memory, non-asynchronous channel with
/// probability `q`. One uniform draw is consumed per candidate channel in
/// ascending edge-id order even when `q` is 0 or 1, so record streams remain
/// comparable across `q` under a shared seed. Returns the removed count.
pub fn percolate<R: Rng + ?Sized>(graph: &mut NetworkGraph, q: f64, rng: &mut R) -> Result<usize> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidProbability(q));
    }
    let candidates: Vec<EdgeId> = graph
        .channels()
        .filter(|c| !matches!(c.kind, ChannelKind::Memory | ChannelKind::Asynchronous))
        .map(|c| c.edge_id)
        .collect();
    let mut removed = 0;
    for id in candidates {
        if rng.random::<f64>() < q {
            graph.remove_channel(id)?;
            removed += 1;
        }
    }
    Ok(removed)
}

/// Samples `m` user pairs over `2m` distinct non-asynchronous nodes, drawn
/// uniformly without replacement.
pub fn sample_user_pairs<R: Rng + ?Sized>(
    graph: &NetworkGraph,
    m: usize,
    rng: &mut R,
) -> Result<Vec<(NodeId, NodeId)>> {
    let mut ids: Vec<NodeId> = graph
        .nodes()
        .filter(|n| n.kind != NodeKind::Asynchronous)
        .map(|n| n.id)
        .collect();
    if 2 * m > ids.len() {
        return Err(Error::TooManyPairs {
            requested: m,
            available: ids.len(),
        });
    }
    // Partial Fisher-Yates over the sorted id list.
    for i in 0..2 * m {
        let j = rng.random_range(i..ids.len());
        ids.swap(i, j);
    }
    Ok((0..m).map(|k| (ids[2 * k], ids[2 * k + 1])).collect())
}

/// Advances satellites to time `t` (`base + t * velocity`) and recomputes
/// every freespace channel cost from the new geometry. Idempotent per `t`.
pub fn update_dynamic(graph: &mut NetworkGraph, t: u64, model: &AtmosphereModel) -> Result<()> {
    let updates: Vec<(EdgeId, CostVector)> = graph
        .channels()
        .filter(|c| c.kind == ChannelKind::Freespace)
        .map(|c| {
            let (a, b) = c.endpoints;
            let na = graph.node(a).ok_or(Error::UnknownNode(a))?;
            let nb = graph.node(b).ok_or(Error::UnknownNode(b))?;
            if na.kind != NodeKind::Satellite && nb.kind != NodeKind::Satellite {
                return Err(Error::FreespaceWithoutSatellite(c.edge_id));
            }
            let pa = na.position_at(t).ok_or(Error::MissingPosition(a))?;
            let pb = nb.position_at(t).ok_or(Error::MissingPosition(b))?;
            let d = effective_distance(pa, pb, model, model.integration_steps);
            Ok((c.edge_id, from_physical(freespace_cost(d, model))))
        })
        .collect::<Result<_>>()?;
    for (id, cost) in updates {
        graph.set_channel_cost(id, cost)?;
    }
    graph.set_time(t);
    Ok(())
}
