//! Cost-preserving graph simplification.
//!
//! Three rewrites run to a fixed point: parallel channels merge by
//! purification, chains through non-terminal degree-2 nodes merge by dB
//! addition (series swap), and channels above a total-dB threshold are
//! pruned. Terminal nodes survive every rewrite. Only active undirected
//! channels participate; directed or inactive channels block their endpoints
//! instead of being rewritten.

use std::collections::{BTreeMap, BTreeSet};

use crate::cost::{from_physical, purify_n, to_physical, PhysicalCost};
use crate::graph::{ChannelRecord, EdgeId, NetworkGraph, NodeId};
use crate::Result;

#[derive(Debug, Clone)]
pub struct ReductionConfig {
    /// Nodes that must survive (communication endpoints).
    pub terminals: BTreeSet<NodeId>,
    /// Channels with `loss_db + deph_db` above this are pruned after each
    /// pass; infinity disables pruning.
    pub threshold_db: f64,
}

impl ReductionConfig {
    pub fn new(terminals: impl IntoIterator<Item = NodeId>) -> Self {
        ReductionConfig {
            terminals: terminals.into_iter().collect(),
            threshold_db: f64::INFINITY,
        }
    }

    pub fn with_threshold(mut self, threshold_db: f64) -> Self {
        self.threshold_db = threshold_db;
        self
    }
}

fn mergeable(c: &ChannelRecord) -> bool {
    c.active && !c.directed && c.endpoints.0 != c.endpoints.1
}

/// Merges every family of parallel channels into one purified channel.
/// The merged channel keeps the smallest edge id and kind of its family.
/// Returns whether anything changed.
pub fn reduce_cycles(graph: &mut NetworkGraph) -> Result<bool> {
    let mut families: BTreeMap<(NodeId, NodeId), Vec<EdgeId>> = BTreeMap::new();
    for c in graph.channels() {
        if !mergeable(c) {
            continue;
        }
        let (a, b) = c.endpoints;
        let key = (a.min(b), a.max(b));
        families.entry(key).or_default().push(c.edge_id);
    }

    let mut changed = false;
    for ((a, b), ids) in families {
        if ids.len() < 2 {
            continue;
        }
        // Blocked members carry no entanglement and drop out of the merge.
        let costs: Vec<PhysicalCost> = ids
            .iter()
            .filter(|&&id| !graph.channel(id).expect("family member").cost.is_blocked())
            .map(|&id| to_physical(graph.channel(id).expect("family member").cost))
            .collect();
        let merged_cost = match purify_n(&costs) {
            Ok(p) => from_physical(p),
            Err(_) => crate::cost::CostVector::BLOCKED,
        };
        let keep_id = ids[0];
        let kind = graph.channel(keep_id).expect("family member").kind;
        for &id in &ids {
            graph.remove_channel(id)?;
        }
        graph.add_channel(ChannelRecord {
            edge_id: keep_id,
            endpoints: (a, b),
            kind,
            cost: merged_cost,
            directed: false,
            active: true,
            bias: 0.0,
        })?;
        changed = true;
    }
    Ok(changed)
}

/// Splices out non-terminal degree-2 nodes with two distinct neighbours,
/// adding the two channel costs (series swap). Nodes are examined in
/// ascending id order until none qualifies. Returns whether anything changed.
pub fn reduce_linear(graph: &mut NetworkGraph, terminals: &BTreeSet<NodeId>) -> Result<bool> {
    let mut changed = false;
    loop {
        let mut splice = None;
        for node in graph.nodes() {
            if terminals.contains(&node.id) {
                continue;
            }
            let incident = graph.incident(node.id);
            if incident.len() != 2 {
                continue;
            }
            let c1 = graph.channel(incident[0]).expect("incident");
            let c2 = graph.channel(incident[1]).expect("incident");
            if !mergeable(c1) || !mergeable(c2) {
                continue;
            }
            let n1 = c1.other_endpoint(node.id);
            let n2 = c2.other_endpoint(node.id);
            if n1 == n2 {
                continue; // a two-edge cycle; handled as parallel after merging
            }
            splice = Some((node.id, n1, n2, c1.cost + c2.cost, c1.kind));
            break;
        }
        let Some((node, n1, n2, cost, kind)) = splice else {
            break;
        };
        graph.remove_node(node)?;
        graph.add_edge(n1.min(n2), n1.max(n2), kind, cost)?;
        changed = true;
    }
    Ok(changed)
}

fn prune(graph: &mut NetworkGraph, threshold_db: f64) -> Result<bool> {
    let doomed: Vec<EdgeId> = graph
        .channels()
        .filter(|c| c.cost.magnitude_db() > threshold_db)
        .map(|c| c.edge_id)
        .collect();
    let changed = !doomed.is_empty();
    for id in doomed {
        graph.remove_channel(id)?;
    }
    Ok(changed)
}

/// Alternates cycle merging, chain splicing and pruning until the graph
/// stops changing. Idempotent; never removes a terminal.
pub fn reduce_fixpoint(graph: &mut NetworkGraph, config: &ReductionConfig) -> Result<()> {
    loop {
        let merged = reduce_cycles(graph)?;
        let spliced = reduce_linear(graph, &config.terminals)?;
        let pruned = prune(graph, config.threshold_db)?;
        if !(merged || spliced || pruned) {
            return Ok(());
        }
    }
}
