//! Greedy multipath routing.
//!
//! Shortest paths minimize the scalar `w_loss * loss_db + w_deph * deph_db`
//! plus any layer bias. Tie-breaks are pinned (smallest incoming edge id)
//! so every run of a given graph is byte-identical.
//! A pair's accepted paths are mutually edge-disjoint and are finally
//! purified into one end-to-end channel. When several pairs compete, every
//! node an accepted path visits is committed to that pair: its hardware is
//! holding path qubits, so no other pair may route through it. A saturated
//! network therefore starves later pairs much faster than channel capacity
//! alone would suggest. Sessions over a time-expanded graph relax this with
//! [`RoutingConfig::shared_nodes`]: a node copy belongs to one time slot, so
//! hardware serves different pairs in different slots and only channels are
//! exclusive.
//!
//! Queries run against a session snapshot that flattens the graph into
//! index-based adjacency lists, so the inner loop never touches a map and a
//! whole session amortizes one flattening pass. Accepted paths never mutate
//! the snapshot; they record claims that the relaxation loop skips.

use std::collections::{BinaryHeap, HashMap};

use crate::cost::{purify_n, swap_compose, to_physical, PhysicalCost};
use crate::graph::{ChannelKind, ChannelRecord, EdgeId, NetworkGraph, NodeId};

#[derive(Debug, Clone)]
pub struct RoutingConfig {
    /// Most paths accepted per pair.
    pub max_paths: usize,
    /// Accept a path only if its (bias-free) weight stays at or below this.
    pub threshold: f64,
    pub w_loss: f64,
    pub w_deph: f64,
    /// Let paths of competing pairs visit the same node. Time-expanded
    /// sessions of depth two or more turn this on, because each node copy
    /// occupies the hardware for a single slot only. Off by default: in a
    /// static session a node carrying one pair's qubits is committed for the
    /// whole session.
    pub shared_nodes: bool,
}

impl Default for RoutingConfig {
    fn default() -> Self {
        RoutingConfig {
            max_paths: 4,
            threshold: f64::INFINITY,
            w_loss: 1.0,
            w_deph: 1.0,
            shared_nodes: false,
        }
    }
}

impl RoutingConfig {
    fn edge_weight(&self, c: &ChannelRecord) -> f64 {
        self.w_loss * c.cost.loss_db() + self.w_deph * c.cost.deph_db()
    }
}

#[derive(Debug, Clone)]
pub struct Path {
    pub src: NodeId,
    pub dst: NodeId,
    /// Edges in travel order.
    pub edges: Vec<EdgeId>,
    /// Channel kind of each edge, same order.
    pub kinds: Vec<ChannelKind>,
    /// Visited nodes, `src` first and `dst` last.
    pub nodes: Vec<NodeId>,
    /// Sum of edge weights, excluding layer bias.
    pub weight: f64,
    /// Physical cost of the path (series swap along the edges).
    pub cost: PhysicalCost,
}

impl Path {
    pub fn hops(&self) -> usize {
        self.edges.len()
    }

    /// Hops over real channels (memory included, virtual attachments not).
    pub fn network_hops(&self) -> usize {
        self.kinds.iter().filter(|k| **k != ChannelKind::Asynchronous).count()
    }
}

#[derive(Debug, Clone)]
pub struct RoutingOutcome {
    pub src: NodeId,
    pub dst: NodeId,
    /// Mutually edge-disjoint (virtual attachment edges may repeat).
    pub paths: Vec<Path>,
    /// Purification of all accepted paths; `None` when no path was accepted.
    pub end_to_end: Option<PhysicalCost>,
}

impl RoutingOutcome {
    fn empty(src: NodeId, dst: NodeId) -> Self {
        RoutingOutcome {
            src,
            dst,
            paths: Vec::new(),
            end_to_end: None,
        }
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    fn finalize(&mut self) {
        if !self.paths.is_empty() {
            let costs: Vec<PhysicalCost> = self.paths.iter().map(|p| p.cost).collect();
            self.end_to_end = Some(purify_n(&costs).expect("at least one path"));
        }
    }
}

/// Max-heap entry ordered for a min-queue: smallest rank first, then
/// smallest node index. Indices are assigned in ascending node-id order, so
/// the index tie-break equals the id tie-break.
#[derive(PartialEq)]
struct QueueEntry {
    rank: f64,
    node: u32,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .rank
            .total_cmp(&self.rank)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Owner slot value for unclaimed nodes.
const FREE: u32 = u32::MAX;

/// One traversable direction of a channel, flattened for the relaxation loop.
struct Link {
    to: u32,
    edge: EdgeId,
    /// Dense edge index into the claim table.
    eidx: u32,
    weight: f64,
    bias: f64,
    kind: ChannelKind,
    phys: PhysicalCost,
}

/// A routing session over a fixed weighting. Accepted paths claim their
/// nodes for one pair and mark their edges as spent; queries filter on those
/// claims instead of mutating the adjacency lists.
struct Router {
    /// Node ids in ascending order; positions are the dense indices.
    ids: Vec<NodeId>,
    links: Vec<Vec<Link>>,
    edge_index: HashMap<EdgeId, u32>,
    /// Pair that committed each node, `FREE` when open to everyone.
    node_owner: Vec<u32>,
    /// Edges already granted to some path.
    edge_taken: Vec<bool>,
    /// Skip node commitment (time-shared hardware).
    shared_nodes: bool,
}

impl Router {
    fn new(graph: &NetworkGraph, config: &RoutingConfig) -> Router {
        let ids: Vec<NodeId> = graph.node_ids().collect();
        let index =
            |id: NodeId| -> u32 { ids.binary_search(&id).expect("endpoint exists") as u32 };
        let mut links: Vec<Vec<Link>> = ids.iter().map(|_| Vec::new()).collect();
        let mut edge_index = HashMap::new();
        for c in graph.channels() {
            if !c.active || c.cost.is_blocked() {
                continue;
            }
            let eidx = edge_index.len() as u32;
            edge_index.insert(c.edge_id, eidx);
            let (ia, ib) = (index(c.endpoints.0), index(c.endpoints.1));
            let weight = config.edge_weight(c);
            let phys = to_physical(c.cost);
            links[ia as usize].push(Link {
                to: ib,
                edge: c.edge_id,
                eidx,
                weight,
                bias: c.bias,
                kind: c.kind,
                phys,
            });
            if !c.directed {
                links[ib as usize].push(Link {
                    to: ia,
                    edge: c.edge_id,
                    eidx,
                    weight,
                    bias: c.bias,
                    kind: c.kind,
                    phys,
                });
            }
        }
        let node_owner = vec![FREE; ids.len()];
        let edge_taken = vec![false; edge_index.len()];
        Router {
            ids,
            links,
            edge_index,
            node_owner,
            edge_taken,
            shared_nodes: config.shared_nodes,
        }
    }

    fn index_of(&self, id: NodeId) -> Option<u32> {
        self.ids.binary_search(&id).ok().map(|i| i as u32)
    }

    /// Dijkstra with lazy deletion; see [`shortest_path`] for the contract.
    /// Skips spent edges and nodes committed to a pair other than `me`.
    fn shortest_path_for(&self, me: u32, src: NodeId, dst: NodeId) -> Option<Path> {
        if src == dst {
            return None;
        }
        let si = self.index_of(src)?;
        let di = self.index_of(dst)?;
        for end in [si, di] {
            let owner = self.node_owner[end as usize];
            if owner != FREE && owner != me {
                return None;
            }
        }
        let n = self.ids.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred: Vec<(u32, EdgeId)> = vec![(u32::MAX, EdgeId::MAX); n];
        let mut settled = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[si as usize] = 0.0;
        heap.push(QueueEntry { rank: 0.0, node: si });

        while let Some(QueueEntry { rank, node }) = heap.pop() {
            let at = node as usize;
            if settled[at] || rank > dist[at] {
                continue;
            }
            settled[at] = true;
            for link in &self.links[at] {
                if self.edge_taken[link.eidx as usize] {
                    continue;
                }
                let next = link.to as usize;
                let owner = self.node_owner[next];
                if owner != FREE && owner != me {
                    continue;
                }
                let candidate = rank + link.weight + link.bias;
                let d = dist[next];
                if candidate > d {
                    continue;
                }
                if candidate == d {
                    // Same weight: the earliest-created edge wins. Edge ids
                    // are unique, so this is a total order, and meta-graph
                    // construction exploits it to rank edge classes.
                    if link.edge < pred[next].1 {
                        pred[next] = (node, link.edge);
                    }
                } else {
                    dist[next] = candidate;
                    pred[next] = (node, link.edge);
                    heap.push(QueueEntry {
                        rank: candidate,
                        node: link.to,
                    });
                }
            }
        }

        if !dist[di as usize].is_finite() {
            return None;
        }

        let mut hops: Vec<(u32, EdgeId)> = Vec::new();
        let mut nodes = vec![dst];
        let mut at = di;
        while at != si {
            let (parent, edge) = pred[at as usize];
            hops.push((parent, edge));
            nodes.push(self.ids[parent as usize]);
            at = parent;
        }
        hops.reverse();
        nodes.reverse();

        let mut weight = 0.0;
        let mut cost = PhysicalCost::PERFECT;
        let mut edges = Vec::with_capacity(hops.len());
        let mut kinds = Vec::with_capacity(hops.len());
        for &(parent, edge) in &hops {
            let link = self.links[parent as usize]
                .iter()
                .find(|l| l.edge == edge)
                .expect("path link");
            weight += link.weight;
            cost = swap_compose(cost, link.phys);
            edges.push(edge);
            kinds.push(link.kind);
        }

        Some(Path {
            src,
            dst,
            edges,
            kinds,
            nodes,
            weight,
            cost,
        })
    }

    /// Commits an accepted path: its nodes go to pair `me` (unless the
    /// session shares nodes) and its edges are spent. Virtual attachment
    /// edges stay usable so the pair's later paths can enter through the
    /// same attachment point.
    fn claim_path(&mut self, me: u32, path: &Path) {
        if !self.shared_nodes {
            for &node in &path.nodes {
                let i = self.index_of(node).expect("path node") as usize;
                self.node_owner[i] = me;
            }
        }
        for (&edge, kind) in path.edges.iter().zip(&path.kinds) {
            if *kind == ChannelKind::Asynchronous {
                continue;
            }
            let ei = self.edge_index[&edge] as usize;
            self.edge_taken[ei] = true;
        }
    }
}

/// Dijkstra with lazy deletion. Inactive and blocked channels are invisible;
/// directed channels are traversed forward only. Among equal-weight
/// relaxations the predecessor with the smallest (node id, edge id) wins, so
/// the reported path is unique. Returns `None` when `dst` is unreachable or
/// equals `src`.
pub fn shortest_path(
    graph: &NetworkGraph,
    src: NodeId,
    dst: NodeId,
    config: &RoutingConfig,
) -> Option<Path> {
    Router::new(graph, config).shortest_path_for(0, src, dst)
}

/// Applies one accepted path's claims to a graph. Committed sessions lose
/// every visited node along with its channels; shared sessions lose only
/// the spent channels (attachments never count as spent).
fn consume_path(graph: &mut NetworkGraph, path: &Path, shared_nodes: bool) {
    if shared_nodes {
        for (&edge, kind) in path.edges.iter().zip(&path.kinds) {
            if *kind != ChannelKind::Asynchronous {
                let _ = graph.remove_channel(edge);
            }
        }
    } else {
        for &node in &path.nodes {
            let _ = graph.remove_node(node);
        }
    }
}

/// Single-pair greedy loop; `mirror` receives the same claims the session
/// records, for callers that want the depletion to outlive the call.
fn multi_path_core(
    router: &mut Router,
    mut mirror: Option<&mut NetworkGraph>,
    src: NodeId,
    dst: NodeId,
    config: &RoutingConfig,
) -> RoutingOutcome {
    let mut outcome = RoutingOutcome::empty(src, dst);
    while outcome.paths.len() < config.max_paths {
        match router.shortest_path_for(0, src, dst) {
            Some(p) if p.weight <= config.threshold => {
                router.claim_path(0, &p);
                if let Some(g) = mirror.as_deref_mut() {
                    consume_path(g, &p, config.shared_nodes);
                }
                outcome.paths.push(p);
            }
            _ => break,
        }
    }
    outcome.finalize();
    outcome
}

/// Round-robin loop over many pairs; see [`greedy_multi_user_mut`].
fn multi_user_core(
    router: &mut Router,
    mut mirror: Option<&mut NetworkGraph>,
    pairs: &[(NodeId, NodeId)],
    config: &RoutingConfig,
) -> Vec<RoutingOutcome> {
    let mut outcomes: Vec<RoutingOutcome> = pairs
        .iter()
        .map(|&(a, b)| RoutingOutcome::empty(a, b))
        .collect();
    let mut done = vec![false; pairs.len()];
    loop {
        let mut progress = false;
        for (i, &(a, b)) in pairs.iter().enumerate() {
            if done[i] {
                continue;
            }
            if outcomes[i].paths.len() >= config.max_paths {
                done[i] = true;
                continue;
            }
            match router.shortest_path_for(i as u32, a, b) {
                Some(p) if p.weight <= config.threshold => {
                    router.claim_path(i as u32, &p);
                    if let Some(g) = mirror.as_deref_mut() {
                        consume_path(g, &p, config.shared_nodes);
                    }
                    outcomes[i].paths.push(p);
                    progress = true;
                }
                _ => done[i] = true,
            }
        }
        if !progress {
            break;
        }
    }
    for outcome in &mut outcomes {
        outcome.finalize();
    }
    outcomes
}

/// Accepts shortest paths one at a time, committing each accepted path's
/// nodes in `graph` (competition mode: the caller sees the depletion).
pub fn greedy_multi_path_mut(
    graph: &mut NetworkGraph,
    src: NodeId,
    dst: NodeId,
    config: &RoutingConfig,
) -> RoutingOutcome {
    let mut router = Router::new(graph, config);
    multi_path_core(&mut router, Some(graph), src, dst, config)
}

/// Non-destructive [`greedy_multi_path_mut`]: the caller's graph is left
/// untouched.
pub fn greedy_multi_path(
    graph: &NetworkGraph,
    src: NodeId,
    dst: NodeId,
    config: &RoutingConfig,
) -> RoutingOutcome {
    let mut router = Router::new(graph, config);
    multi_path_core(&mut router, None, src, dst, config)
}

/// Round-robin multi-user routing over a shared graph: each round grants
/// every still-eligible pair one accepted shortest path. An accepted path
/// commits all its nodes to its pair, so competing pairs cannot cross it
/// (with [`RoutingConfig::shared_nodes`] only its channels are spent); a
/// pair whose turn finds no admissible path stays failed (claims only grow),
/// so it drops out. Pairs should be node-disjoint.
pub fn greedy_multi_user_mut(
    graph: &mut NetworkGraph,
    pairs: &[(NodeId, NodeId)],
    config: &RoutingConfig,
) -> Vec<RoutingOutcome> {
    let mut router = Router::new(graph, config);
    multi_user_core(&mut router, Some(graph), pairs, config)
}

/// Non-destructive [`greedy_multi_user_mut`]: the caller's graph is left
/// untouched.
pub fn greedy_multi_user(
    graph: &NetworkGraph,
    pairs: &[(NodeId, NodeId)],
    config: &RoutingConfig,
) -> Vec<RoutingOutcome> {
    let mut router = Router::new(graph, config);
    multi_user_core(&mut router, None, pairs, config)
}
