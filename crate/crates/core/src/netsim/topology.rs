use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{NetError, SimTime};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    /// Root switch; hosts the grandmaster clock.
    Root,
    Switch,
    Tile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Hop count from the root.
    pub depth: u32,
}

/// Bidirectional link. The `a -> b` direction points away from the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub delay_fwd: SimTime,
    pub delay_rev: SimTime,
    pub jitter_sigma: SimTime,
}

impl Link {
    pub fn asymmetry(&self) -> SimTime {
        self.delay_fwd - self.delay_rev
    }

    /// Mean delay when leaving `from`.
    pub fn delay_from(&self, from: NodeId) -> SimTime {
        if from == self.a {
            self.delay_fwd
        } else {
            self.delay_rev
        }
    }

    pub fn other(&self, from: NodeId) -> NodeId {
        if from == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchModel {
    pub node: NodeId,
    pub residence: SimTime,
    pub residence_jitter: SimTime,
    pub transparent_clock: bool,
}

/// Per-link and per-switch parameters applied to every generated element.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTemplate {
    pub delay: SimTime,
    /// Forward minus reverse delay on every link.
    pub asymmetry: SimTime,
    pub jitter_sigma: SimTime,
    pub residence: SimTime,
    pub residence_jitter: SimTime,
    pub transparent_clock: bool,
}

impl Default for LinkTemplate {
    fn default() -> Self {
        LinkTemplate {
            delay: SimTime::from_ns(500),
            asymmetry: SimTime::ZERO,
            jitter_sigma: SimTime::ZERO,
            residence: SimTime::from_ns(1_000),
            residence_jitter: SimTime::ZERO,
            transparent_clock: true,
        }
    }
}

impl LinkTemplate {
    fn link(&self, a: NodeId, b: NodeId) -> Result<Link, NetError> {
        let half = self.asymmetry.as_ps();
        let fwd = self.delay + SimTime::from_ps(half - half / 2);
        let rev = self.delay - SimTime::from_ps(half / 2);
        if fwd < SimTime::ZERO || rev < SimTime::ZERO {
            return Err(NetError::NegativeDelay);
        }
        Ok(Link { a, b, delay_fwd: fwd, delay_rev: rev, jitter_sigma: self.jitter_sigma })
    }

    fn switch(&self, node: NodeId) -> SwitchModel {
        SwitchModel {
            node,
            residence: self.residence,
            residence_jitter: self.residence_jitter,
            transparent_clock: self.transparent_clock,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TopologyKind {
    Star,
    Tree { fanout: u32 },
    Mesh { fanout: u32 },
    /// Node 0 is the root; `switches` lists the other switching nodes and
    /// every remaining node is a tile.
    Explicit { nodes: u32, switches: Vec<u32>, edges: Vec<(u32, u32)> },
}

/// One step of a route: leave `from` over `link` towards `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteStep {
    pub from: NodeId,
    pub to: NodeId,
    pub link: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub src: NodeId,
    pub dst: NodeId,
    pub steps: Vec<RouteStep>,
}

impl Route {
    /// Nodes strictly between source and destination.
    pub fn intermediates(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.steps.iter().skip(1).map(|s| s.from)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyGraph {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub switches: BTreeMap<NodeId, SwitchModel>,
    adjacency: Vec<Vec<usize>>,
}

impl TopologyGraph {
    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.0 as usize)
    }

    pub fn tiles(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Tile).map(|n| n.id)
    }

    pub fn switch_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind != NodeKind::Tile).count()
    }

    /// Parent towards the root along a shortest-hop tree; `None` for the root.
    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        let depth = self.node(id)?.depth;
        if depth == 0 {
            return None;
        }
        self.adjacency[id.0 as usize]
            .iter()
            .map(|&l| self.links[l].other(id))
            .filter(|n| self.nodes[n.0 as usize].depth + 1 == depth)
            .min()
    }

    /// Minimum mean-delay route; intermediate switches add their residence.
    /// Ties resolve towards the lower predecessor node id.
    pub fn route(&self, src: NodeId, dst: NodeId) -> Result<Route, NetError> {
        let n = self.nodes.len();
        if src.0 as usize >= n {
            return Err(NetError::UnknownNode(src.0));
        }
        if dst.0 as usize >= n {
            return Err(NetError::UnknownNode(dst.0));
        }
        let mut dist: Vec<Option<i64>> = vec![None; n];
        let mut prev: Vec<Option<(NodeId, usize)>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[src.0 as usize] = Some(0);
        heap.push(Reverse((0i64, src.0)));
        while let Some(Reverse((d, u))) = heap.pop() {
            let ui = u as usize;
            if done[ui] {
                continue;
            }
            done[ui] = true;
            if u == dst.0 {
                break;
            }
            let through = if u == src.0 {
                0
            } else {
                self.switches.get(&NodeId(u)).map_or(0, |s| s.residence.as_ps())
            };
            for &l in &self.adjacency[ui] {
                let link = &self.links[l];
                let v = link.other(NodeId(u));
                let vi = v.0 as usize;
                if done[vi] {
                    continue;
                }
                let nd = d + through + link.delay_from(NodeId(u)).as_ps();
                let better = match (dist[vi], prev[vi]) {
                    (None, _) => true,
                    (Some(old), Some((p, _))) => nd < old || (nd == old && u < p.0),
                    (Some(old), None) => nd < old,
                };
                if better {
                    dist[vi] = Some(nd);
                    prev[vi] = Some((NodeId(u), l));
                    heap.push(Reverse((nd, v.0)));
                }
            }
        }
        if dist[dst.0 as usize].is_none() {
            return Err(NetError::NoPath { src, dst });
        }
        let mut steps = Vec::new();
        let mut cur = dst;
        while cur != src {
            let (p, l) = prev[cur.0 as usize].expect("reached node has predecessor");
            steps.push(RouteStep { from: p, to: cur, link: l });
            cur = p;
        }
        steps.reverse();
        Ok(Route { src, dst, steps })
    }

    fn from_parts(kinds: Vec<NodeKind>, links: Vec<Link>, template: &LinkTemplate) -> Result<Self, NetError> {
        if kinds.is_empty() {
            return Err(NetError::EmptyTopology);
        }
        let n = kinds.len();
        let mut adjacency = vec![Vec::new(); n];
        for (i, link) in links.iter().enumerate() {
            for end in [link.a, link.b] {
                if end.0 as usize >= n {
                    return Err(NetError::UnknownNode(end.0));
                }
            }
            adjacency[link.a.0 as usize].push(i);
            adjacency[link.b.0 as usize].push(i);
        }
        // hop depth from the root by BFS; every node must be reached
        let mut depth = vec![u32::MAX; n];
        depth[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for &l in &adjacency[u] {
                let v = links[l].other(NodeId(u as u32)).0 as usize;
                if depth[v] == u32::MAX {
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if let Some(i) = depth.iter().position(|&d| d == u32::MAX) {
            return Err(NetError::Disconnected(NodeId(i as u32)));
        }
        let nodes: Vec<Node> = kinds
            .into_iter()
            .enumerate()
            .map(|(i, kind)| Node { id: NodeId(i as u32), kind, depth: depth[i] })
            .collect();
        let switches = nodes
            .iter()
            .filter(|n| n.kind != NodeKind::Tile)
            .map(|n| (n.id, template.switch(n.id)))
            .collect();
        Ok(TopologyGraph { nodes, links, switches, adjacency })
    }
}

/// Build a connected topology over `tiles` tile endpoints.
///
/// Node 0 is always the root. Star: one hub, `N` links. Tree: `ceil(N/f)`
/// leaf switches under the root, `N + ceil(N/f)` links. Mesh: `ceil(N/f)`
/// fully meshed switches (switch 0 is the root), `N + S(S-1)/2` links.
pub fn build_topology(kind: &TopologyKind, tiles: u32, template: &LinkTemplate) -> Result<TopologyGraph, NetError> {
    let mut kinds = Vec::new();
    let mut links = Vec::new();
    match kind {
        TopologyKind::Star => {
            if tiles == 0 {
                return Err(NetError::EmptyTopology);
            }
            kinds.push(NodeKind::Root);
            for i in 0..tiles {
                kinds.push(NodeKind::Tile);
                links.push(template.link(NodeId(0), NodeId(i + 1))?);
            }
        }
        TopologyKind::Tree { fanout } => {
            if *fanout == 0 {
                return Err(NetError::InvalidFanout);
            }
            if tiles == 0 {
                return Err(NetError::EmptyTopology);
            }
            let leaves = tiles.div_ceil(*fanout);
            kinds.push(NodeKind::Root);
            for s in 0..leaves {
                kinds.push(NodeKind::Switch);
                links.push(template.link(NodeId(0), NodeId(1 + s))?);
            }
            for t in 0..tiles {
                kinds.push(NodeKind::Tile);
                links.push(template.link(NodeId(1 + t / fanout), NodeId(1 + leaves + t))?);
            }
        }
        TopologyKind::Mesh { fanout } => {
            if *fanout == 0 {
                return Err(NetError::InvalidFanout);
            }
            if tiles == 0 {
                return Err(NetError::EmptyTopology);
            }
            let switches = tiles.div_ceil(*fanout);
            kinds.push(NodeKind::Root);
            kinds.extend((1..switches).map(|_| NodeKind::Switch));
            for a in 0..switches {
                for b in a + 1..switches {
                    links.push(template.link(NodeId(a), NodeId(b))?);
                }
            }
            for t in 0..tiles {
                kinds.push(NodeKind::Tile);
                links.push(template.link(NodeId(t / fanout), NodeId(switches + t))?);
            }
        }
        TopologyKind::Explicit { nodes, switches, edges } => {
            if *nodes == 0 {
                return Err(NetError::EmptyTopology);
            }
            kinds = (0..*nodes).map(|_| NodeKind::Tile).collect();
            kinds[0] = NodeKind::Root;
            for &s in switches {
                *kinds.get_mut(s as usize).ok_or(NetError::UnknownNode(s))? = NodeKind::Switch;
            }
            kinds[0] = NodeKind::Root;
            for &(a, b) in edges {
                for end in [a, b] {
                    if end >= *nodes {
                        return Err(NetError::UnknownNode(end));
                    }
                }
                links.push(template.link(NodeId(a), NodeId(b))?);
            }
        }
    }
    TopologyGraph::from_parts(kinds, links, template)
}
