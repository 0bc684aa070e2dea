//! Builds the dumbbell-with-satellite topology: sources feed customer edge
//! nodes, customers feed Router 1 (ground station), which crosses the
//! satellite (Router 2) to the destination ground station (Router 3) and the
//! per-customer sinks.

use std::collections::VecDeque;

use super::link::{Link, LinkId, LinkQueue, NodeId};
use super::queue::DropTailQueue;
use crate::diffserv::MultiColorRedQueue;
use crate::harness::config::{ConfigError, FieldIssue, LinkSpec, ScenarioConfig, Strictness, TrafficKind};
use crate::simcore::{RngStream, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Source { agent: u16 },
    Customer { customer: u8 },
    Router(u8),
    Sink { customer: u8 },
}

#[derive(Debug, Clone)]
pub struct Node {
    pub name: String,
    pub role: NodeRole,
}

/// One traffic source and where it lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentSpec {
    /// Index into the scenario's customer list.
    pub customer: u8,
    /// Flow index within the customer.
    pub flow: u8,
    pub traffic: TrafficKind,
    pub node: NodeId,
}

#[derive(Debug, Clone)]
pub struct Topology {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub agents: Vec<AgentSpec>,
    pub customer_nodes: Vec<NodeId>,
    pub sink_nodes: Vec<NodeId>,
    pub routers: [NodeId; 3],
    /// Router 1 to Router 2, the RED-managed hop.
    pub bottleneck: LinkId,
    // routes[node][dest] = outgoing link
    routes: Vec<Vec<Option<LinkId>>>,
}

impl Topology {
    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0 as usize]
    }

    pub fn next_hop(&self, at: NodeId, dest: NodeId) -> Option<LinkId> {
        self.routes[at.0 as usize][dest.0 as usize]
    }

    pub fn link_between(&self, from: NodeId, to: NodeId) -> Option<LinkId> {
        self.links
            .iter()
            .position(|l| l.from == from && l.to == to)
            .map(|i| LinkId(i as u16))
    }

    /// Links traversed from `from` to `to`.
    pub fn path(&self, from: NodeId, to: NodeId) -> Vec<LinkId> {
        let mut out = Vec::new();
        let mut at = from;
        while at != to {
            let l = self.next_hop(at, to).expect("connected topology");
            out.push(l);
            at = self.link(l).to;
        }
        out
    }

    /// Sum of propagation delays along a path, ignoring queueing and
    /// serialization.
    pub fn propagation_delay(&self, from: NodeId, to: NodeId) -> SimTime {
        self.path(from, to)
            .into_iter()
            .fold(SimTime::ZERO, |acc, l| acc + self.link(l).delay)
    }

    fn compute_routes(&mut self) {
        let n = self.nodes.len();
        let mut adj: Vec<Vec<(usize, LinkId)>> = vec![Vec::new(); n];
        for (i, l) in self.links.iter().enumerate() {
            adj[l.from.0 as usize].push((l.to.0 as usize, LinkId(i as u16)));
        }
        self.routes = vec![vec![None; n]; n];
        for src in 0..n {
            // BFS from src; remember the first link taken
            let mut first: Vec<Option<LinkId>> = vec![None; n];
            let mut seen = vec![false; n];
            seen[src] = true;
            let mut frontier = VecDeque::from([src]);
            while let Some(u) = frontier.pop_front() {
                for &(v, l) in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        first[v] = if u == src { Some(l) } else { first[u] };
                        frontier.push_back(v);
                    }
                }
            }
            self.routes[src] = first;
        }
    }
}

struct Builder {
    nodes: Vec<Node>,
    links: Vec<Link>,
    limit: usize,
}

impl Builder {
    fn node(&mut self, name: String, role: NodeRole) -> NodeId {
        self.nodes.push(Node { name, role });
        NodeId((self.nodes.len() - 1) as u16)
    }

    fn name(&self, n: NodeId) -> &str {
        &self.nodes[n.0 as usize].name
    }

    fn simplex(&mut self, from: NodeId, to: NodeId, spec: LinkSpec, queue: Option<LinkQueue>) -> LinkId {
        let name = format!("{}->{}", self.name(from), self.name(to));
        let queue = queue.unwrap_or_else(|| LinkQueue::DropTail(DropTailQueue::new(self.limit)));
        self.links
            .push(Link::new(name, from, to, spec.bandwidth_bps, spec.delay(), queue));
        LinkId((self.links.len() - 1) as u16)
    }

    fn duplex(&mut self, a: NodeId, b: NodeId, spec: LinkSpec) {
        self.simplex(a, b, spec, None);
        self.simplex(b, a, spec, None);
    }
}

/// Builds the topology for a validated scenario. Only the Router 1 to
/// Router 2 direction carries the RED queue; everything else is DropTail.
pub fn build_topology(scenario: &ScenarioConfig) -> Result<Topology, ConfigError> {
    scenario.validate(Strictness::FreeForm)?;
    let g = &scenario.general;
    let mut b = Builder {
        nodes: Vec::new(),
        links: Vec::new(),
        limit: g.queue_limit_packets,
    };
    let r1 = b.node("router1".into(), NodeRole::Router(1));
    let r2 = b.node("router2".into(), NodeRole::Router(2));
    let r3 = b.node("router3".into(), NodeRole::Router(3));

    let rng = RngStream::new(scenario.seed, "red:router1");
    let red = MultiColorRedQueue::new(&scenario.red_config(), rng).map_err(|e| {
        ConfigError::Invalid(vec![FieldIssue {
            field: "red".into(),
            message: e.to_string(),
        }])
    })?;
    let bottleneck = b.simplex(r1, r2, scenario.links.uplink, Some(LinkQueue::Red(Box::new(red))));
    b.simplex(r2, r1, scenario.links.uplink, None);
    b.duplex(r2, r3, scenario.links.downlink);

    let mut agents = Vec::new();
    let mut customer_nodes = Vec::new();
    let mut sink_nodes = Vec::new();
    for (ci, c) in scenario.customers.iter().enumerate() {
        let ci = ci as u8;
        let cust = b.node(format!("customer{}", c.id), NodeRole::Customer { customer: ci });
        b.duplex(cust, r1, scenario.links.customer);
        let sink = b.node(format!("sink{}", c.id), NodeRole::Sink { customer: ci });
        b.duplex(r3, sink, scenario.links.customer);
        let flows = match c.traffic {
            TrafficKind::Tcp => g.tcp_flows_per_customer,
            TrafficKind::Udp => 1,
        };
        for flow in 0..flows {
            let agent = agents.len() as u16;
            let label = match c.traffic {
                TrafficKind::Tcp => format!("tcp{}.{}", c.id, flow),
                TrafficKind::Udp => format!("udp{}.{}", c.id, flow),
            };
            let src = b.node(label, NodeRole::Source { agent });
            b.duplex(src, cust, scenario.links.access);
            agents.push(AgentSpec {
                customer: ci,
                flow: flow as u8,
                traffic: c.traffic,
                node: src,
            });
        }
        customer_nodes.push(cust);
        sink_nodes.push(sink);
    }

    let mut topo = Topology {
        nodes: b.nodes,
        links: b.links,
        agents,
        customer_nodes,
        sink_nodes,
        routers: [r1, r2, r3],
        bottleneck,
        routes: Vec::new(),
    };
    topo.compute_routes();
    Ok(topo)
}
