//! The running simulation: topology, agents and conditioners wired to the
//! event scheduler.

use std::convert::Infallible;

use super::link::{LinkId, LinkStats, NodeId};
use super::packet::{Packet, PacketKind, PerColor};
use super::topology::{build_topology, NodeRole, Topology};
use crate::diffserv::{ConditionerProfile, RedStats, TrafficConditioner};
use crate::harness::config::{ConfigError, ScenarioConfig, TrafficKind};
use crate::simcore::{fnv1a64, Event, RngStream, RunSummary, Scheduler, SimTime};
use crate::transport::{AckEffect, TcpReceiver, TcpRenoState, UdpCbrState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NetEvent {
    Arrive { node: NodeId, packet: Packet },
    TxDone { link: LinkId },
    TcpStart { agent: u16 },
    UdpSend { agent: u16 },
    RetransmitTimeout { agent: u16 },
}

impl NetEvent {
    fn tag(&self) -> u64 {
        match self {
            NetEvent::Arrive { node, packet } => {
                (1 << 56) | ((node.0 as u64) << 32) | (packet.uid & 0xffff_ffff)
            }
            NetEvent::TxDone { link } => (2 << 56) | link.0 as u64,
            NetEvent::TcpStart { agent } => (3 << 56) | *agent as u64,
            NetEvent::UdpSend { agent } => (4 << 56) | *agent as u64,
            NetEvent::RetransmitTimeout { agent } => (5 << 56) | *agent as u64,
        }
    }
}

#[derive(Debug, Clone)]
enum Agent {
    Tcp {
        sender: TcpRenoState,
        receiver: TcpReceiver,
    },
    Udp(UdpCbrState),
}

/// What a finished run hands back to the metric code.
#[derive(Debug, Clone)]
pub struct CustomerOutcome {
    pub id: u8,
    pub traffic: TrafficKind,
    pub profile: ConditionerProfile,
    /// Bytes received at the customer's sink, by color.
    pub delivered_bytes: PerColor<u64>,
    /// Bytes the conditioner assigned to each color.
    pub marked_bytes: PerColor<u64>,
}

#[derive(Debug, Clone)]
pub struct LinkReport {
    pub name: String,
    pub stats: LinkStats,
    pub queued: usize,
    pub in_service: bool,
    pub conserved: bool,
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub summary: RunSummary,
    pub duration: SimTime,
    pub customers: Vec<CustomerOutcome>,
    pub red: RedStats,
    pub links: Vec<LinkReport>,
    /// Hash over every dispatched event's time and identity.
    pub trace_digest: u64,
    pub tcp_timeouts: u64,
    pub tcp_fast_retransmits: u64,
}

pub struct Simulation {
    topo: Topology,
    sched: Scheduler<NetEvent>,
    agents: Vec<Agent>,
    conditioners: Vec<TrafficConditioner>,
    customer_ids: Vec<u8>,
    delivered: Vec<PerColor<u64>>,
    packet_size: u32,
    ack_size: u32,
    duration: SimTime,
    next_uid: u64,
    trace_digest: u64,
    watched: Option<(LinkId, Vec<(SimTime, u32)>)>,
}

impl Simulation {
    pub fn new(scenario: &ScenarioConfig) -> Result<Self, ConfigError> {
        let topo = build_topology(scenario)?;
        let g = &scenario.general;
        let mut sched = Scheduler::new();
        let mut start_rng = RngStream::new(scenario.seed, "tcp-start");
        let tcp_cfg = g.tcp();
        let udp_start = SimTime::from_secs_f64(g.udp_start_s);
        let mut agents = Vec::with_capacity(topo.agents.len());
        for (i, spec) in topo.agents.iter().enumerate() {
            let agent = i as u16;
            match spec.traffic {
                TrafficKind::Tcp => {
                    let start = SimTime::from_secs_f64(start_rng.uniform_in(0.0, g.tcp_start_jitter_s));
                    sched
                        .schedule(start, NetEvent::TcpStart { agent })
                        .expect("start times are non-negative");
                    agents.push(Agent::Tcp {
                        sender: TcpRenoState::new(tcp_cfg),
                        receiver: TcpReceiver::new(),
                    });
                }
                TrafficKind::Udp => {
                    sched
                        .schedule(udp_start, NetEvent::UdpSend { agent })
                        .expect("start times are non-negative");
                    agents.push(Agent::Udp(UdpCbrState::new(
                        g.udp_rate_bps,
                        g.packet_size_bytes,
                        udp_start,
                    )));
                }
            }
        }
        let conditioners = scenario
            .customers
            .iter()
            .map(|c| TrafficConditioner::new(c.profile(g.packet_size_bytes)))
            .collect();
        Ok(Self {
            agents,
            conditioners,
            customer_ids: scenario.customers.iter().map(|c| c.id).collect(),
            delivered: vec![PerColor::default(); scenario.customers.len()],
            packet_size: g.packet_size_bytes,
            ack_size: g.ack_size_bytes,
            duration: g.duration(),
            next_uid: 0,
            trace_digest: 0xcbf2_9ce4_8422_2325,
            watched: None,
            topo,
            sched,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    /// Records (completion time, bytes) for every packet finishing
    /// serialization on `link`.
    pub fn watch_link(&mut self, link: LinkId) {
        self.watched = Some((link, Vec::new()));
    }

    pub fn watched_departures(&self) -> &[(SimTime, u32)] {
        self.watched.as_ref().map(|(_, v)| v.as_slice()).unwrap_or(&[])
    }

    pub fn run(&mut self) -> SimulationOutcome {
        let until = self.duration;
        let summary = {
            let mut sched = std::mem::take(&mut self.sched);
            let result = sched.run(until, |sch, ev| {
                self.dispatch(sch, ev);
                Ok::<_, Infallible>(())
            });
            self.sched = sched;
            match result {
                Ok(s) => s,
                Err(e) => match e.source {},
            }
        };
        self.outcome(summary)
    }

    fn outcome(&self, summary: RunSummary) -> SimulationOutcome {
        let red = match &self.topo.link(self.topo.bottleneck).queue {
            super::link::LinkQueue::Red(q) => *q.stats(),
            super::link::LinkQueue::DropTail(_) => RedStats::default(),
        };
        let customers = self
            .customer_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| {
                let traffic = self
                    .topo
                    .agents
                    .iter()
                    .find(|a| a.customer as usize == i)
                    .map(|a| a.traffic)
                    .unwrap_or(TrafficKind::Tcp);
                let cond = &self.conditioners[i];
                CustomerOutcome {
                    id,
                    traffic,
                    profile: ConditionerProfile {
                        green_rate_bps: cond.green().rate_bps(),
                        green_bucket_bytes: cond.green().capacity_bytes(),
                        yellow_rate_bps: cond.yellow().rate_bps(),
                        yellow_bucket_bytes: cond.yellow().capacity_bytes(),
                    },
                    delivered_bytes: self.delivered[i],
                    marked_bytes: cond.marked_bytes(),
                }
            })
            .collect();
        let links = self
            .topo
            .links
            .iter()
            .map(|l| LinkReport {
                name: l.name.clone(),
                stats: l.stats,
                queued: l.queue.len(),
                in_service: l.is_busy(),
                conserved: l.is_conserved(),
            })
            .collect();
        let (mut timeouts, mut fast) = (0, 0);
        for a in &self.agents {
            if let Agent::Tcp { sender, .. } = a {
                timeouts += sender.timeouts;
                fast += sender.fast_retransmits;
            }
        }
        SimulationOutcome {
            summary,
            duration: self.duration,
            customers,
            red,
            links,
            trace_digest: self.trace_digest,
            tcp_timeouts: timeouts,
            tcp_fast_retransmits: fast,
        }
    }

    fn dispatch(&mut self, sch: &mut Scheduler<NetEvent>, ev: Event<NetEvent>) {
        let now = ev.fire_time;
        self.trace_digest = (self.trace_digest ^ now.as_nanos()).wrapping_mul(0x0000_0100_0000_01b3);
        self.trace_digest = (self.trace_digest ^ ev.payload.tag()).wrapping_mul(0x0000_0100_0000_01b3);
        match ev.payload {
            NetEvent::Arrive { node, packet } => self.on_arrive(sch, node, packet),
            NetEvent::TxDone { link } => self.on_tx_done(sch, link),
            NetEvent::TcpStart { agent } => self.pump_tcp(sch, agent),
            NetEvent::UdpSend { agent } => self.on_udp_send(sch, agent),
            NetEvent::RetransmitTimeout { agent } => self.on_rto(sch, agent),
        }
    }

    fn new_packet(&mut self, agent: u16, kind: PacketKind, seq: u64, now: SimTime) -> Packet {
        let uid = self.next_uid;
        self.next_uid += 1;
        let customer = self.topo.agents[agent as usize].customer;
        let size = match kind {
            PacketKind::TcpAck => self.ack_size,
            _ => self.packet_size,
        };
        Packet::new(uid, customer, agent, kind, size, seq, now)
    }

    fn destination(&self, packet: &Packet) -> NodeId {
        if packet.kind.is_data() {
            self.topo.sink_nodes[packet.customer as usize]
        } else {
            self.topo.agents[packet.agent as usize].node
        }
    }

    fn on_arrive(&mut self, sch: &mut Scheduler<NetEvent>, node: NodeId, mut packet: Packet) {
        let role = self.topo.nodes[node.0 as usize].role;
        if let NodeRole::Customer { customer } = role {
            if packet.kind.is_data() && !packet.conditioned {
                debug_assert_eq!(customer, packet.customer);
                self.conditioners[customer as usize].mark(&mut packet, sch.now());
            }
        }
        if node == self.destination(&packet) {
            self.deliver(sch, packet);
        } else {
            self.forward(sch, node, packet);
        }
    }

    fn forward(&mut self, sch: &mut Scheduler<NetEvent>, at: NodeId, packet: Packet) {
        let dest = self.destination(&packet);
        let link_id = self
            .topo
            .next_hop(at, dest)
            .expect("every node reaches every other node");
        let link = &mut self.topo.links[link_id.0 as usize];
        link.stats.arrivals += 1;
        if !link.queue.enqueue(packet) {
            link.stats.drops += 1;
            return;
        }
        if !link.is_busy() {
            let head = link.queue.dequeue().expect("just enqueued");
            self.start_transmission(sch, link_id, head);
        }
    }

    fn start_transmission(&mut self, sch: &mut Scheduler<NetEvent>, link_id: LinkId, packet: Packet) {
        let now = sch.now();
        let link = &mut self.topo.links[link_id.0 as usize];
        let tx = link.transmit(packet, now);
        let to = link.to;
        sch.schedule(tx.tx_done, NetEvent::TxDone { link: link_id })
            .expect("future");
        sch.schedule(tx.arrival, NetEvent::Arrive { node: to, packet })
            .expect("future");
    }

    fn on_tx_done(&mut self, sch: &mut Scheduler<NetEvent>, link_id: LinkId) {
        let link = &mut self.topo.links[link_id.0 as usize];
        if let Some((watched, log)) = &mut self.watched {
            if *watched == link_id {
                let size = link.in_service.map(|p| p.size_bytes).unwrap_or(0);
                log.push((sch.now(), size));
            }
        }
        if let Some(next) = link.finish_transmission() {
            self.start_transmission(sch, link_id, next);
        }
    }

    fn deliver(&mut self, sch: &mut Scheduler<NetEvent>, packet: Packet) {
        let now = sch.now();
        match packet.kind {
            PacketKind::Udp => {
                self.delivered[packet.customer as usize][packet.color] += packet.size_bytes as u64;
            }
            PacketKind::TcpData => {
                self.delivered[packet.customer as usize][packet.color] += packet.size_bytes as u64;
                let ack_no = match &mut self.agents[packet.agent as usize] {
                    Agent::Tcp { receiver, .. } => receiver.on_data(packet.seq),
                    Agent::Udp(_) => unreachable!("tcp data from a udp agent"),
                };
                let ack = self.new_packet(packet.agent, PacketKind::TcpAck, ack_no, now);
                let sink = self.topo.sink_nodes[packet.customer as usize];
                self.forward(sch, sink, ack);
            }
            PacketKind::TcpAck => self.on_ack(sch, packet.agent, packet.seq),
        }
    }

    fn tcp(&mut self, agent: u16) -> &mut TcpRenoState {
        match &mut self.agents[agent as usize] {
            Agent::Tcp { sender, .. } => sender,
            Agent::Udp(_) => unreachable!("agent {agent} is not tcp"),
        }
    }

    fn send_segment(&mut self, sch: &mut Scheduler<NetEvent>, agent: u16, seq: u64) {
        let pkt = self.new_packet(agent, PacketKind::TcpData, seq, sch.now());
        let src = self.topo.agents[agent as usize].node;
        self.forward(sch, src, pkt);
    }

    fn restart_timer(&mut self, sch: &mut Scheduler<NetEvent>, agent: u16) {
        let tcp = self.tcp(agent);
        let old = tcp.retransmit_timer.take();
        let rto = tcp.rto_duration();
        if let Some(h) = old {
            sch.cancel(h);
        }
        let h = sch.schedule_in(rto, NetEvent::RetransmitTimeout { agent });
        self.tcp(agent).retransmit_timer = Some(h);
    }

    fn cancel_timer(&mut self, sch: &mut Scheduler<NetEvent>, agent: u16) {
        if let Some(h) = self.tcp(agent).retransmit_timer.take() {
            sch.cancel(h);
        }
    }

    /// Sends everything the window allows and makes sure a timer runs while
    /// data is outstanding.
    fn pump_tcp(&mut self, sch: &mut Scheduler<NetEvent>, agent: u16) {
        let now = sch.now();
        while let Some(seg) = self.tcp(agent).next_segment(now) {
            debug_assert!({
                let t = self.tcp(agent);
                t.flight_size() <= t.effective_window()
            });
            self.send_segment(sch, agent, seg.seq);
        }
        let tcp = self.tcp(agent);
        if tcp.flight_size() > 0 && tcp.retransmit_timer.is_none() {
            self.restart_timer(sch, agent);
        }
    }

    fn on_ack(&mut self, sch: &mut Scheduler<NetEvent>, agent: u16, ack: u64) {
        let now = sch.now();
        match self.tcp(agent).on_ack(ack, now) {
            AckEffect::NewData { .. } => {
                if self.tcp(agent).flight_size() > 0 {
                    self.restart_timer(sch, agent);
                } else {
                    self.cancel_timer(sch, agent);
                }
            }
            AckEffect::FastRetransmit { seq } => {
                self.send_segment(sch, agent, seq);
                self.restart_timer(sch, agent);
            }
            AckEffect::Duplicate { .. } | AckEffect::Stale => {}
        }
        self.pump_tcp(sch, agent);
    }

    fn on_rto(&mut self, sch: &mut Scheduler<NetEvent>, agent: u16) {
        let tcp = self.tcp(agent);
        tcp.retransmit_timer = None;
        tcp.on_timeout();
        self.pump_tcp(sch, agent);
    }

    fn on_udp_send(&mut self, sch: &mut Scheduler<NetEvent>, agent: u16) {
        let now = sch.now();
        let (seq, next) = match &mut self.agents[agent as usize] {
            Agent::Udp(u) => u.emit(now),
            Agent::Tcp { .. } => unreachable!("agent {agent} is not udp"),
        };
        let pkt = self.new_packet(agent, PacketKind::Udp, seq, now);
        let src = self.topo.agents[agent as usize].node;
        self.forward(sch, src, pkt);
        if next <= self.duration {
            sch.schedule(next, NetEvent::UdpSend { agent }).expect("future");
        }
    }
}

/// Builds and runs one scenario.
pub fn simulate(scenario: &ScenarioConfig) -> Result<SimulationOutcome, ConfigError> {
    Ok(Simulation::new(scenario)?.run())
}

/// Stable 64-bit fingerprint of a string, e.g. for naming runs.
pub fn fingerprint(s: &str) -> u64 {
    fnv1a64(s.as_bytes())
}
