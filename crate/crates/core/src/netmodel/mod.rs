//! Packets, links, queues, the reference topology and the simulation loop.

mod link;
mod network;
mod packet;
mod queue;
mod topology;

pub use link::{Link, LinkId, LinkQueue, LinkStats, NodeId, Transmission};
pub use network::{
    fingerprint, simulate, CustomerOutcome, LinkReport, NetEvent, Simulation, SimulationOutcome,
};
pub use packet::{Color, Packet, PacketKind, PerColor};
pub use queue::{DropTailQueue, EnqueueOutcome};
pub use topology::{build_topology, AgentSpec, Node, NodeRole, Topology};
