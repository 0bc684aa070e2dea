use serde::Serialize;

use super::packet::Packet;
use super::queue::{DropTailQueue, EnqueueOutcome};
use crate::diffserv::{MultiColorRedQueue, RedOutcome};
use crate::simcore::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NodeId(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LinkId(pub u16);

#[derive(Debug, Clone)]
pub enum LinkQueue {
    DropTail(DropTailQueue),
    Red(Box<MultiColorRedQueue>),
}

impl LinkQueue {
    pub fn len(&self) -> usize {
        match self {
            LinkQueue::DropTail(q) => q.len(),
            LinkQueue::Red(q) => q.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_red(&self) -> bool {
        matches!(self, LinkQueue::Red(_))
    }

    /// Returns true if the packet was admitted.
    pub fn enqueue(&mut self, packet: Packet) -> bool {
        match self {
            LinkQueue::DropTail(q) => q.enqueue(packet) == EnqueueOutcome::Accepted,
            LinkQueue::Red(q) => q.enqueue(packet) == RedOutcome::Enqueued,
        }
    }

    pub fn dequeue(&mut self) -> Option<Packet> {
        match self {
            LinkQueue::DropTail(q) => q.dequeue(),
            LinkQueue::Red(q) => q.dequeue(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LinkStats {
    /// Packets offered to the link's queue.
    pub arrivals: u64,
    pub drops: u64,
    /// Packets whose serialization has completed.
    pub transmitted: u64,
    pub bytes_transmitted: u64,
}

/// When a transmission started at `now` completes, and when it lands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transmission {
    pub tx_done: SimTime,
    pub arrival: SimTime,
}

/// A unidirectional link: a queue feeding one transmitter.
#[derive(Debug, Clone)]
pub struct Link {
    pub name: String,
    pub from: NodeId,
    pub to: NodeId,
    pub bandwidth_bps: u64,
    pub delay: SimTime,
    pub queue: LinkQueue,
    pub(crate) in_service: Option<Packet>,
    pub stats: LinkStats,
}

impl Link {
    pub fn new(
        name: String,
        from: NodeId,
        to: NodeId,
        bandwidth_bps: u64,
        delay: SimTime,
        queue: LinkQueue,
    ) -> Self {
        Self {
            name,
            from,
            to,
            bandwidth_bps,
            delay,
            queue,
            in_service: None,
            stats: LinkStats::default(),
        }
    }

    pub fn is_busy(&self) -> bool {
        self.in_service.is_some()
    }

    pub fn serialization(&self, size_bytes: u32) -> SimTime {
        SimTime::serialization(size_bytes, self.bandwidth_bps)
    }

    /// Puts `packet` on the wire at `now`. The transmitter must be idle.
    pub fn transmit(&mut self, packet: Packet, now: SimTime) -> Transmission {
        assert!(self.in_service.is_none(), "link {} already transmitting", self.name);
        let tx_done = now + self.serialization(packet.size_bytes);
        self.in_service = Some(packet);
        Transmission {
            tx_done,
            arrival: tx_done + self.delay,
        }
    }

    /// Marks the current transmission finished; returns the next packet to
    /// send, if any is queued.
    pub fn finish_transmission(&mut self) -> Option<Packet> {
        let done = self.in_service.take().expect("no transmission in progress");
        self.stats.transmitted += 1;
        self.stats.bytes_transmitted += done.size_bytes as u64;
        self.queue.dequeue()
    }

    /// `arrivals = transmitted + drops + queued + in service`.
    pub fn is_conserved(&self) -> bool {
        self.stats.arrivals
            == self.stats.transmitted
                + self.stats.drops
                + self.queue.len() as u64
                + self.in_service.is_some() as u64
    }
}
