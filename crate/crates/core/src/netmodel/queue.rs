use std::collections::VecDeque;

use super::packet::Packet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Accepted,
    Dropped,
}

/// FIFO queue with a hard packet limit.
#[derive(Debug, Clone)]
pub struct DropTailQueue {
    limit: usize,
    packets: VecDeque<Packet>,
}

impl DropTailQueue {
    pub fn new(limit_packets: usize) -> Self {
        Self {
            limit: limit_packets,
            packets: VecDeque::with_capacity(limit_packets),
        }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn enqueue(&mut self, packet: Packet) -> EnqueueOutcome {
        if self.packets.len() < self.limit {
            self.packets.push_back(packet);
            EnqueueOutcome::Accepted
        } else {
            EnqueueOutcome::Dropped
        }
    }

    pub fn dequeue(&mut self) -> Option<Packet> {
        self.packets.pop_front()
    }
}
