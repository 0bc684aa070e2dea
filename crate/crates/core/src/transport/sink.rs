use std::collections::BTreeSet;

/// Cumulative-ACK receiver, one ACK per data segment.
#[derive(Debug, Clone, Default)]
pub struct TcpReceiver {
    next_expected: u64,
    out_of_order: BTreeSet<u64>,
    pub segments_received: u64,
}

impl TcpReceiver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_expected(&self) -> u64 {
        self.next_expected
    }

    /// Accepts segment `seq` and returns the acknowledgement to send back.
    pub fn on_data(&mut self, seq: u64) -> u64 {
        self.segments_received += 1;
        if seq == self.next_expected {
            self.next_expected += 1;
            while self.out_of_order.remove(&self.next_expected) {
                self.next_expected += 1;
            }
        } else if seq > self.next_expected {
            self.out_of_order.insert(seq);
        }
        self.next_expected
    }
}
