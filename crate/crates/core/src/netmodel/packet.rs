use std::fmt;

use serde::{Deserialize, Serialize};

use crate::simcore::SimTime;

/// Drop precedence. Ordered best (green) to worst (red).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Green,
    Yellow,
    Red,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::Green, Color::Yellow, Color::Red];

    pub const fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::Green => "green",
            Color::Yellow => "yellow",
            Color::Red => "red",
        })
    }
}

/// Per-color values indexed by [`Color`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerColor<T>(pub [T; 3]);

impl<T> std::ops::Index<Color> for PerColor<T> {
    type Output = T;
    fn index(&self, c: Color) -> &T {
        &self.0[c.index()]
    }
}

impl<T> std::ops::IndexMut<Color> for PerColor<T> {
    fn index_mut(&mut self, c: Color) -> &mut T {
        &mut self.0[c.index()]
    }
}

impl<T: Copy + std::iter::Sum<T>> PerColor<T> {
    pub fn total(&self) -> T {
        self.0.iter().copied().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketKind {
    TcpData,
    TcpAck,
    Udp,
}

impl PacketKind {
    pub fn is_data(self) -> bool {
        !matches!(self, PacketKind::TcpAck)
    }
}

/// One simulated IP packet.
///
/// For `TcpData` the `seq` field is the segment number; for `TcpAck` it is the
/// cumulative acknowledgement (next segment expected). UDP packets carry a
/// running counter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub uid: u64,
    pub customer: u8,
    /// Index of the sending agent within the whole scenario.
    pub agent: u16,
    pub kind: PacketKind,
    pub size_bytes: u32,
    pub color: Color,
    /// Set once a traffic conditioner has recolored the packet.
    pub conditioned: bool,
    pub seq: u64,
    pub created_at: SimTime,
}

impl Packet {
    /// A freshly emitted packet; sources mark everything green.
    pub fn new(
        uid: u64,
        customer: u8,
        agent: u16,
        kind: PacketKind,
        size_bytes: u32,
        seq: u64,
        created_at: SimTime,
    ) -> Self {
        Self {
            uid,
            customer,
            agent,
            kind,
            size_bytes,
            color: Color::Green,
            conditioned: false,
            seq,
            created_at,
        }
    }
}
