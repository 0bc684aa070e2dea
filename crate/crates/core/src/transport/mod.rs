//! TCP Reno senders and receivers, and the constant-rate UDP source.

mod sink;
mod tcp;
mod udp;

pub use sink::TcpReceiver;
pub use tcp::{AckEffect, Segment, TcpConfig, TcpRenoState};
pub use udp::UdpCbrState;
