//! Packet-counting TCP Reno sender state.

use serde::{Deserialize, Serialize};

use crate::simcore::{EventHandle, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcpConfig {
    /// Receiver-advertised window clamp, packets.
    pub max_window: u32,
    pub initial_cwnd: f64,
    pub initial_ssthresh: f64,
    pub rto_min_s: f64,
    pub rto_initial_s: f64,
    pub rto_max_s: f64,
}

impl Default for TcpConfig {
    fn default() -> Self {
        Self {
            max_window: 64,
            initial_cwnd: 1.0,
            initial_ssthresh: 64.0,
            rto_min_s: 1.0,
            rto_initial_s: 3.0,
            rto_max_s: 64.0,
        }
    }
}

/// What an incoming acknowledgement did to the sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckEffect {
    /// Acknowledged nothing new and duplicated nothing; ignored.
    Stale,
    /// Advanced `snd_una` by this many segments.
    NewData { acked: u64 },
    Duplicate { count: u32 },
    /// Third duplicate: retransmit this segment.
    FastRetransmit { seq: u64 },
}

/// A segment the sender is permitted to put on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub seq: u64,
    pub retransmission: bool,
}

#[derive(Debug, Clone)]
pub struct TcpRenoState {
    cfg: TcpConfig,
    pub cwnd: f64,
    pub ssthresh: f64,
    /// Oldest unacknowledged segment.
    pub snd_una: u64,
    /// Next segment to transmit.
    pub snd_nxt: u64,
    /// One past the highest segment ever transmitted.
    pub snd_max: u64,
    pub dupacks: u32,
    pub srtt: Option<f64>,
    pub rttvar: f64,
    pub rto: f64,
    pub in_fast_recovery: bool,
    /// `snd_max` at the last timeout; duplicates below it do not trigger
    /// another fast retransmit.
    recover: Option<u64>,
    /// Segment being timed and its send time.
    timed: Option<(u64, SimTime)>,
    pub retransmit_timer: Option<EventHandle>,
    pub timeouts: u64,
    pub fast_retransmits: u64,
}

impl TcpRenoState {
    pub fn new(cfg: TcpConfig) -> Self {
        Self {
            cfg,
            cwnd: cfg.initial_cwnd,
            ssthresh: cfg.initial_ssthresh,
            snd_una: 0,
            snd_nxt: 0,
            snd_max: 0,
            dupacks: 0,
            srtt: None,
            rttvar: 0.0,
            rto: cfg.rto_initial_s,
            in_fast_recovery: false,
            recover: None,
            timed: None,
            retransmit_timer: None,
            timeouts: 0,
            fast_retransmits: 0,
        }
    }

    pub fn config(&self) -> &TcpConfig {
        &self.cfg
    }

    /// Segments sent and not yet acknowledged.
    pub fn flight_size(&self) -> u64 {
        self.snd_nxt - self.snd_una
    }

    /// Usable window in whole segments: `floor(min(cwnd, max_window))`.
    pub fn effective_window(&self) -> u64 {
        self.cwnd.min(self.cfg.max_window as f64).max(1.0).floor() as u64
    }

    pub fn rto_duration(&self) -> SimTime {
        SimTime::from_secs_f64(self.rto)
    }

    fn halve_window(&self) -> f64 {
        ((self.flight_size() / 2) as f64).max(2.0)
    }

    /// Hands out the next segment if the window allows one.
    pub fn next_segment(&mut self, now: SimTime) -> Option<Segment> {
        if self.flight_size() >= self.effective_window() {
            return None;
        }
        let seq = self.snd_nxt;
        self.snd_nxt += 1;
        let retransmission = seq < self.snd_max;
        if !retransmission {
            self.snd_max = self.snd_nxt;
            if self.timed.is_none() {
                self.timed = Some((seq, now));
            }
        }
        Some(Segment {
            seq,
            retransmission,
        })
    }

    pub fn on_ack(&mut self, ack: u64, now: SimTime) -> AckEffect {
        if ack > self.snd_una {
            let acked = ack - self.snd_una;
            if let Some((seq, sent)) = self.timed {
                if ack > seq {
                    self.rtt_update((now - sent).as_secs_f64());
                    self.timed = None;
                }
            }
            self.snd_una = ack;
            if self.snd_nxt < self.snd_una {
                // cumulative ack covered data re-sent after a timeout
                self.snd_nxt = self.snd_una;
            }
            if self.in_fast_recovery {
                self.in_fast_recovery = false;
                self.cwnd = self.ssthresh;
            } else if self.cwnd < self.ssthresh {
                self.cwnd += 1.0;
            } else {
                self.cwnd += 1.0 / self.cwnd;
            }
            self.dupacks = 0;
            return AckEffect::NewData { acked };
        }
        if ack < self.snd_una || self.flight_size() == 0 {
            return AckEffect::Stale;
        }
        self.dupacks += 1;
        if self.in_fast_recovery {
            self.cwnd += 1.0;
            return AckEffect::Duplicate {
                count: self.dupacks,
            };
        }
        let after_timeout = self.recover.is_some_and(|r| self.snd_una < r);
        if self.dupacks == 3 && !after_timeout {
            self.ssthresh = self.halve_window();
            self.cwnd = self.ssthresh + 3.0;
            self.in_fast_recovery = true;
            self.timed = None;
            self.fast_retransmits += 1;
            return AckEffect::FastRetransmit { seq: self.snd_una };
        }
        AckEffect::Duplicate {
            count: self.dupacks,
        }
    }

    /// Retransmission timeout: collapse the window and go back to `snd_una`.
    /// Returns the segment to resend.
    pub fn on_timeout(&mut self) -> u64 {
        self.ssthresh = self.halve_window();
        self.cwnd = 1.0;
        self.in_fast_recovery = false;
        self.dupacks = 0;
        self.recover = Some(self.snd_max);
        self.timed = None;
        self.rto = (self.rto * 2.0).min(self.cfg.rto_max_s);
        self.snd_nxt = self.snd_una;
        self.timeouts += 1;
        self.snd_una
    }

    pub fn rtt_update(&mut self, sample: f64) {
        match self.srtt {
            None => {
                self.srtt = Some(sample);
                self.rttvar = sample / 2.0;
            }
            Some(srtt) => {
                self.rttvar = 0.75 * self.rttvar + 0.25 * (srtt - sample).abs();
                self.srtt = Some(0.875 * srtt + 0.125 * sample);
            }
        }
        let srtt = self.srtt.expect("set above");
        self.rto = (srtt + 4.0 * self.rttvar)
            .max(self.cfg.rto_min_s)
            .min(self.cfg.rto_max_s);
    }
}
