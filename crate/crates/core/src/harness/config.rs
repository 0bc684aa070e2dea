//! Scenario configuration: the fixed network constants plus per-customer
//! conditioner settings and the RED policy at the bottleneck.
//!
//! On disk this is TOML with a `[general]` section (run-wide constants), a
//! `[links]` section, a `[red]` section and one `[[customers]]` block per
//! customer. Every field has a default matching the reference scenario, so a
//! config file only needs to spell out what it changes.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diffserv::{
    resolve_policy, AverageBasis, ConditionerProfile, RedColorParams, RedConfig, RedMode,
    RedPolicyConfig,
};
use crate::simcore::SimTime;
use crate::transport::TcpConfig;

pub const PACKET_SIZE: u32 = 576;
pub const ACK_SIZE: u32 = 40;
pub const QUEUE_LIMIT: usize = 60;
pub const BUCKET_SIZES: [u32; 6] = [1, 2, 4, 8, 16, 32];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneralConfig {
    pub duration_s: f64,
    pub packet_size_bytes: u32,
    pub ack_size_bytes: u32,
    pub tcp_window_packets: u32,
    pub udp_rate_bps: u64,
    pub queue_limit_packets: usize,
    pub tcp_flows_per_customer: u32,
    /// TCP flows start uniformly in `[0, tcp_start_jitter_s]`.
    pub tcp_start_jitter_s: f64,
    pub udp_start_s: f64,
    pub rto_min_s: f64,
    pub rto_initial_s: f64,
    pub rto_max_s: f64,
}

impl Default for GeneralConfig {
    fn default() -> Self {
        Self {
            duration_s: 100.0,
            packet_size_bytes: PACKET_SIZE,
            ack_size_bytes: ACK_SIZE,
            tcp_window_packets: 64,
            udp_rate_bps: 1_280_000,
            queue_limit_packets: QUEUE_LIMIT,
            tcp_flows_per_customer: 5,
            tcp_start_jitter_s: 1.0,
            udp_start_s: 0.0,
            rto_min_s: 1.0,
            rto_initial_s: 3.0,
            rto_max_s: 64.0,
        }
    }
}

impl GeneralConfig {
    pub fn duration(&self) -> SimTime {
        SimTime::from_secs_f64(self.duration_s)
    }

    pub fn tcp(&self) -> TcpConfig {
        TcpConfig {
            max_window: self.tcp_window_packets,
            initial_cwnd: 1.0,
            initial_ssthresh: self.tcp_window_packets as f64,
            rto_min_s: self.rto_min_s,
            rto_initial_s: self.rto_initial_s,
            rto_max_s: self.rto_max_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub bandwidth_bps: u64,
    pub delay_us: u64,
}

impl LinkSpec {
    pub fn delay(&self) -> SimTime {
        SimTime::from_micros(self.delay_us)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinksConfig {
    /// Source to customer edge.
    pub access: LinkSpec,
    /// Customer to Router 1, and Router 3 to sink.
    pub customer: LinkSpec,
    /// Router 1 to Router 2 (ground station up to the satellite).
    pub uplink: LinkSpec,
    /// Router 2 to Router 3 (satellite down to the destination ground station).
    pub downlink: LinkSpec,
}

impl Default for LinksConfig {
    fn default() -> Self {
        Self {
            access: LinkSpec {
                bandwidth_bps: 10_000_000,
                delay_us: 1,
            },
            customer: LinkSpec {
                bandwidth_bps: 1_500_000,
                delay_us: 5,
            },
            uplink: LinkSpec {
                bandwidth_bps: 1_500_000,
                delay_us: 125_000,
            },
            downlink: LinkSpec {
                bandwidth_bps: 1_500_000,
                delay_us: 125_000,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RedSection {
    pub mode: RedMode,
    pub basis: AverageBasis,
    pub weight: f64,
    pub count_adjusted: bool,
    pub green: RedColorParams,
    pub yellow: RedColorParams,
    pub red: RedColorParams,
}

impl Default for RedSection {
    fn default() -> Self {
        Self {
            mode: RedMode::Samt,
            basis: AverageBasis::SameOrBetter,
            weight: 0.002,
            count_adjusted: false,
            green: RedColorParams::new(40.0, 60.0, 0.1),
            yellow: RedColorParams::new(20.0, 40.0, 0.5),
            red: RedColorParams::new(0.0, 10.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficKind {
    Tcp,
    Udp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomerConfig {
    pub id: u8,
    pub traffic: TrafficKind,
    pub green_rate_bps: u64,
    pub green_bucket_packets: u32,
    #[serde(default)]
    pub yellow_rate_bps: u64,
    #[serde(default = "one")]
    pub yellow_bucket_packets: u32,
}

fn one() -> u32 {
    1
}

impl CustomerConfig {
    pub fn profile(&self, packet_size: u32) -> ConditionerProfile {
        ConditionerProfile {
            green_rate_bps: self.green_rate_bps,
            green_bucket_bytes: self.green_bucket_packets as u64 * packet_size as u64,
            yellow_rate_bps: self.yellow_rate_bps,
            yellow_bucket_bytes: self.yellow_bucket_packets as u64 * packet_size as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub simulation_id: Option<u32>,
    #[serde(default)]
    pub general: GeneralConfig,
    #[serde(default)]
    pub links: LinksConfig,
    #[serde(default)]
    pub red: RedSection,
    #[serde(default)]
    pub customers: Vec<CustomerConfig>,
}

/// One offending field and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldIssue {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {msg}")]
    Read { path: String, msg: String },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid scenario:\n{}", format_issues(.0))]
    Invalid(Vec<FieldIssue>),
}

fn format_issues(issues: &[FieldIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  - {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl ConfigError {
    pub fn issues(&self) -> &[FieldIssue] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

/// Whether validation also pins levels to the values of the experiment design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    FreeForm,
    Design,
}

impl ScenarioConfig {
    /// The reference topology with nine TCP customers and one UDP customer,
    /// all sharing one conditioner profile, and a two-color SAMT queue.
    pub fn reference(green_rate_bps: u64, green_bucket_packets: u32) -> Self {
        let customers = (1..=10)
            .map(|id| CustomerConfig {
                id,
                traffic: if id == 10 {
                    TrafficKind::Udp
                } else {
                    TrafficKind::Tcp
                },
                green_rate_bps,
                green_bucket_packets,
                yellow_rate_bps: 0,
                yellow_bucket_packets: 1,
            })
            .collect();
        Self {
            seed: 1,
            simulation_id: None,
            general: GeneralConfig::default(),
            links: LinksConfig::default(),
            red: RedSection::default(),
            customers,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn red_config(&self) -> RedConfig {
        RedConfig {
            limit_packets: self.general.queue_limit_packets,
            weight: self.red.weight,
            count_adjusted: self.red.count_adjusted,
            policy: RedPolicyConfig {
                mode: self.red.mode,
                basis: self.red.basis,
                green: self.red.green,
                yellow: self.red.yellow,
                red: self.red.red,
            },
        }
    }

    pub fn duration(&self) -> SimTime {
        self.general.duration()
    }

    /// Collects every problem rather than stopping at the first.
    pub fn validate(&self, strictness: Strictness) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        let mut bad = |field: &str, message: String| {
            issues.push(FieldIssue {
                field: field.to_string(),
                message,
            })
        };
        let g = &self.general;
        if !(g.duration_s.is_finite() && g.duration_s >= 0.0) {
            bad("general.duration_s", format!("must be a finite non-negative number, got {}", g.duration_s));
        }
        if g.packet_size_bytes == 0 {
            bad("general.packet_size_bytes", "must be positive".into());
        }
        if g.ack_size_bytes == 0 {
            bad("general.ack_size_bytes", "must be positive".into());
        }
        if g.tcp_window_packets == 0 {
            bad("general.tcp_window_packets", "must be positive".into());
        }
        if g.udp_rate_bps == 0 {
            bad("general.udp_rate_bps", "must be positive".into());
        }
        if g.queue_limit_packets == 0 {
            bad("general.queue_limit_packets", "must be positive".into());
        }
        if g.tcp_flows_per_customer == 0 {
            bad("general.tcp_flows_per_customer", "must be positive".into());
        }
        if !(g.tcp_start_jitter_s.is_finite() && g.tcp_start_jitter_s >= 0.0) {
            bad("general.tcp_start_jitter_s", "must be non-negative".into());
        }
        if !(g.udp_start_s.is_finite() && g.udp_start_s >= 0.0) {
            bad("general.udp_start_s", "must be non-negative".into());
        }
        if !(g.rto_min_s > 0.0 && g.rto_min_s <= g.rto_initial_s && g.rto_initial_s <= g.rto_max_s) {
            bad(
                "general.rto_min_s",
                "require 0 < rto_min_s <= rto_initial_s <= rto_max_s".into(),
            );
        }
        for (name, link) in [
            ("links.access", self.links.access),
            ("links.customer", self.links.customer),
            ("links.uplink", self.links.uplink),
            ("links.downlink", self.links.downlink),
        ] {
            if link.bandwidth_bps == 0 {
                bad(&format!("{name}.bandwidth_bps"), "must be positive".into());
            }
        }
        if !(self.red.weight > 0.0 && self.red.weight <= 1.0) {
            bad("red.weight", format!("must lie in (0, 1], got {}", self.red.weight));
        }
        if let Err(e) = resolve_policy(
            self.red.mode,
            self.red.basis,
            self.red_config().policy.params(),
            g.queue_limit_packets,
        ) {
            bad("red", e.to_string());
        }
        if self.customers.is_empty() {
            bad("customers", "at least one customer is required".into());
        }
        if self.customers.len() > u8::MAX as usize {
            bad("customers", "too many customers".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, c) in self.customers.iter().enumerate() {
            let field = |f: &str| format!("customers[{i}].{f}");
            if c.id == 0 {
                bad(&field("id"), "customer ids start at 1".into());
            }
            if !seen.insert(c.id) {
                bad(&field("id"), format!("duplicate customer id {}", c.id));
            }
            if c.green_rate_bps == 0 {
                bad(&field("green_rate_bps"), "must be positive".into());
            }
            if c.green_bucket_packets == 0 {
                bad(&field("green_bucket_packets"), "must be positive".into());
            }
            if c.yellow_bucket_packets == 0 {
                bad(&field("yellow_bucket_packets"), "must be positive".into());
            }
            if c.traffic == TrafficKind::Udp && c.yellow_rate_bps != 0 {
                bad(&field("yellow_rate_bps"), "the UDP customer has no yellow rate".into());
            }
            if strictness == Strictness::Design {
                if !BUCKET_SIZES.contains(&c.green_bucket_packets) {
                    bad(&field("green_bucket_packets"), format!("must be one of {BUCKET_SIZES:?}"));
                }
                if c.yellow_rate_bps > 0 && !BUCKET_SIZES.contains(&c.yellow_bucket_packets) {
                    bad(&field("yellow_bucket_packets"), format!("must be one of {BUCKET_SIZES:?}"));
                }
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(issues))
        }
    }
}
