//! Multi-color RED with the four accounting/threshold strategies.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::DiffservError;
use crate::netmodel::{Color, Packet, PerColor};
use crate::scalar::Scalar;
use crate::simcore::RngStream;

/// Drop thresholds (in packets) and ceiling probability for one color.
/// `{40/60}` means `min_th = 40`, `max_th = 60`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RedColorParams<S = f64> {
    pub min_th: S,
    pub max_th: S,
    pub max_p: S,
}

impl<S: Scalar> RedColorParams<S> {
    pub fn new(min_th: S, max_th: S, max_p: S) -> Self {
        Self {
            min_th,
            max_th,
            max_p,
        }
    }

    pub fn validate(&self, limit: S) -> Result<(), String> {
        if !(S::zero() <= self.min_th && self.min_th < self.max_th && self.max_th <= limit) {
            return Err(format!(
                "thresholds must satisfy 0 <= min_th < max_th <= {:?}, got {:?}/{:?}",
                limit, self.min_th, self.max_th
            ));
        }
        if !(S::zero() < self.max_p && self.max_p <= S::one()) {
            return Err(format!("max_p must lie in (0, 1], got {:?}", self.max_p));
        }
        Ok(())
    }
}

/// Classic RED law: zero up to `min_th`, linear to `max_p` at `max_th`,
/// forced drop at or above `max_th`.
pub fn red_drop_prob<S: Scalar>(avg: S, params: &RedColorParams<S>) -> S {
    if avg <= params.min_th {
        S::zero()
    } else if avg >= params.max_th {
        S::one()
    } else {
        params.max_p * (avg - params.min_th) / (params.max_th - params.min_th)
    }
}

/// One EWMA step: `(1 - w) * avg + w * sample`.
pub fn ewma<S: Scalar>(avg: S, sample: S, weight: S) -> S {
    (S::one() - weight) * avg + weight * sample
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RedMode {
    /// Single average, single threshold ("color blind" RED).
    Sast,
    /// Single average, per-color thresholds.
    Samt,
    /// Per-color averages, shared thresholds.
    Mast,
    /// Per-color averages, per-color thresholds.
    Mamt,
}

impl RedMode {
    pub fn multiple_averages(self) -> bool {
        matches!(self, RedMode::Mast | RedMode::Mamt)
    }

    pub fn multiple_thresholds(self) -> bool {
        matches!(self, RedMode::Samt | RedMode::Mamt)
    }

    pub fn from_parts(multiple_averages: bool, multiple_thresholds: bool) -> Self {
        match (multiple_averages, multiple_thresholds) {
            (false, false) => RedMode::Sast,
            (false, true) => RedMode::Samt,
            (true, false) => RedMode::Mast,
            (true, true) => RedMode::Mamt,
        }
    }
}

impl std::str::FromStr for RedMode {
    type Err = DiffservError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SAST" => Ok(RedMode::Sast),
            "SAMT" => Ok(RedMode::Samt),
            "MAST" => Ok(RedMode::Mast),
            "MAMT" => Ok(RedMode::Mamt),
            _ => Err(DiffservError::UnknownMode(s.to_string())),
        }
    }
}

/// How a per-color average measures the queue in multiple-average modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AverageBasis {
    /// Color c counts packets of color c or better (green ⊂ yellow ⊂ red).
    #[default]
    SameOrBetter,
    /// Color c counts only packets of color c.
    PerColor,
}

impl AverageBasis {
    fn counts(self, color: Color, occupancy: &PerColor<u32>) -> u32 {
        match self {
            AverageBasis::SameOrBetter => occupancy.0[..=color.index()].iter().sum(),
            AverageBasis::PerColor => occupancy[color],
        }
    }

    /// Whether an arrival of `arriving` contributes to the average of `color`.
    fn includes(self, color: Color, arriving: Color) -> bool {
        match self {
            AverageBasis::SameOrBetter => arriving <= color,
            AverageBasis::PerColor => arriving == color,
        }
    }
}

/// A validated accounting/threshold policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RedPolicy {
    pub mode: RedMode,
    pub basis: AverageBasis,
    pub params: PerColor<RedColorParams>,
}

impl RedPolicy {
    pub fn params_for(&self, color: Color) -> &RedColorParams {
        if self.mode.multiple_thresholds() {
            &self.params[color]
        } else {
            &self.params[Color::Green]
        }
    }
}

fn params_identical<S: Scalar>(params: &PerColor<RedColorParams<S>>) -> bool {
    params.0.iter().all(|p| *p == params.0[0])
}

/// Infers the taxonomy class from accounting style and per-color parameters.
pub fn classify_policy<S: Scalar>(
    multiple_averages: bool,
    params: &PerColor<RedColorParams<S>>,
) -> RedMode {
    RedMode::from_parts(multiple_averages, !params_identical(params))
}

/// Checks a requested mode against its parameters. Single-threshold modes
/// reject differing per-color thresholds; multiple-threshold modes accept
/// coinciding ones.
pub fn resolve_policy(
    mode: RedMode,
    basis: AverageBasis,
    params: PerColor<RedColorParams>,
    limit: usize,
) -> Result<RedPolicy, DiffservError> {
    for color in Color::ALL {
        params[color]
            .validate(limit as f64)
            .map_err(|msg| DiffservError::InvalidParams { color, msg })?;
    }
    if !mode.multiple_thresholds() && !params_identical(&params) {
        return Err(DiffservError::InconsistentPolicy {
            mode,
            inferred: classify_policy(mode.multiple_averages(), &params),
        });
    }
    Ok(RedPolicy {
        mode,
        basis,
        params,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RedConfig {
    pub limit_packets: usize,
    pub weight: f64,
    pub policy: RedPolicyConfig,
    /// Use the count-spaced drop probability `p / (1 - count * p)`.
    pub count_adjusted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RedPolicyConfig {
    pub mode: RedMode,
    #[serde(default)]
    pub basis: AverageBasis,
    pub green: RedColorParams,
    pub yellow: RedColorParams,
    pub red: RedColorParams,
}

impl RedPolicyConfig {
    pub fn params(&self) -> PerColor<RedColorParams> {
        PerColor([self.green, self.yellow, self.red])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RedOutcome {
    Enqueued,
    EarlyDrop,
    OverflowDrop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RedStats {
    pub arrivals: PerColor<u64>,
    pub enqueued: PerColor<u64>,
    pub early_drops: PerColor<u64>,
    pub overflow_drops: PerColor<u64>,
}

impl RedStats {
    pub fn drops(&self, color: Color) -> u64 {
        self.early_drops[color] + self.overflow_drops[color]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Averages {
    Single(f64),
    PerColor([f64; 3]),
}

/// RED queue with per-color parameters and a pluggable accounting strategy.
#[derive(Debug, Clone)]
pub struct MultiColorRedQueue {
    limit: usize,
    weight: f64,
    policy: RedPolicy,
    count_adjusted: bool,
    packets: VecDeque<Packet>,
    occupancy: PerColor<u32>,
    avgs: Averages,
    // arrivals since the last early drop, per color (count-adjusted mode)
    since_drop: PerColor<i64>,
    rng: RngStream,
    stats: RedStats,
}

impl MultiColorRedQueue {
    pub fn new(config: &RedConfig, rng: RngStream) -> Result<Self, DiffservError> {
        let policy = resolve_policy(
            config.policy.mode,
            config.policy.basis,
            config.policy.params(),
            config.limit_packets,
        )?;
        if !(config.weight > 0.0 && config.weight <= 1.0) {
            return Err(DiffservError::InvalidWeight(config.weight));
        }
        let avgs = if policy.mode.multiple_averages() {
            Averages::PerColor([0.0; 3])
        } else {
            Averages::Single(0.0)
        };
        Ok(Self {
            limit: config.limit_packets,
            weight: config.weight,
            policy,
            count_adjusted: config.count_adjusted,
            packets: VecDeque::with_capacity(config.limit_packets),
            occupancy: PerColor::default(),
            avgs,
            since_drop: PerColor([-1; 3]),
            rng,
            stats: RedStats::default(),
        })
    }

    pub fn policy(&self) -> &RedPolicy {
        &self.policy
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn occupancy(&self) -> PerColor<u32> {
        self.occupancy
    }

    pub fn stats(&self) -> &RedStats {
        &self.stats
    }

    /// Number of distinct averages maintained (1 for single accounting).
    pub fn average_count(&self) -> usize {
        match self.avgs {
            Averages::Single(_) => 1,
            Averages::PerColor(_) => 3,
        }
    }

    /// The average that governs drops for `color`.
    pub fn avg_for(&self, color: Color) -> f64 {
        match self.avgs {
            Averages::Single(a) => a,
            Averages::PerColor(a) => a[color.index()],
        }
    }

    /// Overrides the stored average(s); used to probe the drop law.
    pub fn force_avg(&mut self, avg: f64) {
        self.avgs = match self.avgs {
            Averages::Single(_) => Averages::Single(avg),
            Averages::PerColor(_) => Averages::PerColor([avg; 3]),
        };
    }

    /// Folds the current occupancy into the average(s) for an arrival of
    /// `arriving`. Single accounting ignores the color.
    pub fn update_avg(&mut self, arriving: Color) {
        let w = self.weight;
        match &mut self.avgs {
            Averages::Single(a) => {
                let total = self.occupancy.total() as f64;
                *a = ewma(*a, total, w);
            }
            Averages::PerColor(avgs) => {
                let basis = self.policy.basis;
                for color in Color::ALL {
                    if basis.includes(color, arriving) {
                        let q = basis.counts(color, &self.occupancy) as f64;
                        avgs[color.index()] = ewma(avgs[color.index()], q, w);
                    }
                }
            }
        }
    }

    /// Drop probability for an arrival of `color` at the current average.
    pub fn drop_prob(&self, color: Color) -> f64 {
        let base = red_drop_prob(self.avg_for(color), self.policy.params_for(color));
        if !self.count_adjusted || base <= 0.0 || base >= 1.0 {
            return base;
        }
        let count = self.since_drop[color].max(0) as f64;
        let denom = 1.0 - count * base;
        if denom <= 0.0 {
            1.0
        } else {
            (base / denom).min(1.0)
        }
    }

    /// Draws the early-drop decision for an arrival of `color` at the
    /// current average, leaving the average untouched.
    pub fn early_drop(&mut self, color: Color) -> bool {
        let p = self.drop_prob(color);
        if p <= 0.0 {
            self.since_drop[color] = -1;
            return false;
        }
        self.since_drop[color] += 1;
        let drop = p >= 1.0 || self.rng.uniform() < p;
        if drop {
            self.since_drop[color] = 0;
        }
        drop
    }

    pub fn enqueue(&mut self, packet: Packet) -> RedOutcome {
        let color = packet.color;
        self.stats.arrivals[color] += 1;
        self.update_avg(color);
        if self.early_drop(color) {
            self.stats.early_drops[color] += 1;
            return RedOutcome::EarlyDrop;
        }
        if self.packets.len() >= self.limit {
            self.stats.overflow_drops[color] += 1;
            return RedOutcome::OverflowDrop;
        }
        self.occupancy[color] += 1;
        self.stats.enqueued[color] += 1;
        self.packets.push_back(packet);
        RedOutcome::Enqueued
    }

    pub fn dequeue(&mut self) -> Option<Packet> {
        let p = self.packets.pop_front()?;
        self.occupancy[p.color] -= 1;
        Some(p)
    }
}
