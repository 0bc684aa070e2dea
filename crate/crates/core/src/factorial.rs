//! Full-factorial enumeration of the two-color and three-color designs.
//!
//! Each design is split into green-rate blocks with fixed ID bases. Inside a
//! block, runs are ordered lexicographically over (threshold set, max_p set,
//! [yellow rate, yellow bucket,] green bucket) with the last factor varying
//! fastest, and `simulation_id = base + index + 1`.
//!
//! The two-color max_p list has one duplicated pair in its source table; it is
//! completed with `{0.5, 0.5}` so that the six pairs are distinct and a block
//! holds 144 runs.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::harness::config::{
    CustomerConfig, RedSection, ScenarioConfig, TrafficKind, BUCKET_SIZES,
};
use crate::diffserv::{RedColorParams, RedMode};
use crate::simcore::mix_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignMode {
    TwoColor,
    ThreeColor,
}

impl DesignMode {
    pub const ALL: [DesignMode; 2] = [DesignMode::TwoColor, DesignMode::ThreeColor];

    pub fn as_str(self) -> &'static str {
        match self {
            DesignMode::TwoColor => "two-color",
            DesignMode::ThreeColor => "three-color",
        }
    }
}

impl fmt::Display for DesignMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DesignMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "two-color" | "two" | "2" => Ok(DesignMode::TwoColor),
            "three-color" | "three" | "3" => Ok(DesignMode::ThreeColor),
            other => Err(format!("unknown design mode '{other}' (expected two-color or three-color)")),
        }
    }
}

/// `min_th/max_th` in packets.
pub type Thresholds = (u32, u32);

#[derive(Debug, Clone, PartialEq)]
pub enum LevelValue {
    RateBps(u64),
    Packets(u32),
    /// Max drop probability per color present in the design, best color first.
    MaxP(Vec<f64>),
    Thresholds(Vec<Thresholds>),
}

impl fmt::Display for LevelValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelValue::RateBps(r) => write!(f, "{}", *r as f64 / 1000.0),
            LevelValue::Packets(p) => write!(f, "{p}"),
            LevelValue::MaxP(ps) => {
                let parts: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
                write!(f, "{{{}}}", parts.join(" "))
            }
            LevelValue::Thresholds(ts) => {
                let parts: Vec<String> = ts.iter().map(|(lo, hi)| format!("{lo}/{hi}")).collect();
                write!(f, "{{{}}}", parts.join(" "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub name: &'static str,
    pub levels: Vec<LevelValue>,
}

impl Factor {
    fn new(name: &'static str, levels: Vec<LevelValue>) -> Self {
        assert!(!levels.is_empty(), "factor {name} has no levels");
        for (i, a) in levels.iter().enumerate() {
            assert!(!levels[..i].contains(a), "factor {name} repeats level {a}");
        }
        Self { name, levels }
    }

    pub fn labels(&self) -> Vec<String> {
        self.levels.iter().map(|l| l.to_string()).collect()
    }
}

pub const GREEN_RATE: &str = "green rate";
pub const THRESHOLDS: &str = "drop thresholds";
pub const MAX_P: &str = "max drop probability";
pub const YELLOW_RATE: &str = "yellow rate";
pub const YELLOW_BUCKET: &str = "yellow bucket size";
pub const GREEN_BUCKET: &str = "green bucket size";

const TWO_COLOR_RATES: [u64; 8] = [12_800, 25_600, 38_400, 76_800, 102_400, 128_000, 153_600, 179_200];
const THREE_COLOR_RATES: [u64; 4] = [12_800, 25_600, 38_400, 76_800];
const YELLOW_RATES: [u64; 2] = [12_800, 128_000];

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub mode: DesignMode,
    /// All factors; the first is the green rate that selects the block.
    pub factors: Vec<Factor>,
    /// `(id base, green rate)` per block.
    pub blocks: Vec<(u32, u64)>,
}

fn packets() -> Vec<LevelValue> {
    BUCKET_SIZES.iter().map(|&b| LevelValue::Packets(b)).collect()
}

impl Design {
    pub fn new(mode: DesignMode) -> Self {
        let (rates, step): (&[u64], u32) = match mode {
            DesignMode::TwoColor => (&TWO_COLOR_RATES, 200),
            DesignMode::ThreeColor => (&THREE_COLOR_RATES, 1000),
        };
        let blocks = rates
            .iter()
            .enumerate()
            .map(|(i, &r)| (i as u32 * step, r))
            .collect();
        let rate_factor = Factor::new(GREEN_RATE, rates.iter().map(|&r| LevelValue::RateBps(r)).collect());
        let t = |v: &[Thresholds]| LevelValue::Thresholds(v.to_vec());
        let p = |v: &[f64]| LevelValue::MaxP(v.to_vec());
        let factors = match mode {
            DesignMode::TwoColor => vec![
                rate_factor,
                Factor::new(
                    THRESHOLDS,
                    vec![
                        t(&[(40, 60), (0, 10)]),
                        t(&[(40, 60), (0, 20)]),
                        t(&[(40, 60), (0, 5)]),
                        t(&[(40, 60), (20, 40)]),
                    ],
                ),
                Factor::new(
                    MAX_P,
                    vec![
                        p(&[0.1, 0.1]),
                        p(&[0.1, 0.5]),
                        p(&[0.1, 1.0]),
                        p(&[0.5, 0.5]),
                        p(&[0.5, 1.0]),
                        p(&[1.0, 1.0]),
                    ],
                ),
                Factor::new(GREEN_BUCKET, packets()),
            ],
            DesignMode::ThreeColor => vec![
                rate_factor,
                Factor::new(
                    THRESHOLDS,
                    vec![
                        t(&[(40, 60), (20, 40), (0, 10)]),
                        t(&[(40, 60), (20, 40), (0, 20)]),
                    ],
                ),
                Factor::new(
                    MAX_P,
                    vec![
                        p(&[0.1, 0.5, 1.0]),
                        p(&[0.1, 1.0, 1.0]),
                        p(&[0.5, 0.5, 1.0]),
                        p(&[0.5, 1.0, 1.0]),
                        p(&[1.0, 1.0, 1.0]),
                    ],
                ),
                Factor::new(YELLOW_RATE, YELLOW_RATES.iter().map(|&r| LevelValue::RateBps(r)).collect()),
                Factor::new(YELLOW_BUCKET, packets()),
                Factor::new(GREEN_BUCKET, packets()),
            ],
        };
        Self { mode, factors, blocks }
    }

    pub fn block_size(&self) -> usize {
        self.factors[1..].iter().map(|f| f.levels.len()).product()
    }

    pub fn len(&self) -> usize {
        self.blocks.len() * self.block_size()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn factor_index(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.name == name)
    }

    /// Every simulation ID in enumeration order.
    pub fn ids(&self) -> Vec<u32> {
        let n = self.block_size() as u32;
        self.blocks
            .iter()
            .flat_map(|&(base, _)| (1..=n).map(move |i| base + i))
            .collect()
    }

    /// Level indices for `simulation_id`, or `None` if the ID is not part of
    /// the design.
    pub fn levels_of(&self, simulation_id: u32) -> Option<Vec<usize>> {
        let n = self.block_size() as u32;
        let block = self
            .blocks
            .iter()
            .position(|&(base, _)| simulation_id > base && simulation_id <= base + n)?;
        let mut rest = (simulation_id - self.blocks[block].0 - 1) as usize;
        let mut levels = vec![0; self.factors.len()];
        levels[0] = block;
        for (k, f) in self.factors.iter().enumerate().skip(1).rev() {
            levels[k] = rest % f.levels.len();
            rest /= f.levels.len();
        }
        Some(levels)
    }

    pub fn id_of(&self, levels: &[usize]) -> u32 {
        assert_eq!(levels.len(), self.factors.len());
        let mut index = 0;
        for (k, f) in self.factors.iter().enumerate().skip(1) {
            assert!(levels[k] < f.levels.len());
            index = index * f.levels.len() + levels[k];
        }
        self.blocks[levels[0]].0 + index as u32 + 1
    }

    pub fn run(&self, simulation_id: u32, master_seed: u64) -> Option<RunSpec> {
        let levels = self.levels_of(simulation_id)?;
        Some(self.spec_from_levels(simulation_id, levels, master_seed))
    }

    fn level(&self, levels: &[usize], name: &str) -> Option<&LevelValue> {
        self.factor_index(name).map(|k| &self.factors[k].levels[levels[k]])
    }

    fn spec_from_levels(&self, simulation_id: u32, levels: Vec<usize>, master_seed: u64) -> RunSpec {
        let rate = |v: Option<&LevelValue>| match v {
            Some(LevelValue::RateBps(r)) => *r,
            _ => 0,
        };
        let size = |v: Option<&LevelValue>| match v {
            Some(LevelValue::Packets(p)) => Some(*p),
            _ => None,
        };
        let thresholds = match self.level(&levels, THRESHOLDS) {
            Some(LevelValue::Thresholds(t)) => t.clone(),
            _ => unreachable!("every design has a threshold factor"),
        };
        let max_p = match self.level(&levels, MAX_P) {
            Some(LevelValue::MaxP(p)) => p.clone(),
            _ => unreachable!("every design has a max_p factor"),
        };
        RunSpec {
            simulation_id,
            mode: self.mode,
            green_rate_bps: rate(self.level(&levels, GREEN_RATE)),
            green_bucket_packets: size(self.level(&levels, GREEN_BUCKET)).expect("green bucket factor"),
            yellow_rate_bps: rate(self.level(&levels, YELLOW_RATE)),
            yellow_bucket_packets: size(self.level(&levels, YELLOW_BUCKET)),
            thresholds,
            max_p,
            seed: mix_seed(master_seed, simulation_id as u64),
            levels,
        }
    }

    /// All runs, ordered by simulation ID.
    pub fn enumerate(&self, master_seed: u64) -> Vec<RunSpec> {
        self.ids()
            .into_iter()
            .map(|id| self.run(id, master_seed).expect("enumerated id"))
            .collect()
    }
}

pub fn enumerate_design(mode: DesignMode, master_seed: u64) -> Vec<RunSpec> {
    Design::new(mode).enumerate(master_seed)
}

/// One cell of a design. `thresholds` and `max_p` list colors best first,
/// with two entries (green, red) in the two-color design and three in the
/// three-color design.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub simulation_id: u32,
    pub mode: DesignMode,
    pub green_rate_bps: u64,
    pub green_bucket_packets: u32,
    pub yellow_rate_bps: u64,
    pub yellow_bucket_packets: Option<u32>,
    pub thresholds: Vec<Thresholds>,
    pub max_p: Vec<f64>,
    pub seed: u64,
    /// Level index per design factor.
    pub levels: Vec<usize>,
}

impl RunSpec {
    fn color_params(&self) -> (RedColorParams, RedColorParams, RedColorParams) {
        let p = |i: usize| {
            let (lo, hi) = self.thresholds[i];
            RedColorParams::new(lo as f64, hi as f64, self.max_p[i])
        };
        match self.mode {
            // no yellow packets exist; the yellow slot mirrors red
            DesignMode::TwoColor => (p(0), p(1), p(1)),
            DesignMode::ThreeColor => (p(0), p(1), p(2)),
        }
    }

    pub fn total_reserved_bps(&self, customers: u64) -> u64 {
        self.green_rate_bps * customers
    }
}

/// Scenario for one run: nine TCP customers and one UDP customer sharing the
/// run's conditioner settings, the UDP customer never getting a yellow rate.
pub fn build_scenario(run: &RunSpec) -> ScenarioConfig {
    let mut s = ScenarioConfig::reference(run.green_rate_bps, run.green_bucket_packets);
    s.seed = run.seed;
    s.simulation_id = Some(run.simulation_id);
    let (green, yellow, red) = run.color_params();
    s.red = RedSection {
        mode: RedMode::Samt,
        green,
        yellow,
        red,
        ..RedSection::default()
    };
    let yellow_bucket = run.yellow_bucket_packets.unwrap_or(1);
    for c in &mut s.customers {
        *c = CustomerConfig {
            yellow_rate_bps: match c.traffic {
                TrafficKind::Tcp => run.yellow_rate_bps,
                TrafficKind::Udp => 0,
            },
            yellow_bucket_packets: yellow_bucket,
            ..*c
        };
    }
    s
}

/// Writes `simulation_id` plus one column per factor.
pub fn write_design_csv<W: Write>(design: &Design, runs: &[RunSpec], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["simulation_id".to_string()];
    header.extend(design.factors.iter().map(|f| f.name.replace(' ', "_")));
    header.push("seed".into());
    w.write_record(&header)?;
    for run in runs {
        let mut row = vec![run.simulation_id.to_string()];
        for (k, f) in design.factors.iter().enumerate() {
            row.push(f.levels[run.levels[k]].to_string());
        }
        row.push(run.seed.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
