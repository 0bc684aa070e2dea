//! Per-run results and their CSV form.
//!
//! `results.csv` holds one row per customer per run followed by one summary
//! row (`row = summary`, empty `customer`). Customer-only columns are empty
//! on summary rows and vice versa.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::config::TrafficKind;
use crate::metrics::{
    excess_throughput, fairness_index, reserved_rate_utilization, CustomerStats, MetricError,
};
use crate::netmodel::{Color, PerColor, SimulationOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct CustomerResult {
    pub customer: u8,
    pub traffic: TrafficKind,
    pub green_rate_bps: u64,
    pub delivered_bytes: PerColor<u64>,
    /// `None` when the metric is undefined (zero rate or zero duration).
    pub utilization: Option<f64>,
    pub excess_bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub simulation_id: u32,
    pub customers: Vec<CustomerResult>,
    pub fairness: f64,
    pub tcp_utilization: Option<f64>,
    pub udp_utilization: Option<f64>,
    pub red_drops: PerColor<u64>,
    pub events: u64,
}

impl RunResult {
    /// Metrics for one finished simulation, plus any metric that could not
    /// be computed.
    pub fn from_outcome(simulation_id: u32, outcome: &SimulationOutcome) -> (Self, Vec<MetricError>) {
        let mut problems = Vec::new();
        let duration_ns = outcome.duration.as_nanos();
        let customers: Vec<CustomerResult> = outcome
            .customers
            .iter()
            .map(|c| {
                let stats = CustomerStats::from_outcome(c, duration_ns);
                let utilization = match reserved_rate_utilization::<f64>(&stats, c.profile.green_rate_bps) {
                    Ok(u) => Some(u),
                    Err(e) => {
                        if !problems.contains(&e) {
                            problems.push(e);
                        }
                        None
                    }
                };
                CustomerResult {
                    customer: c.id,
                    traffic: c.traffic,
                    green_rate_bps: c.profile.green_rate_bps,
                    delivered_bytes: c.delivered_bytes,
                    utilization,
                    excess_bps: excess_throughput(&stats),
                }
            })
            .collect();
        let excess: Vec<f64> = customers.iter().map(|c| c.excess_bps).collect();
        let fairness = fairness_index(&excess).unwrap_or(0.0);
        let red_drops = PerColor(Color::ALL.map(|c| outcome.red.drops(c)));
        let result = Self {
            simulation_id,
            tcp_utilization: mean_utilization(&customers, TrafficKind::Tcp),
            udp_utilization: mean_utilization(&customers, TrafficKind::Udp),
            customers,
            fairness,
            red_drops,
            events: outcome.summary.events_dispatched,
        };
        (result, problems)
    }

    pub fn total_excess_bps(&self) -> f64 {
        self.customers.iter().map(|c| c.excess_bps).sum()
    }

    pub fn customers_of(&self, kind: TrafficKind) -> impl Iterator<Item = &CustomerResult> {
        self.customers.iter().filter(move |c| c.traffic == kind)
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        let mut rows: Vec<ResultRow> = self
            .customers
            .iter()
            .map(|c| ResultRow {
                simulation_id: self.simulation_id,
                row: RowKind::Customer,
                customer: Some(c.customer),
                traffic: Some(c.traffic),
                green_rate_bps: Some(c.green_rate_bps),
                green_bytes: c.delivered_bytes[Color::Green],
                yellow_bytes: c.delivered_bytes[Color::Yellow],
                red_bytes: c.delivered_bytes[Color::Red],
                utilization: c.utilization,
                excess_bps: c.excess_bps,
                ..ResultRow::empty(self.simulation_id)
            })
            .collect();
        let total = |color| self.customers.iter().map(|c| c.delivered_bytes[color]).sum();
        rows.push(ResultRow {
            row: RowKind::Summary,
            green_bytes: total(Color::Green),
            yellow_bytes: total(Color::Yellow),
            red_bytes: total(Color::Red),
            excess_bps: self.total_excess_bps(),
            fairness: Some(self.fairness),
            tcp_utilization: self.tcp_utilization,
            udp_utilization: self.udp_utilization,
            green_drops: Some(self.red_drops[Color::Green]),
            yellow_drops: Some(self.red_drops[Color::Yellow]),
            red_drops: Some(self.red_drops[Color::Red]),
            events: Some(self.events),
            ..ResultRow::empty(self.simulation_id)
        });
        rows
    }

    /// Rebuilds a run from its customer rows and summary row.
    pub fn from_rows(rows: &[ResultRow]) -> Result<Self, String> {
        let first = rows.first().ok_or("no rows")?;
        let id = first.simulation_id;
        let mut customers = Vec::new();
        let mut summary = None;
        for r in rows {
            if r.simulation_id != id {
                return Err(format!("mixed simulation ids {id} and {}", r.simulation_id));
            }
            match r.row {
                RowKind::Customer => customers.push(CustomerResult {
                    customer: r.customer.ok_or_else(|| format!("run {id}: customer row without customer"))?,
                    traffic: r.traffic.ok_or_else(|| format!("run {id}: customer row without traffic"))?,
                    green_rate_bps: r.green_rate_bps.unwrap_or(0),
                    delivered_bytes: PerColor([r.green_bytes, r.yellow_bytes, r.red_bytes]),
                    utilization: r.utilization,
                    excess_bps: r.excess_bps,
                }),
                RowKind::Summary => {
                    if summary.replace(r).is_some() {
                        return Err(format!("run {id}: two summary rows"));
                    }
                }
            }
        }
        let s = summary.ok_or_else(|| format!("run {id}: no summary row"))?;
        Ok(Self {
            simulation_id: id,
            customers,
            fairness: s.fairness.unwrap_or(0.0),
            tcp_utilization: s.tcp_utilization,
            udp_utilization: s.udp_utilization,
            red_drops: PerColor([
                s.green_drops.unwrap_or(0),
                s.yellow_drops.unwrap_or(0),
                s.red_drops.unwrap_or(0),
            ]),
            events: s.events.unwrap_or(0),
        })
    }
}

fn mean_utilization(customers: &[CustomerResult], kind: TrafficKind) -> Option<f64> {
    let us: Option<Vec<f64>> = customers
        .iter()
        .filter(|c| c.traffic == kind)
        .map(|c| c.utilization)
        .collect();
    let us = us?;
    if us.is_empty() {
        return None;
    }
    Some(us.iter().sum::<f64>() / us.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Customer,
    Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub simulation_id: u32,
    pub row: RowKind,
    pub customer: Option<u8>,
    pub traffic: Option<TrafficKind>,
    pub green_rate_bps: Option<u64>,
    pub green_bytes: u64,
    pub yellow_bytes: u64,
    pub red_bytes: u64,
    pub utilization: Option<f64>,
    pub excess_bps: f64,
    pub fairness: Option<f64>,
    pub tcp_utilization: Option<f64>,
    pub udp_utilization: Option<f64>,
    pub green_drops: Option<u64>,
    pub yellow_drops: Option<u64>,
    pub red_drops: Option<u64>,
    pub events: Option<u64>,
}

impl ResultRow {
    fn empty(simulation_id: u32) -> Self {
        Self {
            simulation_id,
            row: RowKind::Summary,
            customer: None,
            traffic: None,
            green_rate_bps: None,
            green_bytes: 0,
            yellow_bytes: 0,
            red_bytes: 0,
            utilization: None,
            excess_bps: 0.0,
            fairness: None,
            tcp_utilization: None,
            udp_utilization: None,
            green_drops: None,
            yellow_drops: None,
            red_drops: None,
            events: None,
        }
    }
}

pub fn write_results<W: Write>(results: &[RunResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        for row in r.rows() {
            w.serialize(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads runs back, keyed and sorted by simulation ID.
pub fn read_results<R: Read>(input: R) -> Result<Vec<RunResult>, String> {
    let mut groups: BTreeMap<u32, Vec<ResultRow>> = BTreeMap::new();
    for (i, row) in csv::Reader::from_reader(input).deserialize::<ResultRow>().enumerate() {
        let row = row.map_err(|e| format!("record {}: {e}", i + 1))?;
        groups.entry(row.simulation_id).or_default().push(row);
    }
    groups.values().map(|rows| RunResult::from_rows(rows)).collect()
}
