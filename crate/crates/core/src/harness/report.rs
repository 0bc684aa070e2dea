//! Figure data and ANOVA reports regenerated from persisted results.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::results::{read_results, RunResult};
use super::runner::{results_path, Manifest};
use super::HarnessError;
use crate::anova::{allocate_variation, AnovaReport, FactorSchema, ResponseTable};
use crate::factorial::{Design, DesignMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Response {
    Fairness,
    TcpUtilization,
    UdpUtilization,
}

impl Response {
    pub const ALL: [Response; 3] = [Response::Fairness, Response::TcpUtilization, Response::UdpUtilization];

    pub fn as_str(self) -> &'static str {
        match self {
            Response::Fairness => "fairness",
            Response::TcpUtilization => "tcp-utilization",
            Response::UdpUtilization => "udp-utilization",
        }
    }

    pub fn value(self, run: &RunResult) -> Option<f64> {
        match self {
            Response::Fairness => Some(run.fairness),
            Response::TcpUtilization => run.tcp_utilization,
            Response::UdpUtilization => run.udp_utilization,
        }
    }
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Response {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Response::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| HarnessError::UnknownResponse(s.to_string()))
    }
}

/// IDs of `design` with no result.
pub fn missing_ids(design: &Design, results: &[RunResult]) -> Vec<u32> {
    let have: std::collections::BTreeSet<u32> = results.iter().map(|r| r.simulation_id).collect();
    design.ids().into_iter().filter(|id| !have.contains(id)).collect()
}

pub fn response_table(
    design: &Design,
    results: &[RunResult],
    response: Response,
) -> Result<ResponseTable<f64>, HarnessError> {
    let missing = missing_ids(design, results);
    if !missing.is_empty() {
        return Err(HarnessError::Incomplete { missing });
    }
    let schema = design
        .factors
        .iter()
        .map(|f| FactorSchema::new(f.name, f.labels()))
        .collect();
    let mut table = ResponseTable::new(response.as_str(), schema);
    for r in results {
        let Some(levels) = design.levels_of(r.simulation_id) else {
            continue;
        };
        let v = response.value(r).unwrap_or(f64::NAN);
        table.push(levels, v)?;
    }
    Ok(table)
}

pub fn analyze(
    design: &Design,
    results: &[RunResult],
    response: Response,
) -> Result<AnovaReport<f64>, HarnessError> {
    Ok(allocate_variation(&response_table(design, results, response)?)?)
}

/// Loads a design result directory: its manifest and runs.
pub fn load_results(dir: &Path) -> Result<(Manifest, Vec<RunResult>), HarnessError> {
    let manifest = Manifest::load(dir)?;
    let path = results_path(dir);
    let file = fs::File::open(&path).map_err(|e| HarnessError::io(&path, e))?;
    let runs = read_results(file).map_err(|msg| HarnessError::Format {
        path: path.display().to_string(),
        msg,
    })?;
    Ok((manifest, runs))
}

pub fn fairness_csv(results: &[RunResult]) -> String {
    let mut out = String::from("simulation_id,fairness\n");
    for r in results {
        out.push_str(&format!("{},{}\n", r.simulation_id, r.fairness));
    }
    out
}

pub fn utilization_csv(results: &[RunResult]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("simulation_id,tcp_utilization,udp_utilization\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{}\n",
            r.simulation_id,
            opt(r.tcp_utilization),
            opt(r.udp_utilization)
        ));
    }
    out
}

/// Writes `fairness.csv`, `utilization.csv` and, per response,
/// `anova-<response>.csv` and `.txt` into `out_dir`.
pub fn report(
    result_dir: &Path,
    responses: &[Response],
    out_dir: &Path,
) -> Result<Vec<AnovaReport<f64>>, HarnessError> {
    let (manifest, results) = load_results(result_dir)?;
    let mode: DesignMode = manifest.mode.ok_or_else(|| HarnessError::Format {
        path: result_dir.join("manifest.toml").display().to_string(),
        msg: "not a design result directory (no mode)".into(),
    })?;
    let design = Design::new(mode);
    let missing = missing_ids(&design, &results);
    if !missing.is_empty() {
        return Err(HarnessError::Incomplete { missing });
    }
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let write = |name: &str, text: &str| {
        let p = out_dir.join(name);
        fs::write(&p, text).map_err(|e| HarnessError::io(&p, e))
    };
    write("fairness.csv", &fairness_csv(&results))?;
    write("utilization.csv", &utilization_csv(&results))?;
    let mut reports = Vec::new();
    for &response in responses {
        let mut r = analyze(&design, &results, response)?;
        r.label = format!("{response}, {mode}");
        write(&format!("anova-{response}.csv"), &r.to_csv())?;
        write(&format!("anova-{response}.txt"), &r.to_string())?;
        reports.push(r);
    }
    Ok(reports)
}
