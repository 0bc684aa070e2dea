//! Batch workflow: scenario files, design execution, result files and
//! reports.

pub mod config;
mod report;
mod results;
mod runner;

use std::path::Path;

use thiserror::Error;

pub use report::{
    analyze, fairness_csv, load_results, missing_ids, report, response_table, utilization_csv,
    Response,
};
pub use results::{read_results, write_results, CustomerResult, ResultRow, RowKind, RunResult};
pub use runner::{
    execute_design, run_design, run_scenario, run_single, scenario_hash, DesignOptions,
    DesignOutcome, Manifest, DESIGN_FILE, FAILURES_FILE, MANIFEST_FILE, RESULTS_FILE,
    SCENARIO_FILE, TOOL_VERSION,
};

use crate::anova::AnovaError;
use config::ConfigError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown response '{0}' (expected fairness, tcp-utilization or udp-utilization)")]
    UnknownResponse(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
    #[error("simulation {simulation_id} failed: {msg}")]
    Run { simulation_id: u32, msg: String },
    #[error("{} run(s) failed: {failed:?}", failed.len())]
    RunsFailed { failed: Vec<u32> },
    #[error("results incomplete, missing simulation ids: {}", format_ids(missing))]
    Incomplete { missing: Vec<u32> },
    #[error("analysis failed: {0}")]
    Anova(#[from] AnovaError),
}

fn format_ids(ids: &[u32]) -> String {
    const SHOWN: usize = 20;
    let mut s: Vec<String> = ids.iter().take(SHOWN).map(u32::to_string).collect();
    if ids.len() > SHOWN {
        s.push(format!("... ({} in total)", ids.len()));
    }
    s.join(", ")
}

impl HarnessError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        }
    }

    pub(crate) fn csv(e: csv::Error) -> Self {
        HarnessError::Format {
            path: "csv".into(),
            msg: e.to_string(),
        }
    }

    /// 1 for bad input, 2 for failed or unwritable runs, 3 for incomplete
    /// result sets.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::UnknownResponse(_) => 1,
            HarnessError::Io { .. }
            | HarnessError::Format { .. }
            | HarnessError::Run { .. }
            | HarnessError::RunsFailed { .. }
            | HarnessError::Anova(_) => 2,
            HarnessError::Incomplete { .. } => 3,
        }
    }
}
