//! Executing single scenarios and whole designs.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ScenarioConfig, Strictness};
use super::results::{write_results, RunResult};
use super::HarnessError;
use crate::factorial::{build_scenario, write_design_csv, Design, DesignMode, RunSpec};
use crate::metrics::MetricError;
use crate::netmodel::simulate;

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const DESIGN_FILE: &str = "design.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const SCENARIO_FILE: &str = "scenario.toml";

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Sidecar written next to every results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<DesignMode>,
    pub master_seed: u64,
    pub design_hash: String,
    pub duration_s: f64,
    pub runs: usize,
    pub completed: usize,
    pub failed: usize,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, HarnessError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
        toml::from_str(&text).map_err(|e| HarnessError::Format {
            path: path.display().to_string(),
            msg: e.to_string(),
        })
    }

    fn store(&self, dir: &Path) -> Result<(), HarnessError> {
        let text = toml::to_string_pretty(self).expect("manifest serializes");
        write_file(&dir.join(MANIFEST_FILE), text.as_bytes())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

/// SHA-256 over the canonical text of every scenario with its seed cleared,
/// so the hash identifies what was simulated independently of the seed.
pub fn scenario_hash<'a>(scenarios: impl IntoIterator<Item = &'a ScenarioConfig>) -> String {
    let mut h = Sha256::new();
    for s in scenarios {
        let mut s = s.clone();
        s.seed = 0;
        h.update(s.to_toml_string().as_bytes());
        h.update([0]);
    }
    hex::encode(h.finalize())
}

/// Simulates one scenario and computes its metrics. Metric problems (such
/// as a zero duration) are returned alongside the result, not as errors.
pub fn run_scenario(
    scenario: &ScenarioConfig,
    strictness: Strictness,
) -> Result<(RunResult, Vec<MetricError>), HarnessError> {
    scenario.validate(strictness)?;
    let id = scenario.simulation_id.unwrap_or(0);
    let outcome = std::panic::catch_unwind(|| simulate(scenario))
        .map_err(|p| HarnessError::Run {
            simulation_id: id,
            msg: panic_message(p),
        })??;
    Ok(RunResult::from_outcome(id, &outcome))
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "simulation panicked".into())
}

/// Runs the scenario in `config`, writing results, the resolved scenario and
/// a manifest into `out_dir`.
pub fn run_single(
    config: &Path,
    out_dir: &Path,
    seed: Option<u64>,
) -> Result<(RunResult, Vec<MetricError>), HarnessError> {
    let mut scenario = ScenarioConfig::load(config)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let (result, problems) = run_scenario(&scenario, Strictness::FreeForm)?;
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut buf = Vec::new();
    write_results(std::slice::from_ref(&result), &mut buf).map_err(HarnessError::csv)?;
    write_file(&out_dir.join(RESULTS_FILE), &buf)?;
    write_file(&out_dir.join(SCENARIO_FILE), scenario.to_toml_string().as_bytes())?;
    Manifest {
        tool_version: TOOL_VERSION.into(),
        mode: None,
        master_seed: scenario.seed,
        design_hash: scenario_hash([&scenario]),
        duration_s: scenario.general.duration_s,
        runs: 1,
        completed: 1,
        failed: 0,
    }
    .store(out_dir)?;
    Ok((result, problems))
}

#[derive(Debug, Clone)]
pub struct DesignOptions {
    pub mode: DesignMode,
    pub master_seed: u64,
    /// Worker threads; 0 picks one per core.
    pub jobs: usize,
    /// Overrides the simulated time of every run.
    pub duration_s: Option<f64>,
    /// Restricts execution to these IDs.
    pub only: Option<Vec<u32>>,
}

impl DesignOptions {
    pub fn new(mode: DesignMode, master_seed: u64) -> Self {
        Self {
            mode,
            master_seed,
            jobs: 0,
            duration_s: None,
            only: None,
        }
    }

    pub fn scenarios(&self) -> (Design, Vec<RunSpec>, Vec<ScenarioConfig>) {
        let design = Design::new(self.mode);
        let mut runs = design.enumerate(self.master_seed);
        if let Some(only) = &self.only {
            runs.retain(|r| only.contains(&r.simulation_id));
        }
        let scenarios = runs
            .iter()
            .map(|r| {
                let mut s = build_scenario(r);
                if let Some(d) = self.duration_s {
                    s.general.duration_s = d;
                }
                s
            })
            .collect();
        (design, runs, scenarios)
    }
}

#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub mode: DesignMode,
    /// Sorted by simulation ID.
    pub results: Vec<RunResult>,
    pub failures: Vec<(u32, String)>,
    pub manifest: Manifest,
}

/// Runs a design in memory. Results come back sorted by simulation ID no
/// matter how the pool scheduled them.
pub fn execute_design(opts: &DesignOptions) -> Result<DesignOutcome, HarnessError> {
    let (_, runs, scenarios) = opts.scenarios();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| HarnessError::Run {
            simulation_id: 0,
            msg: format!("cannot start worker pool: {e}"),
        })?;
    let outcomes: Vec<(u32, Result<RunResult, String>)> = pool.install(|| {
        scenarios
            .par_iter()
            .map(|s| {
                let id = s.simulation_id.expect("design scenarios carry an id");
                let r = run_scenario(s, Strictness::Design)
                    .map(|(r, _)| r)
                    .map_err(|e| e.to_string());
                (id, r)
            })
            .collect()
    });
    let mut results = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (id, r) in outcomes {
        match r {
            Ok(r) => results.push(r),
            Err(e) => failures.push((id, e)),
        }
    }
    results.sort_by_key(|r| r.simulation_id);
    failures.sort_by_key(|f| f.0);
    let manifest = Manifest {
        tool_version: TOOL_VERSION.into(),
        mode: Some(opts.mode),
        master_seed: opts.master_seed,
        design_hash: scenario_hash(&scenarios),
        duration_s: scenarios.first().map(|s| s.general.duration_s).unwrap_or(0.0),
        runs: runs.len(),
        completed: results.len(),
        failed: failures.len(),
    };
    Ok(DesignOutcome {
        mode: opts.mode,
        results,
        failures,
        manifest,
    })
}

/// Runs a design and persists `results.csv`, `design.csv`, `manifest.toml`
/// and, when something failed, `failures.csv`. Returns an error after
/// writing if any run failed.
pub fn run_design(opts: &DesignOptions, out_dir: &Path) -> Result<DesignOutcome, HarnessError> {
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let outcome = execute_design(opts)?;
    store_design(opts, &outcome, out_dir)?;
    if !outcome.failures.is_empty() {
        return Err(HarnessError::RunsFailed {
            failed: outcome.failures.iter().map(|f| f.0).collect(),
        });
    }
    Ok(outcome)
}

fn store_design(opts: &DesignOptions, outcome: &DesignOutcome, out_dir: &Path) -> Result<(), HarnessError> {
    let (design, runs, _) = opts.scenarios();
    let mut buf = Vec::new();
    write_design_csv(&design, &runs, &mut buf).map_err(HarnessError::csv)?;
    write_file(&out_dir.join(DESIGN_FILE), &buf)?;
    let mut buf = Vec::new();
    write_results(&outcome.results, &mut buf).map_err(HarnessError::csv)?;
    write_file(&out_dir.join(RESULTS_FILE), &buf)?;
    let failures_path = out_dir.join(FAILURES_FILE);
    if outcome.failures.is_empty() {
        if failures_path.exists() {
            fs::remove_file(&failures_path).map_err(|e| HarnessError::io(&failures_path, e))?;
        }
    } else {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["simulation_id", "error"]).map_err(HarnessError::csv)?;
        for (id, e) in &outcome.failures {
            w.write_record([id.to_string(), e.clone()]).map_err(HarnessError::csv)?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Format {
            path: failures_path.display().to_string(),
            msg: e.to_string(),
        })?;
        write_file(&failures_path, &bytes)?;
    }
    outcome.manifest.store(out_dir)
}

pub fn results_path(dir: &Path) -> PathBuf {
    dir.join(RESULTS_FILE)
}
