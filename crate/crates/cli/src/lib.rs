//! Scenario-driven verification for holocurve: load a JSON scenario, run its
//! tasks, and emit a deterministic report.
//!
//! Exit codes: 0 when every asserted check passes, 1 on a failing check, 2 on
//! unreadable or invalid input.

pub mod grid;
pub mod report;
pub mod scenario;
pub mod tasks;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

pub use grid::{emit_curvature_grid, GridRow, GridSpec};
pub use report::{Check, Relation, Report, TaskReport};
pub use scenario::{Scenario, TaskKind, TaskSpec};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InputError {
    #[error("cannot read {0}: {1}")]
    Read(String, String),
    #[error("invalid scenario: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Schema(String),
    #[error("unresolved name: {0}")]
    Name(String),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Replaces every tolerance when set.
    pub tolerance: Option<f64>,
    /// Overrides the scenario's (p, q) plan caps.
    pub max_order: Option<(u32, u32)>,
    /// Append a finite-difference pass over every curve and model.
    pub fd_check: bool,
    /// Keep only tasks whose label or kind matches.
    pub task: Option<String>,
}

// ----------------------------------------------------------------------------
// run

pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<Report, InputError> {
    let scenario = Scenario::load(path)?;
    Ok(run_loaded(&scenario, opts))
}

pub fn run_loaded(scenario: &Scenario, opts: &RunOptions) -> Report {
    let mut specs: Vec<TaskSpec> = scenario.file.tasks.iter().map(|t| t.spec()).collect();
    if opts.fd_check && !specs.iter().any(|s| s.task == TaskKind::FdCheck) {
        specs.push(TaskSpec::of(TaskKind::FdCheck));
    }
    if let Some(filter) = &opts.task {
        specs.retain(|s| &s.label() == filter || s.task.name() == filter);
    }
    let orders = opts.max_order.unwrap_or((scenario.file.orders[0], scenario.file.orders[1]));
    let ctx = tasks::Ctx {
        scenario,
        tolerance: opts.tolerance,
        orders,
        points: scenario.points.clone(),
    };
    // collect keeps the task order, so the report does not depend on scheduling
    let reports: Vec<TaskReport> = specs
        .par_iter()
        .map(|spec| match tasks::run(&ctx, spec) {
            Ok((checks, diagnostics)) => TaskReport::new(spec.label(), spec.task.name(), checks, diagnostics),
            Err(e) => TaskReport::failed(spec.label(), spec.task.name(), e),
        })
        .collect();
    Report::new(
        scenario.file.name.clone(),
        opts.fd_check,
        opts.tolerance,
        scenario.diagnostics.clone(),
        reports,
    )
}

pub fn exit_code(report: &Report) -> i32 {
    if report.passed {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

// ----------------------------------------------------------------------------
// verify

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub task: String,
    pub checks: usize,
    pub failed: usize,
    /// Smallest margin (decades) over the asserted checks.
    pub worst_margin: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub reports: Vec<Report>,
    pub wall_time: Duration,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }

    pub fn render(&self) -> String {
        let sw = self.rows.iter().map(|r| r.scenario.len()).max().unwrap_or(0).max(8);
        let tw = self.rows.iter().map(|r| r.task.len()).max().unwrap_or(0).max(4);
        let mut out = format!(
            "{:<sw$} {:<tw$} {:>6} {:>6} {:>9}  status\n",
            "scenario", "task", "checks", "failed", "margin"
        );
        for r in &self.rows {
            let margin = r.worst_margin.map(|m| format!("{m:.2}")).unwrap_or_else(|| "-".into());
            let status = if r.passed { "pass" } else { "FAIL" };
            out.push_str(&format!(
                "{:<sw$} {:<tw$} {:>6} {:>6} {:>9}  {status}\n",
                r.scenario, r.task, r.checks, r.failed, margin
            ));
        }
        let failures: Vec<String> = self
            .reports
            .iter()
            .flat_map(|rep| {
                rep.failures().into_iter().map(move |(t, c)| match c {
                    Some(c) if c.margin().is_none() => format!(
                        "  {} / {} / {} [{}]: expected {}, observed {}",
                        rep.scenario,
                        t.task,
                        c.name,
                        c.subject,
                        c.expected.as_deref().unwrap_or("-"),
                        c.observed.as_deref().unwrap_or("-")
                    ),
                    Some(c) => format!(
                        "  {} / {} / {} [{}]: value {:e} vs tolerance {:e}, margin {:.2} decades",
                        rep.scenario,
                        t.task,
                        c.name,
                        c.subject,
                        c.value,
                        c.tolerance,
                        c.margin().unwrap_or_default()
                    ),
                    None => format!("  {} / {}: {}", rep.scenario, t.task, t.error.as_deref().unwrap_or("error")),
                })
            })
            .collect();
        if !failures.is_empty() {
            out.push_str(&format!("\nfailures ({}):\n{}\n", failures.len(), failures.join("\n")));
        }
        let passed = self.rows.iter().filter(|r| r.passed).count();
        out.push_str(&format!(
            "\n{passed}/{} task rows passed in {:.2} s\n",
            self.rows.len(),
            self.wall_time.as_secs_f64()
        ));
        out
    }
}

/// Scenario files under `path`: the file itself, or every `*.json` in the
/// directory in name order.
pub fn scenario_files(path: &Path) -> Result<Vec<PathBuf>, InputError> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| InputError::Read(path.display().to_string(), e.to_string()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(InputError::Usage(format!("no scenario files in {}", path.display())));
        }
        Ok(files)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

pub fn verify_suite(path: &Path, opts: &RunOptions) -> Result<Summary, InputError> {
    let start = Instant::now();
    let scenarios = scenario_files(path)?
        .iter()
        .map(|f| Scenario::load(f))
        .collect::<Result<Vec<_>, _>>()?;
    let reports: Vec<Report> = scenarios.iter().map(|s| run_loaded(s, opts)).collect();
    let mut rows = vec![];
    for rep in &reports {
        for t in &rep.tasks {
            let asserted: Vec<f64> = t.checks.iter().filter_map(|c| c.margin()).collect();
            rows.push(SummaryRow {
                scenario: rep.scenario.clone(),
                task: t.task.clone(),
                checks: t.checks.len(),
                failed: t.checks.iter().filter(|c| !c.passed).count() + usize::from(t.error.is_some()),
                worst_margin: asserted.into_iter().reduce(f64::min),
                passed: t.passed,
            });
        }
    }
    Ok(Summary {
        rows,
        reports,
        wall_time: start.elapsed(),
    })
}

/// The bundled scenario directory shipped with the crate.
pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}
