//! Configured experiments over the shipped corpus, with `report.json` and
//! `rows.csv` outputs.
//!
//! Every asserted contract becomes a [`CheckRow`] with an explicit tolerance.
//! Identities and exact discrete facts are [`Severity::Assert`] and fail the
//! run; boundedness over a family is [`Severity::Bound`] and only warns.

pub mod config;
pub mod corpus;
mod experiments;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{Experiment, ExperimentConfig, GridSpec, PValue, TauSpec};
pub use corpus::{corpus, corpus_manifest, CorpusEntry, ManifestEntry};
pub use experiments::default_grid;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `measured <= target + tolerance`.
    AtMost,
    /// `measured >= target - tolerance`.
    AtLeast,
    /// `|measured - target| <= tolerance`.
    Near,
    /// `measured / target` in `[1/tolerance, tolerance]`.
    Factor,
    /// `measured` is finite.
    Finite,
    /// Reported only.
    Report,
}

impl Relation {
    pub fn holds(self, measured: f64, target: f64, tolerance: f64) -> bool {
        if measured.is_nan() {
            return false;
        }
        match self {
            Relation::AtMost => measured <= target + tolerance,
            Relation::AtLeast => measured >= target - tolerance,
            Relation::Near => (measured - target).abs() <= tolerance,
            Relation::Factor => {
                let r = measured / target;
                r.is_finite() && r >= 1.0 / tolerance && r <= tolerance
            }
            Relation::Finite => measured.is_finite(),
            Relation::Report => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Assert,
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Warn,
    Fail,
    Info,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Warn => "warn",
            Status::Fail => "fail",
            Status::Info => "info",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub severity: Severity,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<String>,
}

impl CheckRow {
    pub fn new(
        check: impl Into<String>,
        measured: f64,
        relation: Relation,
        target: f64,
        tolerance: f64,
        severity: Severity,
    ) -> Self {
        let status = match (relation, relation.holds(measured, target, tolerance), severity) {
            (Relation::Report, _, _) => Status::Info,
            (_, true, _) => Status::Pass,
            (_, false, Severity::Assert) => Status::Fail,
            (_, false, Severity::Bound) => Status::Warn,
        };
        Self {
            check: check.into(),
            measured,
            target,
            tolerance,
            relation,
            severity,
            status,
            diagnostics: None,
        }
    }

    pub fn assert(check: impl Into<String>, measured: f64, relation: Relation, target: f64, tolerance: f64) -> Self {
        Self::new(check, measured, relation, target, tolerance, Severity::Assert)
    }

    pub fn bound(check: impl Into<String>, measured: f64, relation: Relation, target: f64, tolerance: f64) -> Self {
        Self::new(check, measured, relation, target, tolerance, Severity::Bound)
    }

    pub fn info(check: impl Into<String>, measured: f64) -> Self {
        Self::new(check, measured, Relation::Report, f64::NAN, f64::NAN, Severity::Bound)
    }

    /// A check that could not be evaluated.
    pub fn failure(check: impl Into<String>, severity: Severity, err: &Error) -> Self {
        let mut row = Self::new(check, f64::NAN, Relation::Finite, f64::NAN, f64::NAN, severity);
        row.diagnostics = Some(err.to_string());
        row
    }

    pub fn with_diagnostics(mut self, text: impl Into<String>) -> Self {
        self.diagnostics = Some(text.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub package: String,
    pub version: String,
    pub seed: u64,
    /// Refinement levels of a convergence study.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<usize>>,
}

impl Provenance {
    fn new(seed: u64, levels: Option<Vec<usize>>) -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            levels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub warn: usize,
    pub fail: usize,
    pub info: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub provenance: Provenance,
    pub summary: Summary,
    pub rows: Vec<CheckRow>,
    /// Wall-clock seconds.
    pub elapsed_seconds: f64,
    /// Files written besides the report itself.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<PathBuf>,
}

impl RunReport {
    fn new(config: ExperimentConfig, rows: Vec<CheckRow>, levels: Option<Vec<usize>>, elapsed: f64) -> Self {
        let count = |s: Status| rows.iter().filter(|r| r.status == s).count();
        Self {
            provenance: Provenance::new(config.seed, levels),
            summary: Summary {
                pass: count(Status::Pass),
                warn: count(Status::Warn),
                fail: count(Status::Fail),
                info: count(Status::Info),
            },
            config,
            rows,
            elapsed_seconds: elapsed,
            artifacts: Vec::new(),
        }
    }

    /// No asserted row failed.
    pub fn passed(&self) -> bool {
        self.summary.fail == 0
    }

    /// Process exit status: 0 when [`passed`](Self::passed), 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn row(&self, check: &str) -> Option<&CheckRow> {
        self.rows.iter().find(|r| r.check == check)
    }

    pub fn rows_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a CheckRow> + 'a {
        self.rows.iter().filter(move |r| r.check.starts_with(prefix))
    }

    /// `rows.csv` contents: `check,measured,target,tolerance,status`.
    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["check", "measured", "target", "tolerance", "status"])?;
        for r in &self.rows {
            w.write_record([
                r.check.clone(),
                r.measured.to_string(),
                r.target.to_string(),
                r.tolerance.to_string(),
                r.status.as_str().to_string(),
            ])?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    /// Writes `report.json` and `rows.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("rows.csv"), self.csv_bytes()?)?;
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Runs one experiment. Config problems surface as [`Error::Config`] and the
/// matrix guard as [`Error::Resource`]; failures inside a check become rows.
/// Writes the report when `config.output` is set.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let mut ctx = experiments::Ctx::new(config);
    experiments::dispatch(&mut ctx)?;
    let mut report = RunReport::new(config.clone(), ctx.rows, None, start.elapsed().as_secs_f64());
    report.artifacts = ctx.artifacts;
    if let Some(dir) = &config.output {
        report.write(dir)?;
    }
    Ok(report)
}

/// Rows named after their own grid size match across levels as `N=*`.
fn level_key(check: &str, n: usize) -> String {
    let own = format!("N={n}");
    check
        .split('/')
        .map(|seg| if seg == own { "N=*" } else { seg })
        .collect::<Vec<_>>()
        .join("/")
}

/// Reruns `config` with `N` set to each level and appends drift rows between
/// consecutive levels. Error-like rows (target 0) also get a trend row.
pub fn convergence_study(config: &ExperimentConfig, levels: &[usize]) -> Result<RunReport> {
    config.validate()?;
    if levels.is_empty() {
        return Err(Error::config("levels", "at least one level is needed"));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("levels", "levels must be strictly increasing"));
    }
    let base = match config.grid {
        Some(g) => g,
        None => default_grid(config.experiment),
    };
    if config.experiment.uses_matrices() {
        for &n in levels {
            let size = n.checked_pow(base.dim as u32).unwrap_or(usize::MAX);
            if size > config.matrix_cap {
                return Err(Error::Resource(format!(
                    "level N = {n} gives N^n = {size} beyond the matrix-dimension cap {}",
                    config.matrix_cap
                )));
            }
        }
    }
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut artifacts = Vec::new();
    let mut per_level: Vec<BTreeMap<String, CheckRow>> = Vec::new();
    for &n in levels {
        let mut cfg = config.clone();
        cfg.grid = Some(GridSpec { points: n, ..base });
        cfg.output = None;
        let mut ctx = experiments::Ctx::new(&cfg);
        experiments::dispatch(&mut ctx)?;
        artifacts.extend(ctx.artifacts);
        per_level.push(ctx.rows.iter().map(|r| (level_key(&r.check, n), r.clone())).collect());
        rows.extend(ctx.rows.into_iter().map(|mut r| {
            r.check = format!("N={n}/{}", r.check);
            r
        }));
    }
    let drift_tol = config.tolerance("convergence_drift");
    let floor = config.tolerance("refinement_floor");
    if let Some(first) = per_level.first() {
        for (check, row) in first {
            let series: Vec<f64> = per_level
                .iter()
                .map(|m| m.get(check).map_or(f64::NAN, |r| r.measured))
                .collect();
            if series.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let error_like = row.target == 0.0 && matches!(row.relation, Relation::AtMost | Relation::Near);
            for (k, w) in series.windows(2).enumerate() {
                let label = format!("drift/{check}/N={}->{}", levels[k], levels[k + 1]);
                let drift = if w[0] == w[1] {
                    0.0
                } else {
                    (w[1] - w[0]).abs() / w[0].abs().max(f64::MIN_POSITIVE)
                };
                rows.push(if error_like {
                    CheckRow::info(label, drift)
                } else {
                    CheckRow::bound(label, drift, Relation::AtMost, 0.0, drift_tol)
                });
            }
            if error_like && series.len() > 1 {
                // largest e_{k+1} / e_k over steps not already at the floor
                let worst = series
                    .windows(2)
                    .filter(|w| w[1] > floor)
                    .map(|w| w[1] / w[0].max(f64::MIN_POSITIVE))
                    .fold(0.0, f64::max);
                rows.push(CheckRow::bound(
                    format!("trend/{check}"),
                    worst,
                    Relation::AtMost,
                    1.0,
                    0.0,
                ));
            }
        }
    }
    let mut report = RunReport::new(
        config.clone(),
        rows,
        Some(levels.to_vec()),
        start.elapsed().as_secs_f64(),
    );
    report.artifacts = artifacts;
    if let Some(dir) = &config.output {
        report.write(dir)?;
    }
    Ok(report)
}
