//! Canned experiments: each one builds its scenarios from a base
//! configuration plus an optional overlay file, emits tables and judges them.
//!
//! Verdicts are computed from the tables as they are written (after the CSV
//! round trip), so re-reading the CSVs reproduces them exactly.

pub mod fig5;
pub mod fig7;
pub mod fig9;
pub mod table1;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use bridgebench_core::{SimConfig, SourceKind};
use serde_json::json;

use crate::config::{self, ConfigFile};
use crate::table::Table;

pub use fig5::{fig5_verdicts, run_fig5, sweep_table};
pub use fig7::{fig7_verdicts, run_fig7};
pub use fig9::{fig9_verdicts, psrr_table, run_fig9};
pub use table1::{run_table1, table1_verdicts};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::NotApplicable => "N/A",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl Verdict {
    fn check(name: &'static str, ok: bool, detail: String) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self { name, status, detail }
    }

    fn not_applicable(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            status: Status::NotApplicable,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<4} {}: {}", self.status, self.name, self.detail)
    }
}

/// Settings shared by every experiment.
#[derive(Debug, Clone, Default)]
pub struct ExpInput {
    pub file: ConfigFile,
    /// Replaces the seed of every noise source.
    pub seed: Option<u64>,
}

impl ExpInput {
    /// `base` with the overlay file and seed applied.
    pub fn config(&self, base: &SimConfig) -> Result<SimConfig> {
        let mut c = self.file.overlay(base)?;
        apply_seed(&mut c, self.seed.or(self.file.seed()));
        Ok(c)
    }
}

pub fn apply_seed(config: &mut SimConfig, seed: Option<u64>) {
    if let Some(seed) = seed {
        for s in &mut config.sources {
            if s.kind == SourceKind::WhiteNoise {
                s.seed = Some(seed);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub id: &'static str,
    /// Scenario name and the configuration file that reproduces it.
    pub configs: Vec<(String, ConfigFile)>,
    /// File stem and table.
    pub tables: Vec<(String, Table)>,
    pub verdicts: Vec<Verdict>,
    /// Filled by [`ExperimentResult::save`].
    pub outputs: Vec<PathBuf>,
    pub wall_seconds: f64,
}

impl ExperimentResult {
    fn new(id: &'static str, started: Instant) -> Self {
        Self {
            id,
            configs: Vec::new(),
            tables: Vec::new(),
            verdicts: Vec::new(),
            outputs: Vec::new(),
            wall_seconds: started.elapsed().as_secs_f64(),
        }
    }

    pub fn failed(&self) -> bool {
        self.verdicts.iter().any(|v| v.status == Status::Fail)
    }

    pub fn table(&self, stem: &str) -> Option<&Table> {
        self.tables.iter().find(|(s, _)| s == stem).map(|(_, t)| t)
    }

    /// Writes `<stem>.csv` per table and `<id>_<scenario>.toml` per
    /// configuration; with `json`, also the table mirrors and
    /// `<id>_result.json`.
    pub fn save(&mut self, dir: &Path, json: bool) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        self.outputs.clear();
        for (stem, table) in &self.tables {
            let path = dir.join(format!("{stem}.csv"));
            table.write(&path, json)?;
            self.outputs.push(path);
        }
        let mut config_paths = Vec::new();
        for (scenario, file) in &self.configs {
            let path = dir.join(format!("{}_{scenario}.toml", self.id));
            fs::write(&path, config::to_toml(file)?)
                .with_context(|| format!("writing {}", path.display()))?;
            config_paths.push(path);
        }
        if json {
            let doc = json!({
                "id": self.id,
                "configs": config_paths,
                "outputs": self.outputs,
                "verdicts": self.verdicts.iter().map(|v| json!({
                    "name": v.name,
                    "status": v.status.to_string(),
                    "detail": v.detail,
                })).collect::<Vec<_>>(),
                "wall_seconds": self.wall_seconds,
            });
            let path = dir.join(format!("{}_result.json", self.id));
            fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
        }
        Ok(())
    }
}

/// The table as a reader of its CSV sees it.
fn as_emitted(t: &Table) -> Result<Table> {
    Table::parse(&t.to_csv()?)
}

fn snapshot_with_seed(config: &SimConfig, seed: Option<u64>) -> ConfigFile {
    let mut f = config::snapshot(config);
    if let (Some(seed), Some(sim)) = (seed, f.sim.as_mut()) {
        sim.seed = Some(seed);
    }
    f
}

/// Worst value of `f` over `xs`, by `|f|`.
fn worst<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    xs.into_iter().fold(0.0, |w: f64, x| if x.abs() > w.abs() || x.is_nan() { x } else { w })
}
