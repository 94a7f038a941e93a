use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::output::{write_json, Check, FileEntry};
use crate::scenario::{resolve_tolerances, Loaded, Scenario, Task, SCHEMA_VERSION};
use crate::tasks::{execute, Context};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub schema: u32,
    pub seed: u64,
    /// The scenario with every default filled in.
    pub scenario: Scenario,
    pub tolerances: BTreeMap<String, f64>,
    pub solver: Value,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub task: Task,
    pub verified: bool,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, Value>,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_root: PathBuf,
    pub jobs: usize,
    pub seed: u64,
    pub tolerances: Vec<(String, f64)>,
}

/// Fills defaults that are computed rather than declared.
fn resolved(s: &Scenario) -> Scenario {
    let mut s = s.clone();
    if s.task != Task::LimitSweep {
        s.sigma = Some(s.sigma_spec());
    }
    if let Some(p) = s.pde.as_mut() {
        p.output_times = p.times();
        p.x_max = Some(p.error_half_width());
    }
    s
}

fn run_one(loaded: &Loaded, opts: &RunOptions) -> Result<Summary> {
    let sc = &loaded.scenario;
    let tolerances = resolve_tolerances(loaded, &opts.tolerances)?;
    let ctx = Context {
        scenario: sc,
        tolerances: &tolerances,
        seed: opts.seed,
    };
    let out = execute(&ctx)?;
    let dir = opts.out_root.join(&sc.name);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    for table in &out.tables {
        table.write(&dir)?;
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        schema: SCHEMA_VERSION,
        seed: opts.seed,
        scenario: resolved(sc),
        tolerances,
        solver: out.solver.clone(),
        files: out
            .tables
            .iter()
            .map(|t| FileEntry {
                name: t.name.clone(),
                keys: t.keys.clone(),
                rows: t.rows.len(),
            })
            .collect(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    let summary = Summary {
        scenario: sc.name.clone(),
        task: sc.task,
        verified: out.verified(),
        checks: out.checks,
        metrics: out.metrics,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Loads every scenario up front, then runs them on `opts.jobs` threads.
/// Results come back in input order.
pub fn run_scenarios(paths: &[PathBuf], opts: &RunOptions) -> Result<Vec<Result<Summary>>> {
    let loaded = paths.iter().map(|p| Loaded::read(p)).collect::<Result<Vec<_>>>()?;
    let mut names = BTreeSet::new();
    for l in &loaded {
        if !names.insert(l.scenario.name.as_str()) {
            return Err(l.invalid("name", format!("scenario name `{}` is used twice", l.scenario.name)));
        }
        resolve_tolerances(l, &opts.tolerances)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .expect("thread pool");
    Ok(pool.install(|| loaded.par_iter().map(|l| run_one(l, opts)).collect()))
}

pub fn default_out_root() -> &'static Path {
    Path::new("rdd-out")
}
