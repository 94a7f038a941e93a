//! Differences between two run directories.
//!
//! Files are matched by name. Their key columns must agree row by row;
//! value columns present in both are compared.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::output::{read_json, Check, CsvTable, FileEntry};
use crate::run::Manifest;

/// Relative agreement required of key columns.
const KEY_TOL: f64 = 1e-12;

pub fn default_tolerances() -> BTreeMap<String, f64> {
    [("linf", 1e-3), ("l1", 1e-3), ("mass", 1e-3)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDiff {
    pub file: String,
    pub column: String,
    /// Restricted to the window when one is given.
    pub linf: f64,
    /// `∫|a - b| dx` per time slice, maximised over slices, for `(t, x)`
    /// tables; the mean absolute difference otherwise.
    pub l1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub run_a: String,
    pub run_b: String,
    pub window: Option<(f64, f64)>,
    pub tolerances: BTreeMap<String, f64>,
    pub columns: Vec<ColumnDiff>,
    /// Largest `|∫_window (ρ_a - ρ_b) dx|` over time slices.
    pub windowed_mass: Option<f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

fn parse(table: &CsvTable, row: usize, col: usize) -> Option<f64> {
    table.rows[row][col].parse().ok()
}

fn keys_match(a: &str, b: &str) -> bool {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => (x - y).abs() <= KEY_TOL * x.abs().max(y.abs()).max(1.0),
        _ => a == b,
    }
}

fn check_grid(file: &str, a: &CsvTable, b: &CsvTable) -> Result<Vec<usize>> {
    let incompatible = |reason: String| CliError::IncompatibleGrids {
        file: file.to_string(),
        reason,
    };
    if a.keys != b.keys {
        return Err(incompatible(format!("key columns {:?} vs {:?}", a.keys, b.keys)));
    }
    if a.rows.len() != b.rows.len() {
        return Err(incompatible(format!("{} rows vs {}", a.rows.len(), b.rows.len())));
    }
    let mut cols = Vec::new();
    for k in &a.keys {
        let (ca, cb) = (a.column(k), b.column(k));
        let (Some(ca), Some(cb)) = (ca, cb) else {
            return Err(incompatible(format!("key column `{k}` missing")));
        };
        for (i, (ra, rb)) in a.rows.iter().zip(&b.rows).enumerate() {
            if !keys_match(&ra[ca], &rb[cb]) {
                return Err(incompatible(format!("row {}: {k} = {} vs {}", i + 1, ra[ca], rb[cb])));
            }
        }
        cols.push(ca);
    }
    Ok(cols)
}

/// Row ranges sharing the same `t`, for tables keyed by `(t, x)`.
fn slices(table: &CsvTable) -> Vec<std::ops::Range<usize>> {
    let t = table.column("t").expect("keyed by t");
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=table.rows.len() {
        if i == table.rows.len() || table.rows[i][t] != table.rows[start][t] {
            out.push(start..i);
            start = i;
        }
    }
    out
}

fn trapezoid(xs: &[f64], ys: &[f64], window: Option<(f64, f64)>) -> f64 {
    let inside = |x: f64| window.is_none_or(|(lo, hi)| (lo..=hi).contains(&x));
    xs.windows(2)
        .zip(ys.windows(2))
        .filter(|(x, _)| inside(x[0]) && inside(x[1]))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

fn diff_table(
    name: &str,
    a: &CsvTable,
    b: &CsvTable,
    window: Option<(f64, f64)>,
) -> Result<(Vec<ColumnDiff>, Option<f64>)> {
    let key_cols = check_grid(name, a, b)?;
    let spatial = a.keys == ["t", "x"];
    let xcol = a.column("x");
    let mut diffs = Vec::new();
    let mut mass = None;
    for (ca, col) in a.header.iter().enumerate() {
        if key_cols.contains(&ca) {
            continue;
        }
        let Some(cb) = b.column(col) else { continue };
        let d: Option<Vec<f64>> = (0..a.rows.len())
            .map(|i| Some(parse(a, i, ca)? - parse(b, i, cb)?))
            .collect();
        let Some(d) = d else { continue };
        let abs: Vec<f64> = d
            .iter()
            .map(|v| if v.is_nan() { f64::INFINITY } else { v.abs() })
            .collect();
        let in_window = |i: usize| match (window, xcol.filter(|_| spatial)) {
            (Some((lo, hi)), Some(c)) => parse(a, i, c).is_some_and(|x| (lo..=hi).contains(&x)),
            _ => true,
        };
        let linf = (0..abs.len())
            .filter(|&i| in_window(i))
            .map(|i| abs[i])
            .fold(0.0, f64::max);
        let l1 = if spatial {
            let xcol = xcol.expect("keyed by x");
            slices(a)
                .into_iter()
                .map(|r| {
                    let xs: Vec<f64> = r.clone().map(|i| parse(a, i, xcol).unwrap_or(f64::NAN)).collect();
                    let l1 = trapezoid(&xs, &abs[r.clone()], window);
                    if col == "rho" {
                        let m = trapezoid(&xs, &d[r], window).abs();
                        mass = Some(mass.map_or(m, |v: f64| v.max(m)));
                    }
                    l1
                })
                .fold(0.0, f64::max)
        } else {
            abs.iter().sum::<f64>() / abs.len().max(1) as f64
        };
        diffs.push(ColumnDiff {
            file: name.to_string(),
            column: col.clone(),
            linf,
            l1,
        });
    }
    Ok((diffs, mass))
}

fn load(dir: &Path) -> Result<Manifest> {
    read_json(&dir.join("manifest.json"))
}

pub fn compare(
    dir_a: &Path,
    dir_b: &Path,
    window: Option<(f64, f64)>,
    overrides: &[(String, f64)],
) -> Result<CompareReport> {
    let mut tolerances = default_tolerances();
    for (k, v) in overrides {
        if !tolerances.contains_key(k) {
            return Err(CliError::Validation {
                path: "--tolerance".into(),
                line: None,
                field: k.clone(),
                message: "compare understands linf, l1 and mass".into(),
            });
        }
        tolerances.insert(k.clone(), *v);
    }
    let (ma, mb) = (load(dir_a)?, load(dir_b)?);
    let by_name: BTreeMap<&str, &FileEntry> = mb.files.iter().map(|f| (f.name.as_str(), f)).collect();
    let mut columns = Vec::new();
    let mut windowed_mass: Option<f64> = None;
    let mut shared = 0;
    for fa in &ma.files {
        let Some(fb) = by_name.get(fa.name.as_str()) else {
            continue;
        };
        shared += 1;
        let ta = CsvTable::read(&dir_a.join(&fa.name), fa.keys.clone())?;
        let tb = CsvTable::read(&dir_b.join(&fb.name), fb.keys.clone())?;
        let (diffs, mass) = diff_table(&fa.name, &ta, &tb, window)?;
        columns.extend(diffs);
        if let Some(m) = mass {
            windowed_mass = Some(windowed_mass.map_or(m, |v| v.max(m)));
        }
    }
    if shared == 0 {
        return Err(CliError::IncompatibleGrids {
            file: "manifest.json".into(),
            reason: "the runs share no output files".into(),
        });
    }
    let linf = columns.iter().map(|c| c.linf).fold(0.0, f64::max);
    let l1 = columns.iter().map(|c| c.l1).fold(0.0, f64::max);
    let mut checks = vec![
        Check::at_most("linf", linf, tolerances["linf"]),
        Check::at_most("l1", l1, tolerances["l1"]),
    ];
    if let Some(m) = windowed_mass {
        checks.push(Check::at_most("windowed_mass", m, tolerances["mass"]));
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(CompareReport {
        run_a: dir_a.display().to_string(),
        run_b: dir_b.display().to_string(),
        window,
        tolerances,
        columns,
        windowed_mass,
        checks,
        pass,
    })
}
