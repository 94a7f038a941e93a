//! Scenario files: TOML, schema version 1.
//!
//! ```toml
//! schema = 1
//! name = "zeldovich-delta"
//! system = "zeldovich"
//! task = "exact-sample"
//!
//! [data]
//! rho_minus = 1.0
//! rho_plus = 1.0
//! u_minus = 1.0
//! u_plus = -1.0
//!
//! [sigma]
//! kind = "constant"
//! value = 1.0
//!
//! [grid]
//! x_min = -2.0
//! x_max = 2.0
//! nx = 81
//! times = [0.5, 1.0]
//! ```

use std::collections::BTreeMap;

use rdd_core::coeffs::{Coefficient, CoefficientProfile, Table};
use rdd_core::pde_verifier::ConvectiveFlux;
use rdd_core::waves::{RiemannData, System};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemName {
    Zeldovich,
    Pressureless,
}

impl SystemName {
    pub fn system(self) -> System {
        match self {
            SystemName::Zeldovich => System::Zeldovich,
            SystemName::Pressureless => System::Pressureless,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    ExactSample,
    ViscousSample,
    PdeVerify,
    ProfileBvp,
    WeakResidual,
    LimitSweep,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::ExactSample => "exact-sample",
            Task::ViscousSample => "viscous-sample",
            Task::PdeVerify => "pde-verify",
            Task::ProfileBvp => "profile-bvp",
            Task::WeakResidual => "weak-residual",
            Task::LimitSweep => "limit-sweep",
        }
    }

    /// Tolerance keys understood by the task, with their defaults.
    pub fn default_tolerances(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            Task::ExactSample => &[("rh", 1e-12)],
            Task::ViscousSample => &[("max_principle", 1e-12)],
            Task::PdeVerify => &[("linf", 1e-3), ("order", 1.8), ("mass", 1e-10), ("weight_rel", 0.05)],
            Task::ProfileBvp => &[("limit_rel", 0.02)],
            Task::WeakResidual => &[("safety", 10.0)],
            Task::LimitSweep => &[("linear_bound", 1.5)],
        };
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub u_minus: f64,
    pub u_plus: f64,
}

/// A coefficient preset. Closures cannot come from a file, so `custom` is
/// library-only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Constant { value: f64 },
    PowerDecay { mu: f64, theta: f64 },
    Table { times: Vec<f64>, values: Vec<f64> },
    Scaled { mu: f64, base: Box<CoefficientSpec> },
}

impl CoefficientSpec {
    /// Builds the coefficient; errors carry the offending sub-field.
    pub fn build(&self) -> std::result::Result<Coefficient, (&'static str, String)> {
        let non_negative = |field: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err((field, format!("must be finite and non-negative, got {v}")))
            }
        };
        Ok(match self {
            CoefficientSpec::Constant { value } => {
                non_negative("value", *value)?;
                Coefficient::constant(*value)
            }
            CoefficientSpec::PowerDecay { mu, theta } => {
                non_negative("mu", *mu)?;
                non_negative("theta", *theta)?;
                Coefficient::power_decay(*mu, *theta)
            }
            CoefficientSpec::Table { times, values } => {
                let table = Table::new(times.clone(), values.clone()).map_err(|e| ("times", e.to_string()))?;
                Coefficient::Table(table)
            }
            CoefficientSpec::Scaled { mu, base } => {
                non_negative("mu", *mu)?;
                Coefficient::scaled(*mu, base.build()?)
            }
        })
    }
}

fn constant_one() -> CoefficientSpec {
    CoefficientSpec::Constant { value: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Node grid `x_min..=x_max` with `nx` points.
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub nx: Option<usize>,
    /// Cell-centre grid on `[-half_width, half_width]`, matching `pde-verify`.
    pub half_width: Option<f64>,
    pub cells: Option<usize>,
    pub times: Vec<f64>,
    /// Extra seeded random probes (exact-sample only).
    #[serde(default)]
    pub random_probes: usize,
}

impl GridSection {
    pub fn points(&self) -> Vec<f64> {
        match (self.half_width, self.cells) {
            (Some(r), Some(n)) => {
                let dx = 2.0 * r / n as f64;
                (0..n).map(|j| -r + (j as f64 + 0.5) * dx).collect()
            }
            _ => {
                let (a, b, n) = (self.x_min.unwrap(), self.x_max.unwrap(), self.nx.unwrap());
                (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
            }
        }
    }

    pub fn span(&self) -> (f64, f64) {
        let p = self.points();
        (p[0], p[p.len() - 1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscousSection {
    pub epsilon: f64,
    /// Half-width of the window used for delta-weight capture.
    #[serde(default = "default_capture")]
    pub capture_half_width: f64,
}

fn default_capture() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FluxName {
    #[default]
    Upwind,
    Central,
}

impl FluxName {
    pub fn flux(self) -> ConvectiveFlux {
        match self {
            FluxName::Upwind => ConvectiveFlux::Upwind,
            FluxName::Central => ConvectiveFlux::Central,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSection {
    pub epsilon: f64,
    pub half_width: f64,
    pub cells: usize,
    pub horizon: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default)]
    pub flux: FluxName,
    /// Snapshot times; ten even steps up to the horizon when empty.
    #[serde(default)]
    pub output_times: Vec<f64>,
    /// Grid levels, each twice as fine as the last.
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Error window `|x| ≤ x_max`, `t ≥ t_min`.
    pub x_max: Option<f64>,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_boundary_tol")]
    pub boundary_tol: f64,
}

fn default_safety() -> f64 {
    0.9
}
fn default_levels() -> usize {
    2
}
fn default_t_min() -> f64 {
    0.1
}
fn default_window() -> f64 {
    0.5
}
fn default_boundary_tol() -> f64 {
    1e-6
}

impl PdeSection {
    pub fn times(&self) -> Vec<f64> {
        if self.output_times.is_empty() {
            (1..=10).map(|k| self.horizon * k as f64 / 10.0).collect()
        } else {
            self.output_times.clone()
        }
    }

    pub fn error_half_width(&self) -> f64 {
        self.x_max.unwrap_or(0.5 * self.half_width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub epsilons: Vec<f64>,
    /// Node counts, one per ε.
    pub nodes: Vec<usize>,
    pub half_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualSection {
    pub x_min: f64,
    pub x_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    #[serde(default = "default_bumps")]
    pub nx: usize,
    #[serde(default = "default_bumps")]
    pub nt: usize,
}

fn default_bumps() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub mus: Vec<f64>,
    /// Damping shape: σ = μ·ν.
    pub nu: CoefficientSpec,
    pub probes: Vec<f64>,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    pub system: SystemName,
    pub task: Task,
    pub data: DataSpec,
    #[serde(default = "constant_one")]
    pub alpha: CoefficientSpec,
    #[serde(default)]
    pub sigma: Option<CoefficientSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viscous: Option<ViscousSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pde: Option<PdeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<ResidualSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

/// A scenario that passed validation, with the source kept for diagnostics.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    pub path: String,
    pub source: String,
}

impl Scenario {
    pub fn riemann_data(&self) -> RiemannData {
        let d = self.data;
        RiemannData::new(d.rho_minus, d.rho_plus, d.u_minus, d.u_plus).expect("validated")
    }

    pub fn sigma_spec(&self) -> CoefficientSpec {
        self.sigma.clone().unwrap_or(CoefficientSpec::Constant { value: 0.0 })
    }

    pub fn profile(&self) -> CoefficientProfile {
        self.profile_with_sigma(self.sigma_spec().build().expect("validated"))
    }

    pub fn profile_with_sigma(&self, sigma: Coefficient) -> CoefficientProfile {
        CoefficientProfile::new(self.alpha.build().expect("validated"), sigma).expect("validated")
    }
}

fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let before = &source[..offset.min(source.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Best-effort line of a dotted field path such as `data.rho_minus`.
pub fn locate(source: &str, field: &str) -> Option<usize> {
    let parts: Vec<&str> = field.split('.').collect();
    let lines: Vec<&str> = source.lines().collect();
    let is_header = |l: &str| l.trim_start().starts_with('[');
    let key_line = |from: usize, key: &str| {
        lines[from..]
            .iter()
            .take_while(|l| !is_header(l))
            .position(|l| {
                let l = l.trim_start();
                l.strip_prefix(key)
                    .is_some_and(|rest| rest.trim_start().starts_with('='))
            })
            .map(|i| from + i + 1)
    };
    for split in (0..parts.len()).rev() {
        let (table, rest) = parts.split_at(split);
        let start = if table.is_empty() {
            0
        } else {
            let header = format!("[{}]", table.join("."));
            match lines.iter().position(|l| l.trim() == header) {
                Some(i) => i + 1,
                None => continue,
            }
        };
        if let Some(key) = rest.first() {
            if let Some(line) = key_line(start, key) {
                return Some(line);
            }
        }
        if start > 0 {
            return Some(start);
        }
    }
    None
}

impl Loaded {
    pub fn parse(path: &str, source: String) -> Result<Self> {
        let scenario: Scenario = toml::from_str(&source).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(&source, s.start));
            CliError::Parse {
                path: path.to_string(),
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        let loaded = Loaded {
            scenario,
            path: path.to_string(),
            source,
        };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let source = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&path.display().to_string(), source)
    }

    pub fn invalid(&self, field: &str, message: impl Into<String>) -> CliError {
        CliError::Validation {
            path: self.path.clone(),
            line: locate(&self.source, field),
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        let bad = |field: &str, msg: String| Err(self.invalid(field, msg));
        if s.schema != SCHEMA_VERSION {
            return bad(
                "schema",
                format!("unsupported schema {}, expected {SCHEMA_VERSION}", s.schema),
            );
        }
        if s.name.is_empty()
            || !s
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return bad("name", "must be non-empty and use only [A-Za-z0-9_-]".into());
        }
        let d = s.data;
        for (key, v) in [("rho_minus", d.rho_minus), ("rho_plus", d.rho_plus)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("data.{key}"), format!("density must be positive, got {v}"));
            }
        }
        for (key, v) in [("u_minus", d.u_minus), ("u_plus", d.u_plus)] {
            if !v.is_finite() {
                return bad(&format!("data.{key}"), format!("velocity must be finite, got {v}"));
            }
        }
        if let Err((sub, msg)) = s.alpha.build() {
            return bad(&format!("alpha.{sub}"), msg);
        }
        if let Err((sub, msg)) = s.sigma_spec().build() {
            return bad(&format!("sigma.{sub}"), msg);
        }
        if s.alpha.build().map(|a| a.is_identically_zero()).unwrap_or(false) {
            return bad("alpha", "alpha must not vanish identically".into());
        }
        let known = s.task.default_tolerances();
        for (key, v) in &s.tolerances {
            if !known.contains_key(key) {
                let keys: Vec<&str> = known.keys().map(String::as_str).collect();
                return bad(
                    &format!("tolerances.{key}"),
                    format!("unknown for task {}; expected one of {keys:?}", s.task.name()),
                );
            }
            if !(v.is_finite() && *v > 0.0) {
                return bad(&format!("tolerances.{key}"), format!("must be positive, got {v}"));
            }
        }
        self.validate_task()
    }

    fn require<'a, T>(&self, section: &'a Option<T>, name: &str) -> Result<&'a T> {
        section.as_ref().ok_or_else(|| {
            self.invalid(
                name,
                format!("section [{name}] is required for task {}", self.scenario.task.name()),
            )
        })
    }

    fn positive(&self, field: &str, v: f64) -> Result<()> {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(self.invalid(field, format!("must be positive, got {v}")))
        }
    }

    fn times(&self, field: &str, times: &[f64]) -> Result<()> {
        if times.is_empty() {
            return Err(self.invalid(field, "at least one time is required"));
        }
        for &t in times {
            self.positive(field, t)?;
        }
        Ok(())
    }

    fn validate_task(&self) -> Result<()> {
        let s = &self.scenario;
        let need_system = |sys: SystemName| {
            if s.system != sys {
                Err(self.invalid(
                    "system",
                    format!(
                        "task {} needs system = \"{}\"",
                        s.task.name(),
                        match sys {
                            SystemName::Zeldovich => "zeldovich",
                            SystemName::Pressureless => "pressureless",
                        }
                    ),
                ))
            } else {
                Ok(())
            }
        };
        match s.task {
            Task::ExactSample | Task::ViscousSample => {
                let g = self.require(&s.grid, "grid")?;
                match (g.half_width, g.cells, g.x_min, g.x_max, g.nx) {
                    (Some(r), Some(n), None, None, None) => {
                        self.positive("grid.half_width", r)?;
                        if n < 1 {
                            return Err(self.invalid("grid.cells", "must be at least 1"));
                        }
                    }
                    (None, None, Some(a), Some(b), Some(n)) => {
                        if !(a.is_finite() && b.is_finite() && a < b) {
                            return Err(self.invalid("grid.x_max", "need finite x_min < x_max"));
                        }
                        if n < 2 {
                            return Err(self.invalid("grid.nx", "must be at least 2"));
                        }
                    }
                    _ => {
                        return Err(self.invalid("grid", "give either x_min, x_max, nx or half_width, cells"));
                    }
                }
                self.times("grid.times", &g.times)?;
                if g.random_probes > 0 && s.task != Task::ExactSample {
                    return Err(self.invalid("grid.random_probes", "only supported by exact-sample"));
                }
                if s.task == Task::ViscousSample {
                    need_system(SystemName::Zeldovich)?;
                    let v = self.require(&s.viscous, "viscous")?;
                    self.positive("viscous.epsilon", v.epsilon)?;
                    self.positive("viscous.capture_half_width", v.capture_half_width)?;
                }
            }
            Task::PdeVerify => {
                let p = self.require(&s.pde, "pde")?;
                self.positive("pde.epsilon", p.epsilon)?;
                self.positive("pde.half_width", p.half_width)?;
                self.positive("pde.horizon", p.horizon)?;
                if p.cells < 4 {
                    return Err(self.invalid("pde.cells", "must be at least 4"));
                }
                if !(p.safety > 0.0 && p.safety < 1.0) {
                    return Err(self.invalid("pde.safety", "must lie in (0, 1)"));
                }
                if p.levels == 0 || p.levels > 8 {
                    return Err(self.invalid("pde.levels", "must lie in 1..=8"));
                }
                if !p.output_times.is_empty() {
                    self.times("pde.output_times", &p.output_times)?;
                    if p.output_times.iter().any(|&t| t > p.horizon) {
                        return Err(self.invalid("pde.output_times", "times must not exceed the horizon"));
                    }
                }
                self.positive("pde.window", p.window)?;
                self.positive("pde.boundary_tol", p.boundary_tol)?;
                if let Some(x) = p.x_max {
                    self.positive("pde.x_max", x)?;
                }
            }
            Task::ProfileBvp => {
                need_system(SystemName::Pressureless)?;
                let p = self.require(&s.profile, "profile")?;
                if p.epsilons.is_empty() || p.epsilons.len() != p.nodes.len() {
                    return Err(self.invalid("profile.nodes", "need one node count per epsilon"));
                }
                for &e in &p.epsilons {
                    self.positive("profile.epsilons", e)?;
                }
                if p.nodes.iter().any(|&n| n < 3) {
                    return Err(self.invalid("profile.nodes", "node counts must be at least 3"));
                }
                self.positive("profile.half_width", p.half_width)?;
            }
            Task::WeakResidual => {
                let r = self.require(&s.residual, "residual")?;
                if !(r.x_min < r.x_max) {
                    return Err(self.invalid("residual.x_max", "need x_min < x_max"));
                }
                self.positive("residual.t_min", r.t_min)?;
                if !(r.t_min < r.t_max) {
                    return Err(self.invalid("residual.t_max", "need t_min < t_max"));
                }
                if r.nx == 0 || r.nt == 0 {
                    return Err(self.invalid("residual.nx", "bump counts must be positive"));
                }
            }
            Task::LimitSweep => {
                if s.sigma.is_some() {
                    return Err(self.invalid(
                        "sigma",
                        "limit-sweep builds sigma from sweep.mus and sweep.nu; drop [sigma]",
                    ));
                }
                let w = self.require(&s.sweep, "sweep")?;
                if w.mus.is_empty() {
                    return Err(self.invalid("sweep.mus", "at least one mu is required"));
                }
                for &m in &w.mus {
                    self.positive("sweep.mus", m)?;
                }
                if let Err((sub, msg)) = w.nu.build() {
                    return Err(self.invalid(&format!("sweep.nu.{sub}"), msg));
                }
                if w.probes.is_empty() || w.probes.iter().any(|x| !x.is_finite()) {
                    return Err(self.invalid("sweep.probes", "need finite probe positions"));
                }
                self.times("sweep.times", &w.times)?;
            }
        }
        Ok(())
    }
}

/// Task defaults, then scenario values, then command-line overrides.
pub fn resolve_tolerances(loaded: &Loaded, overrides: &[(String, f64)]) -> Result<BTreeMap<String, f64>> {
    let mut tol = loaded.scenario.task.default_tolerances();
    tol.extend(loaded.scenario.tolerances.iter().map(|(k, v)| (k.clone(), *v)));
    for (key, v) in overrides {
        if !tol.contains_key(key) {
            return Err(CliError::Validation {
                path: "--tolerance".into(),
                line: None,
                field: key.clone(),
                message: format!("unknown for task {}", loaded.scenario.task.name()),
            });
        }
        tol.insert(key.clone(), *v);
    }
    Ok(tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_finds_nested_keys() {
        let src = "schema = 1\n[data]\nrho_minus = -1\nrho_plus = 1\n[sweep.nu]\nkind = \"constant\"\n";
        assert_eq!(locate(src, "data.rho_plus"), Some(4));
        assert_eq!(locate(src, "schema"), Some(1));
        assert_eq!(locate(src, "sweep.nu.kind"), Some(6));
        assert_eq!(locate(src, "data.missing"), Some(2));
        assert_eq!(locate(src, "pde"), None);
    }

    #[test]
    fn offsets_map_to_lines() {
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
    }
}
