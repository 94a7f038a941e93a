//! One runner per scenario task. Each returns tables, checks and metrics;
//! the caller writes them out.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use rdd_core::coeffs::{Coefficient, CoefficientProfile};
use rdd_core::exact_pressureless::{check_entropy_pressureless, solve_pressureless};
use rdd_core::exact_zeldovich::{check_entropy_zeldovich, solve_zeldovich};
use rdd_core::pde_verifier::{
    observed_orders, step_pressureless_viscous, step_zeldovich_viscous, zeldovich_error, FieldHistory, GridSpec,
    StepperOptions,
};
use rdd_core::viscous_pressureless_profile::{extract_delta_limit, solve_profile};
use rdd_core::viscous_zeldovich::ViscousField;
use rdd_core::waves::{EntropyStatus, RiemannData, System, WaveCase, WaveFanSolution};
use rdd_core::weak_residual::{residual_pressureless, residual_zeldovich, ResidualOptions, TestFunctionFamily};
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::output::{num, Check, CsvTable};
use crate::scenario::{Scenario, Task};

#[derive(Debug, Clone)]
pub struct TaskOutput {
    pub tables: Vec<CsvTable>,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, Value>,
    /// Solver settings that shape the output, for the manifest.
    pub solver: Value,
}

impl TaskOutput {
    fn new(solver: Value) -> Self {
        Self {
            tables: Vec::new(),
            checks: Vec::new(),
            metrics: BTreeMap::new(),
            solver,
        }
    }

    pub fn verified(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn metric(&mut self, key: &str, v: impl Into<Value>) {
        self.metrics.insert(key.to_string(), v.into());
    }
}

pub struct Context<'a> {
    pub scenario: &'a Scenario,
    pub tolerances: &'a BTreeMap<String, f64>,
    pub seed: u64,
}

impl Context<'_> {
    fn tol(&self, key: &str) -> f64 {
        self.tolerances[key]
    }

    fn core<T>(&self, r: rdd_core::Result<T>) -> Result<T> {
        r.map_err(|e| CliError::from_core(&self.scenario.name, e))
    }

    fn exact(&self, data: RiemannData, profile: CoefficientProfile) -> Result<WaveFanSolution> {
        self.core(match self.scenario.system.system() {
            System::Zeldovich => solve_zeldovich(data, profile),
            System::Pressureless => solve_pressureless(data, profile),
        })
    }
}

fn quad_json(p: &CoefficientProfile) -> Value {
    let q = p.quad_options();
    json!({ "abs_tol": q.abs_tol, "rel_tol": q.rel_tol, "max_panels": q.max_panels })
}

pub fn execute(ctx: &Context) -> Result<TaskOutput> {
    match ctx.scenario.task {
        Task::ExactSample => exact_sample(ctx),
        Task::ViscousSample => viscous_sample(ctx),
        Task::PdeVerify => pde_verify(ctx),
        Task::ProfileBvp => profile_bvp(ctx),
        Task::WeakResidual => weak_residual(ctx),
        Task::LimitSweep => limit_sweep(ctx),
    }
}

/// Largest jump-relation residual of the solution's delta triple, scaled by
/// the data so the bound is dimensionless.
fn jump_residual(sol: &WaveFanSolution) -> Option<f64> {
    let tr = sol.delta?;
    let d = sol.data;
    let (rm, rp, um, up) = (d.rho_minus(), d.rho_plus(), d.u_minus(), d.u_plus());
    let scale = (rm + rp) * (1.0 + um.abs() + up.abs()).powi(2);
    let mass = tr.w0 - (-tr.varsigma * (rm - rp) + (rm * um - rp * up));
    let second = match sol.system {
        System::Zeldovich => tr.varsigma - 0.5 * (um + up),
        System::Pressureless => {
            tr.w0 * tr.u_delta0 - (-tr.varsigma * (rm * um - rp * up) + (rm * um * um - rp * up * up))
        }
    };
    let path = tr.varsigma - tr.u_delta0;
    Some([mass, second, path].iter().fold(0.0f64, |m, r| m.max(r.abs())) / scale)
}

fn exact_sample(ctx: &Context) -> Result<TaskOutput> {
    let sc = ctx.scenario;
    let grid = sc.grid.as_ref().expect("validated");
    let profile = sc.profile();
    let sol = ctx.exact(sc.riemann_data(), profile.clone())?;
    let mut out = TaskOutput::new(json!({ "quadrature": quad_json(&profile) }));

    let xs = grid.points();
    let mut field = CsvTable::new(
        "field.csv",
        &["t", "x"],
        &["t", "x", "rho", "u", "atom_flag", "atom_weight"],
    );
    for &t in &grid.times {
        for &x in &xs {
            let r = ctx.core(sol.sample(x, t))?.record(x, t);
            field.push(&[
                t,
                x,
                r.rho_regular,
                r.u,
                f64::from(u8::from(r.atom_flag)),
                r.atom_weight,
            ]);
        }
    }
    out.tables.push(field);

    if grid.random_probes > 0 {
        let mut rng = StdRng::seed_from_u64(ctx.seed);
        let (a, b) = grid.span();
        let t_max = grid.times.iter().cloned().fold(0.0, f64::max);
        let mut probes = CsvTable::new(
            "probes.csv",
            &["probe", "t", "x"],
            &["probe", "t", "x", "rho", "u", "atom_flag", "atom_weight"],
        );
        for k in 0..grid.random_probes {
            let x = rng.gen_range(a..=b);
            let t = t_max * (1.0 - rng.gen::<f64>());
            let r = ctx.core(sol.sample(x, t))?.record(x, t);
            probes.push(&[
                k as f64,
                t,
                x,
                r.rho_regular,
                r.u,
                f64::from(u8::from(r.atom_flag)),
                r.atom_weight,
            ]);
        }
        out.tables.push(probes);
    }

    out.metric("case", format!("{:?}", sol.case));
    if let Some(tr) = sol.delta {
        let mut atoms = CsvTable::new("atoms.csv", &["t"], &["t", "x", "weight", "velocity"]);
        for &t in &grid.times {
            atoms.push(&[
                t,
                ctx.core(sol.shock_path(t))?,
                ctx.core(sol.weight(t))?,
                ctx.core(sol.atom_velocity(t))?,
            ]);
        }
        out.tables.push(atoms);
        out.metric("varsigma", tr.varsigma);
        out.metric("w0", tr.w0);
        out.metric("u_delta0", tr.u_delta0);
        let rh = jump_residual(&sol).unwrap_or(0.0);
        out.checks.push(Check::at_most("jump_relations", rh, ctx.tol("rh")));
        let verdict = ctx.core(match sol.system {
            System::Zeldovich => check_entropy_zeldovich(&sol, &grid.times),
            System::Pressureless => check_entropy_pressureless(&sol, &grid.times),
        })?;
        out.checks
            .push(Check::flag("entropy", verdict.status == EntropyStatus::Pass));
    }
    Ok(out)
}

fn viscous_sample(ctx: &Context) -> Result<TaskOutput> {
    let sc = ctx.scenario;
    let grid = sc.grid.as_ref().expect("validated");
    let v = sc.viscous.expect("validated");
    let data = sc.riemann_data();
    let profile = sc.profile();
    let field = ctx.core(ViscousField::new(v.epsilon, data, profile.clone()))?;
    let exact = ctx.core(solve_zeldovich(data, profile.clone()))?;
    let mut out = TaskOutput::new(json!({ "quadrature": quad_json(&profile) }));
    let xs = grid.points();

    let slices: Vec<Result<Vec<[f64; 6]>>> = grid
        .times
        .par_iter()
        .map(|&t| {
            xs.iter()
                .map(|&x| {
                    let (r, u) = ctx.core(field.eval_viscous(x, t))?;
                    let s = ctx.core(exact.sample(x, t))?;
                    Ok([t, x, r, u, s.rho, s.u])
                })
                .collect()
        })
        .collect();
    let mut table = CsvTable::new(
        "field.csv",
        &["t", "x"],
        &["t", "x", "rho", "u", "rho_exact", "u_exact"],
    );
    let (mut min_rho, mut u_excess, mut gap) = (f64::INFINITY, 0.0f64, 0.0f64);
    for (slice, &t) in slices.into_iter().zip(&grid.times) {
        let e = ctx.core(profile.e(t))?;
        let (lo, hi) = (
            data.u_plus().min(data.u_minus()) * e,
            data.u_plus().max(data.u_minus()) * e,
        );
        for row in slice? {
            min_rho = min_rho.min(row[2]);
            u_excess = u_excess.max(lo - row[3]).max(row[3] - hi);
            gap = gap.max((row[3] - row[5]).abs());
            table.push(&row);
        }
    }
    out.tables.push(table);
    let tol = ctx.tol("max_principle");
    out.checks.push(Check::at_least("min_density", min_rho, -tol));
    out.checks
        .push(Check::at_most("velocity_outside_range", u_excess.max(0.0), tol));
    out.metric("max_velocity_gap_to_inviscid", gap);

    if exact.delta.is_some() {
        let mut weights = CsvTable::new("weights.csv", &["t"], &["t", "captured", "exact", "relative_error"]);
        for &t in &grid.times {
            let c = ctx.core(field.capture_delta_weight(t, v.capture_half_width))?;
            let w = ctx.core(exact.weight(t))?;
            weights.push(&[t, c, w, (c - w).abs() / w.abs()]);
        }
        out.tables.push(weights);
    }
    Ok(out)
}

fn pde_verify(ctx: &Context) -> Result<TaskOutput> {
    let sc = ctx.scenario;
    let p = sc.pde.as_ref().expect("validated");
    let data = sc.riemann_data();
    let profile = sc.profile();
    let base = ctx.core(GridSpec::new(p.half_width, p.cells, p.horizon, p.safety))?;
    let opts = StepperOptions {
        flux: p.flux.flux(),
        output_times: p.times(),
        window: p.window,
        boundary_tol: p.boundary_tol,
        ..Default::default()
    };
    let solver = json!({
        "quadrature": quad_json(&profile),
        "stepper": {
            "flux": opts.flux.name(),
            "boundary_tol": opts.boundary_tol,
            "window": opts.window,
            "cache_panels": opts.cache_panels,
            "check_reach": opts.check_reach,
            "fixed_dt": opts.dt,
            "cells_per_level": (0..p.levels).map(|k| p.cells << k).collect::<Vec<_>>(),
        },
    });
    let mut out = TaskOutput::new(solver);
    let system = sc.system.system();
    let histories: Vec<Result<FieldHistory>> = (0..p.levels)
        .into_par_iter()
        .map(|k| {
            let grid = base.refined(1 << k);
            ctx.core(match system {
                System::Zeldovich => step_zeldovich_viscous(data, &profile, p.epsilon, grid, &opts),
                System::Pressureless => step_pressureless_viscous(data, &profile, p.epsilon, grid, &opts),
            })
        })
        .collect();
    let histories = histories.into_iter().collect::<Result<Vec<_>>>()?;

    let mut mass = CsvTable::new(
        "mass.csv",
        &["cells", "t"],
        &[
            "cells",
            "t",
            "total",
            "boundary_inflow",
            "defect",
            "peak_x",
            "peak_rho",
            "window_excess",
        ],
    );
    for h in &histories {
        for m in &h.mass {
            mass.push(&[
                h.grid.cells as f64,
                m.t,
                m.total,
                m.boundary_inflow,
                m.conservation_defect(h.initial_mass),
                m.peak_x,
                m.peak_rho,
                m.window_excess,
            ]);
        }
    }
    out.tables.push(mass);
    let finest = histories.last().expect("levels >= 1");
    let defect = histories
        .iter()
        .map(|h| h.max_conservation_defect() / h.initial_mass)
        .fold(0.0, f64::max);
    out.checks
        .push(Check::at_most("relative_conservation_defect", defect, ctx.tol("mass")));
    out.metric("steps_finest", finest.steps as u64);
    out.metric("dt_finest", finest.dt);
    out.metric("min_rho", finest.min_rho);
    if let Some(v) = finest.vacuum {
        out.metric("vacuum_onset_t", v.t);
    }

    let mut field = CsvTable::new("field.csv", &["t", "x"], &["t", "x", "rho", "u"]);
    for snap in &finest.snapshots {
        for (j, &x) in finest.x.iter().enumerate() {
            field.push(&[snap.t, x, snap.rho[j], snap.u[j]]);
        }
    }
    out.tables.push(field);

    match system {
        System::Zeldovich => {
            let closed = ctx.core(ViscousField::new(p.epsilon, data, profile.clone()))?;
            let records = histories
                .iter()
                .map(|h| {
                    ctx.core(zeldovich_error(
                        h,
                        &closed,
                        p.error_half_width(),
                        p.t_min,
                        opts.flux.name(),
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut conv = CsvTable::new(
                "convergence.csv",
                &["cells"],
                &["cells", "dx", "dt", "linf_rho", "linf_u", "l1_rho", "l1_u"],
            );
            for r in &records {
                conv.push(&[r.cells as f64, r.dx, r.dt, r.linf_rho, r.linf_u, r.l1_rho, r.l1_u]);
            }
            out.tables.push(conv);
            let linf = records.last().unwrap().linf();
            out.checks.push(Check::at_most("linf_finest", linf, ctx.tol("linf")));
            let orders = observed_orders(&records);
            if let Some(worst) = orders.iter().cloned().reduce(f64::min) {
                out.checks
                    .push(Check::at_least("observed_order", worst, ctx.tol("order")));
            }
            out.metric("observed_orders", orders);
        }
        System::Pressureless => {
            let exact = ctx.core(solve_pressureless(data, profile.clone()))?;
            if exact.delta.is_some() {
                let last = finest.mass.last().expect("at least one record");
                let w = ctx.core(exact.weight(last.t))?;
                let err = (last.window_excess - w).abs() / w.abs();
                out.metric("window_excess_final", last.window_excess);
                out.metric("exact_weight_final", w);
                out.checks
                    .push(Check::at_most("weight_relative_error", err, ctx.tol("weight_rel")));
            }
        }
    }
    Ok(out)
}

fn profile_bvp(ctx: &Context) -> Result<TaskOutput> {
    let sc = ctx.scenario;
    let p = sc.profile.as_ref().expect("validated");
    let data = sc.riemann_data();
    let defaults = rdd_core::viscous_pressureless_profile::ProfileOptions::default();
    let mut out = TaskOutput::new(json!({
        "bvp": {
            "tol": defaults.tol,
            "max_iter": defaults.max_iter,
            "min_layer_points": defaults.min_layer_points,
            "aitken": defaults.aitken,
        }
    }));
    let profiles: Vec<Result<_>> = p
        .epsilons
        .par_iter()
        .zip(&p.nodes)
        .map(|(&e, &n)| ctx.core(solve_profile(&data, e, p.half_width, n)))
        .collect();
    let profiles = profiles.into_iter().collect::<Result<Vec<_>>>()?;

    let mut table = CsvTable::new(
        "profiles.csv",
        &["epsilon", "xi"],
        &["epsilon", "xi", "rho", "u_hat", "flux"],
    );
    let mut summary = CsvTable::new(
        "profile_summary.csv",
        &["epsilon"],
        &[
            "epsilon",
            "nodes",
            "xi_varsigma",
            "weight_estimate",
            "iterations",
            "residual",
        ],
    );
    for prof in &profiles {
        for j in 0..prof.xi.len() {
            table.push(&[prof.epsilon, prof.xi[j], prof.rho[j], prof.u_hat[j], prof.flux[j]]);
        }
        summary.push(&[
            prof.epsilon,
            prof.xi.len() as f64,
            prof.xi_varsigma,
            prof.weight_estimate(prof.default_window()),
            prof.iterations as f64,
            prof.residual,
        ]);
    }
    out.tables.push(table);
    out.tables.push(summary);

    if profiles.len() >= 3 {
        let lim = ctx.core(extract_delta_limit(&profiles))?;
        let want = ctx.core(rdd_core::exact_pressureless::solve_u_delta(&data))?.triple;
        // A zero shock speed has no relative scale; use the velocity jump.
        let speed_scale = want.varsigma.abs().max(data.u_minus() - data.u_plus());
        let es = (lim.triple.varsigma - want.varsigma).abs() / speed_scale;
        let ew = (lim.triple.w0 - want.w0).abs() / want.w0.abs();
        out.metric("varsigma_limit", lim.triple.varsigma);
        out.metric("w0_limit", lim.triple.w0);
        out.metric("varsigma_exact", want.varsigma);
        out.metric("w0_exact", want.w0);
        out.metric("varsigma_extrapolation_error", lim.varsigma_error);
        out.metric("w0_extrapolation_error", lim.w0_error);
        out.checks
            .push(Check::at_most("varsigma_relative_error", es, ctx.tol("limit_rel")));
        out.checks
            .push(Check::at_most("w0_relative_error", ew, ctx.tol("limit_rel")));
    }
    Ok(out)
}

fn weak_residual(ctx: &Context) -> Result<TaskOutput> {
    let sc = ctx.scenario;
    let r = sc.residual.expect("validated");
    let profile = sc.profile();
    let sol = ctx.exact(sc.riemann_data(), profile.clone())?;
    let family = ctx.core(TestFunctionFamily::grid(r.x_min, r.x_max, r.t_min, r.t_max, r.nx, r.nt))?;
    let opts = ResidualOptions {
        safety: ctx.tol("safety"),
        ..Default::default()
    };
    let mut out = TaskOutput::new(json!({
        "quadrature": quad_json(&profile),
        "residual_quadrature": {
            "abs_tol": opts.quad.abs_tol,
            "rel_tol": opts.quad.rel_tol,
            "max_panels": opts.quad.max_panels,
        },
    }));
    let report = ctx.core(match sol.system {
        System::Zeldovich => residual_zeldovich(&sol, &family, &opts),
        System::Pressureless => residual_pressureless(&sol, &family, &opts),
    })?;
    let mut table = CsvTable::new(
        "residuals.csv",
        &["phi_id", "equation"],
        &[
            "phi_id",
            "equation",
            "volume",
            "atom",
            "residual",
            "error_estimate",
            "tolerance",
            "pass",
        ],
    );
    for rec in &report.records {
        table.push_text(vec![
            rec.phi_id.to_string(),
            rec.equation.id().to_string(),
            num(rec.volume),
            num(rec.atom),
            num(rec.residual),
            num(rec.error_estimate),
            num(rec.tolerance),
            u8::from(rec.pass).to_string(),
        ]);
    }
    out.tables.push(table);
    out.metric("max_abs_residual", report.max_abs_residual());
    out.metric("max_tolerance", report.max_tolerance());
    out.checks.push(Check::at_most(
        "worst_residual_over_tolerance",
        report.worst_ratio(),
        1.0,
    ));
    Ok(out)
}

fn limit_sweep(ctx: &Context) -> Result<TaskOutput> {
    let sc = ctx.scenario;
    let w = sc.sweep.as_ref().expect("validated");
    let data = sc.riemann_data();
    let nu = w.nu.build().expect("validated");
    let reference = ctx.exact(data, sc.profile_with_sigma(Coefficient::constant(0.0)))?;
    let mut out = TaskOutput::new(json!({ "quadrature": quad_json(&reference.profile) }));

    let mut mus = w.mus.clone();
    mus.sort_by(|a, b| b.total_cmp(a));
    mus.push(0.0);
    let evaluated: Vec<Result<(f64, Vec<[f64; 5]>)>> = mus
        .par_iter()
        .map(|&mu| {
            let sol = ctx.exact(data, sc.profile_with_sigma(Coefficient::scaled(mu, nu.clone())))?;
            let mut gap = 0.0f64;
            let mut rows = Vec::new();
            for &t in &w.times {
                for &x in &w.probes {
                    let (a, b) = (ctx.core(sol.sample(x, t))?, ctx.core(reference.sample(x, t))?);
                    gap = gap.max((a.rho - b.rho).abs()).max((a.u - b.u).abs());
                    rows.push([mu, t, x, a.rho, a.u]);
                }
                if sol.case == WaveCase::DeltaShock {
                    for (f, g) in [
                        (sol.weight(t), reference.weight(t)),
                        (sol.shock_path(t), reference.shock_path(t)),
                        (sol.atom_velocity(t), reference.atom_velocity(t)),
                    ] {
                        gap = gap.max((ctx.core(f)? - ctx.core(g)?).abs());
                    }
                }
            }
            Ok((gap, rows))
        })
        .collect();
    let evaluated = evaluated.into_iter().collect::<Result<Vec<_>>>()?;

    let mut gaps = CsvTable::new("gaps.csv", &["mu"], &["mu", "gap", "gap_over_mu"]);
    let mut samples = CsvTable::new("samples.csv", &["mu", "t", "x"], &["mu", "t", "x", "rho", "u"]);
    for (&mu, (gap, rows)) in mus.iter().zip(&evaluated) {
        gaps.push(&[mu, *gap, if mu > 0.0 { gap / mu } else { 0.0 }]);
        for row in rows {
            samples.push(row);
        }
    }
    out.tables.push(gaps);
    out.tables.push(samples);

    let positive: Vec<(f64, f64)> = mus
        .iter()
        .zip(&evaluated)
        .filter(|(m, _)| **m > 0.0)
        .map(|(m, e)| (*m, e.0))
        .collect();
    let monotone = positive.windows(2).all(|p| p[1].1 < p[0].1 || p[0].1 == 0.0);
    let c = positive[0].1 / positive[0].0;
    let worst = positive
        .iter()
        .map(|&(m, g)| if c > 0.0 { g / (c * m) } else { 0.0 })
        .fold(0.0, f64::max);
    let zero_gap = evaluated.last().expect("mu = 0 row").0;
    out.metric("c_estimate", c);
    out.checks.push(Check::flag("gaps_decrease_with_mu", monotone));
    out.checks
        .push(Check::at_most("gap_over_linear_bound", worst, ctx.tol("linear_bound")));
    out.checks.push(Check::at_most("mu_zero_gap", zero_gap, 0.0));
    Ok(out)
}
