//! Finite-volume time stepper for the two viscous systems on a truncated
//! domain, independent of the closed forms it is used to check.
//!
//! Both systems are advanced in the damping-free variables
//! `û = u·e^{S(t)}`, in which the damping disappears and the convective
//! speed picks up the factor `β = αE`. Far-field states are then constant
//! in time, and a spatially uniform state is reproduced to rounding.
//!
//! * Zeldovich: method of lines with midpoint RK2, explicit in everything.
//! * Pressureless: explicit donor-cell convection of `(ρ, ρû)` followed by a
//!   backward-Euler solve for the `ε β_* û_xx` term. The implicit half keeps
//!   the scheme usable when `ρ` approaches vacuum, where an explicit step
//!   would need `Δt ∝ ρ`.
//!
//! Coefficients are evaluated at step midpoints.

use alloc::vec;
use alloc::vec::Vec;

use crate::coeffs::{CoefficientProfile, CumulativeIntegrals};
use crate::error::{Error, Result};
use crate::viscous_zeldovich::ViscousField;
use crate::waves::{classify, RiemannData, WaveCase};

/// Density below which a cell counts as vacuum.
pub const VACUUM_FLOOR: f64 = 1e-12;

/// Uniform cell-centred grid on `[-R, R]` over `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub cells: usize,
    pub horizon: f64,
    /// Safety factor applied to both the diffusive and convective limits.
    pub safety: f64,
}

impl GridSpec {
    pub fn new(half_width: f64, cells: usize, horizon: f64, safety: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidParameter("domain half-width must be positive"));
        }
        if cells < 4 {
            return Err(Error::InvalidParameter("grid needs at least 4 cells"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter("time horizon must be positive"));
        }
        if !(safety > 0.0 && safety < 1.0) {
            return Err(Error::InvalidParameter("safety factor must lie in (0, 1)"));
        }
        Ok(Self {
            half_width,
            cells,
            horizon,
            safety,
        })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.cells as f64
    }

    pub fn cell_centres(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.cells)
            .map(|j| -self.half_width + (j as f64 + 0.5) * dx)
            .collect()
    }

    /// Same domain and horizon with `factor` times as many cells.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            cells: self.cells * factor,
            ..*self
        }
    }
}

/// Convective flux for the Zeldovich stepper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvectiveFlux {
    /// Donor cell for `ρu`, Godunov for `u²/2`. First order.
    #[default]
    Upwind,
    /// Arithmetic mean of the neighbouring fluxes. Second order, and stable
    /// here only while the cell Péclet number stays moderate.
    Central,
}

impl ConvectiveFlux {
    pub fn name(&self) -> &'static str {
        match self {
            ConvectiveFlux::Upwind => "upwind",
            ConvectiveFlux::Central => "central",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepperOptions {
    pub flux: ConvectiveFlux,
    /// Snapshot times in `(0, T]`. `T` is always included.
    pub output_times: Vec<f64>,
    /// Fixed step. Rejected with `StabilityViolation` above the limit.
    pub dt: Option<f64>,
    /// Allowed drift of the boundary cells from the far-field states.
    pub boundary_tol: f64,
    /// Half-width of the mass window around `argmax ρ`.
    pub window: f64,
    /// Panels of the coefficient cache.
    pub cache_panels: usize,
    /// Reject domains where `|u_±|B(T) + 10√(4εB(T)) ≥ R` before stepping.
    pub check_reach: bool,
}

impl Default for StepperOptions {
    fn default() -> Self {
        Self {
            flux: ConvectiveFlux::Upwind,
            output_times: Vec::new(),
            dt: None,
            boundary_tol: 1e-6,
            window: 0.5,
            cache_panels: 1024,
            check_reach: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub rho: Vec<f64>,
    /// Physical velocity `u = û E(t)`.
    pub u: Vec<f64>,
}

/// Per-step mass bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassRecord {
    pub t: f64,
    /// `Σ ρ_j Δx`.
    pub total: f64,
    /// Time-integrated inflow through both boundary faces.
    pub boundary_inflow: f64,
    /// Cell holding the largest density.
    pub peak_x: f64,
    pub peak_rho: f64,
    /// Mass in `peak_x ± window` minus the background `(ρ_- + ρ_+)·window`.
    pub window_excess: f64,
}

impl MassRecord {
    /// `total - initial - inflow`: zero up to rounding for a conservative scheme.
    pub fn conservation_defect(&self, initial: f64) -> f64 {
        self.total - initial - self.boundary_inflow
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumFlag {
    pub t: f64,
    pub min_rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldHistory {
    pub grid: GridSpec,
    pub epsilon: f64,
    pub dt: f64,
    pub steps: usize,
    pub x: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub initial_mass: f64,
    pub mass: Vec<MassRecord>,
    /// First time the density fell below [`VACUUM_FLOOR`] in a delta case.
    pub vacuum: Option<VacuumFlag>,
    /// Smallest density seen over the run.
    pub min_rho: f64,
}

impl FieldHistory {
    pub fn snapshot_at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-12 * t.abs().max(1.0))
    }

    pub fn max_conservation_defect(&self) -> f64 {
        self.mass
            .iter()
            .map(|m| m.conservation_defect(self.initial_mass).abs())
            .fold(0.0, f64::max)
    }
}

/// Error of one run against a reference, with the scheme that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord {
    pub scheme: &'static str,
    pub cells: usize,
    pub dx: f64,
    pub dt: f64,
    pub linf_rho: f64,
    pub linf_u: f64,
    pub l1_rho: f64,
    pub l1_u: f64,
}

impl ConvergenceRecord {
    pub fn linf(&self) -> f64 {
        self.linf_rho.max(self.linf_u)
    }
}

/// `log2(e_coarse / e_fine)` for consecutive records of a halving study.
pub fn observed_orders(records: &[ConvergenceRecord]) -> Vec<f64> {
    records
        .windows(2)
        .map(|w| libm::log2(w[0].linf() / w[1].linf()))
        .collect()
}

#[derive(Clone, Copy)]
enum Model {
    Zeldovich,
    Pressureless,
}

struct Setup {
    cache: CumulativeIntegrals,
    dt: f64,
    steps_hint: usize,
    outputs: Vec<f64>,
}

fn prepare(
    model: Model,
    data: &RiemannData,
    profile: &CoefficientProfile,
    eps: f64,
    grid: &GridSpec,
    opts: &StepperOptions,
) -> Result<Setup> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive"));
    }
    let t_end = grid.horizon;
    let cache = CumulativeIntegrals::build(profile, t_end, opts.cache_panels.max(16))?;
    let b_end = cache.at(t_end).b;
    let umax = data.u_minus().abs().max(data.u_plus().abs());
    let reach = umax * b_end + 10.0 * libm::sqrt(4.0 * eps * b_end);
    if opts.check_reach && reach >= grid.half_width {
        return Err(Error::InvalidParameter(
            "domain half-width too small for the far field to stay undisturbed",
        ));
    }

    // Suprema over [0, T] by dense sampling of the cached integrands.
    let samples = 4096;
    let mut sup_beta: f64 = 0.0;
    let mut sup_diff: f64 = 0.0;
    let mut probe = |t: f64| {
        let v = cache.at(t);
        let beta = (profile.alpha(t) * v.e).abs();
        sup_beta = sup_beta.max(beta);
        let d = match model {
            Model::Zeldovich => beta,
            Model::Pressureless => beta * v.b,
        };
        sup_diff = sup_diff.max(d);
    };
    for k in 0..=samples {
        probe(t_end * k as f64 / samples as f64);
    }
    for &t in cache.nodes() {
        probe(t);
    }

    let dx = grid.dx();
    // Diffusive and convective rates add: the midpoint rule is stable for
    // real eigenvalues down to -2, and donor-cell positivity asks for the
    // same budget. The bound implies the pure diffusion limit.
    let rate = 2.0 * eps * sup_diff / (dx * dx) + 2.0 * sup_beta * umax / dx;
    let limit = if rate > 0.0 { grid.safety / rate } else { t_end }.min(t_end);
    let dt = match opts.dt {
        Some(dt) if !(dt > 0.0 && dt.is_finite()) => {
            return Err(Error::InvalidParameter("fixed time step must be positive"));
        }
        Some(dt) if dt > limit => return Err(Error::StabilityViolation { dt, limit }),
        Some(dt) => dt,
        None => limit,
    };

    let mut outputs: Vec<f64> = opts
        .output_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t <= t_end)
        .collect();
    if opts.output_times.iter().any(|&t| !(t > 0.0 && t <= t_end)) {
        return Err(Error::InvalidParameter("output times must lie in (0, T]"));
    }
    outputs.push(t_end);
    outputs.sort_by(f64::total_cmp);
    outputs.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));

    Ok(Setup {
        cache,
        dt,
        steps_hint: libm::ceil(t_end / dt) as usize,
        outputs,
    })
}

fn initial_state(data: &RiemannData, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let rho = x
        .iter()
        .map(|&x| if x < 0.0 { data.rho_minus() } else { data.rho_plus() })
        .collect();
    let u = x
        .iter()
        .map(|&x| if x < 0.0 { data.u_minus() } else { data.u_plus() })
        .collect();
    (rho, u)
}

/// Godunov flux for `u²/2`.
fn burgers_godunov(ul: f64, ur: f64) -> f64 {
    if ul <= ur {
        if ul > 0.0 {
            0.5 * ul * ul
        } else if ur < 0.0 {
            0.5 * ur * ur
        } else {
            0.0
        }
    } else if ul + ur > 0.0 {
        0.5 * ul * ul
    } else {
        0.5 * ur * ur
    }
}

/// Donor-cell flux of `q` carried by the interface velocity `a`.
#[inline]
fn donor(a: f64, ql: f64, qr: f64) -> f64 {
    if a >= 0.0 {
        a * ql
    } else {
        a * qr
    }
}

struct Tracker<'a> {
    data: &'a RiemannData,
    x: &'a [f64],
    dx: f64,
    window: f64,
    tol: f64,
    track_vacuum: bool,
    vacuum: Option<VacuumFlag>,
    min_rho: f64,
    mass: Vec<MassRecord>,
}

impl Tracker<'_> {
    fn record(&mut self, t: f64, rho: &[f64], inflow: f64) {
        let mut total = 0.0;
        let mut imax = 0;
        let mut min_rho = f64::INFINITY;
        for (j, &r) in rho.iter().enumerate() {
            total += r * self.dx;
            if r > rho[imax] {
                imax = j;
            }
            min_rho = min_rho.min(r);
        }
        self.min_rho = self.min_rho.min(min_rho);
        if self.track_vacuum && self.vacuum.is_none() && min_rho < VACUUM_FLOOR {
            self.vacuum = Some(VacuumFlag { t, min_rho });
        }
        let xc = self.x[imax];
        let lo = xc - self.window;
        let hi = xc + self.window;
        // Partial-cell overlap keeps the window mass continuous in xc.
        let mut inside = 0.0;
        for (j, &r) in rho.iter().enumerate() {
            let a = (self.x[j] - 0.5 * self.dx).max(lo);
            let b = (self.x[j] + 0.5 * self.dx).min(hi);
            if b > a {
                inside += r * (b - a);
            }
        }
        let background = (self.data.rho_minus() + self.data.rho_plus()) * self.window;
        self.mass.push(MassRecord {
            t,
            total,
            boundary_inflow: inflow,
            peak_x: xc,
            peak_rho: rho[imax],
            window_excess: inside - background,
        });
    }

    fn check_boundaries(&self, rho: &[f64], uh: &[f64]) -> Result<()> {
        let n = rho.len();
        let drift = (rho[0] - self.data.rho_minus())
            .abs()
            .max((rho[n - 1] - self.data.rho_plus()).abs())
            .max((uh[0] - self.data.u_minus()).abs())
            .max((uh[n - 1] - self.data.u_plus()).abs());
        if drift > self.tol || !drift.is_finite() {
            return Err(Error::BoundaryContamination { drift });
        }
        Ok(())
    }
}

fn physical_snapshot(t: f64, rho: &[f64], uh: &[f64], profile: &CoefficientProfile) -> Result<Snapshot> {
    let e = profile.e(t)?;
    Ok(Snapshot {
        t,
        rho: rho.to_vec(),
        u: uh.iter().map(|&v| v * e).collect(),
    })
}

/// Right-hand side of the Zeldovich semi-discretisation in `(ρ, û)`.
/// Returns the rate of change of total mass due to boundary faces.
#[allow(clippy::too_many_arguments)]
fn zeldovich_rhs(
    data: &RiemannData,
    flux: ConvectiveFlux,
    beta: f64,
    diff: f64,
    dx: f64,
    rho: &[f64],
    uh: &[f64],
    drho: &mut [f64],
    du: &mut [f64],
) -> f64 {
    let n = rho.len();
    let rho_at = |j: isize| -> f64 {
        if j < 0 {
            data.rho_minus()
        } else if j as usize >= n {
            data.rho_plus()
        } else {
            rho[j as usize]
        }
    };
    let u_at = |j: isize| -> f64 {
        if j < 0 {
            data.u_minus()
        } else if j as usize >= n {
            data.u_plus()
        } else {
            uh[j as usize]
        }
    };
    // Face j sits between cells j-1 and j, for j = 0..=n.
    let face = |j: usize| -> (f64, f64) {
        let (l, r) = (j as isize - 1, j as isize);
        let (rl, rr, ul, ur) = (rho_at(l), rho_at(r), u_at(l), u_at(r));
        let (fr, fu) = match flux {
            ConvectiveFlux::Upwind => (donor(0.5 * (ul + ur), rl, rr), burgers_godunov(ul, ur)),
            ConvectiveFlux::Central => (0.5 * (rl * ul + rr * ur), 0.25 * (ul * ul + ur * ur)),
        };
        let fr = beta * fr - diff * (rr - rl) / dx;
        let fu = beta * fu - diff * (ur - ul) / dx;
        (fr, fu)
    };
    let (mut left_r, mut left_u) = face(0);
    let inflow = left_r;
    for j in 0..n {
        let (right_r, right_u) = face(j + 1);
        drho[j] = -(right_r - left_r) / dx;
        du[j] = -(right_u - left_u) / dx;
        left_r = right_r;
        left_u = right_u;
    }
    inflow - left_r
}

/// Evolves the viscous Zeldovich system from Riemann data.
pub fn step_zeldovich_viscous(
    data: RiemannData,
    profile: &CoefficientProfile,
    eps: f64,
    grid: GridSpec,
    opts: &StepperOptions,
) -> Result<FieldHistory> {
    let setup = prepare(Model::Zeldovich, &data, profile, eps, &grid, opts)?;
    let x = grid.cell_centres();
    let dx = grid.dx();
    let n = grid.cells;
    let (mut rho, mut uh) = initial_state(&data, &x);
    let mut tracker = Tracker {
        data: &data,
        x: &x,
        dx,
        window: opts.window,
        tol: opts.boundary_tol,
        track_vacuum: classify(&data) == WaveCase::DeltaShock,
        vacuum: None,
        min_rho: f64::INFINITY,
        mass: Vec::with_capacity(setup.steps_hint + 1),
    };
    tracker.record(0.0, &rho, 0.0);
    let initial_mass = tracker.mass[0].total;

    let coeffs = |t: f64| {
        let v = setup.cache.at(t);
        let beta = profile.alpha(t) * v.e;
        (beta, eps * beta)
    };

    let mut k1r = vec![0.0; n];
    let mut k1u = vec![0.0; n];
    let mut mid_r = vec![0.0; n];
    let mut mid_u = vec![0.0; n];
    let mut snapshots = Vec::with_capacity(setup.outputs.len());
    let mut inflow = 0.0;
    let mut t = 0.0;
    let mut steps = 0;
    for &target in &setup.outputs {
        while t < target {
            let h = setup.dt.min(target - t);
            let h = if target - t - h < 1e-12 * setup.dt {
                target - t
            } else {
                h
            };
            let (b0, d0) = coeffs(t);
            zeldovich_rhs(&data, opts.flux, b0, d0, dx, &rho, &uh, &mut k1r, &mut k1u);
            for j in 0..n {
                mid_r[j] = rho[j] + 0.5 * h * k1r[j];
                mid_u[j] = uh[j] + 0.5 * h * k1u[j];
            }
            let (bm, dm) = coeffs(t + 0.5 * h);
            let rate = zeldovich_rhs(&data, opts.flux, bm, dm, dx, &mid_r, &mid_u, &mut k1r, &mut k1u);
            for j in 0..n {
                rho[j] += h * k1r[j];
                uh[j] += h * k1u[j];
            }
            inflow += h * rate;
            t = if target - t - h == 0.0 { target } else { t + h };
            steps += 1;
            tracker.record(t, &rho, inflow);
            tracker.check_boundaries(&rho, &uh)?;
        }
        snapshots.push(physical_snapshot(target, &rho, &uh, profile)?);
    }

    Ok(FieldHistory {
        grid,
        epsilon: eps,
        dt: setup.dt,
        steps,
        x: x.clone(),
        snapshots,
        initial_mass,
        vacuum: tracker.vacuum,
        min_rho: tracker.min_rho,
        mass: tracker.mass,
    })
}

/// Solves `(diag_j + 2λ) v_j - λ (v_{j-1} + v_{j+1}) = rhs_j` with Dirichlet
/// ghosts folded into `rhs`. Strictly diagonally dominant for `diag ≥ 0`, `λ > 0`.
fn thomas(diag: &[f64], lambda: f64, rhs: &mut [f64], scratch: &mut [f64]) {
    let n = diag.len();
    let off = -lambda;
    let mut denom = diag[0] + 2.0 * lambda;
    scratch[0] = off / denom;
    rhs[0] /= denom;
    for j in 1..n {
        denom = diag[j] + 2.0 * lambda - off * scratch[j - 1];
        scratch[j] = off / denom;
        rhs[j] = (rhs[j] - off * rhs[j - 1]) / denom;
    }
    for j in (0..n - 1).rev() {
        rhs[j] -= scratch[j] * rhs[j + 1];
    }
}

/// Evolves the viscous pressureless system from Riemann data.
pub fn step_pressureless_viscous(
    data: RiemannData,
    profile: &CoefficientProfile,
    eps: f64,
    grid: GridSpec,
    opts: &StepperOptions,
) -> Result<FieldHistory> {
    let setup = prepare(Model::Pressureless, &data, profile, eps, &grid, opts)?;
    let x = grid.cell_centres();
    let dx = grid.dx();
    let n = grid.cells;
    let (mut rho, mut uh) = initial_state(&data, &x);
    let mut tracker = Tracker {
        data: &data,
        x: &x,
        dx,
        window: opts.window,
        tol: opts.boundary_tol,
        track_vacuum: classify(&data) == WaveCase::DeltaShock,
        vacuum: None,
        min_rho: f64::INFINITY,
        mass: Vec::with_capacity(setup.steps_hint + 1),
    };
    tracker.record(0.0, &rho, 0.0);
    let initial_mass = tracker.mass[0].total;

    let (rl, rr, ul, ur) = (data.rho_minus(), data.rho_plus(), data.u_minus(), data.u_plus());
    let mut fr = vec![0.0; n + 1];
    let mut fm = vec![0.0; n + 1];
    let mut mom = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut snapshots = Vec::with_capacity(setup.outputs.len());
    let mut inflow = 0.0;
    let mut t = 0.0;
    let mut steps = 0;
    for &target in &setup.outputs {
        while t < target {
            let h = setup.dt.min(target - t);
            let h = if target - t - h < 1e-12 * setup.dt {
                target - t
            } else {
                h
            };
            let v = setup.cache.at(t + 0.5 * h);
            let beta = profile.alpha(t + 0.5 * h) * v.e;
            let beta_star = beta * v.b;

            for f in 0..=n {
                let (rhol, uhl) = if f == 0 { (rl, ul) } else { (rho[f - 1], uh[f - 1]) };
                let (rhor, uhr) = if f == n { (rr, ur) } else { (rho[f], uh[f]) };
                let a = beta * 0.5 * (uhl + uhr);
                fr[f] = donor(a, rhol, rhor);
                fm[f] = donor(a, rhol * uhl, rhor * uhr);
            }
            for j in 0..n {
                let m = rho[j] * uh[j] - h * (fm[j + 1] - fm[j]) / dx;
                rho[j] -= h * (fr[j + 1] - fr[j]) / dx;
                mom[j] = m;
            }
            inflow += h * (fr[0] - fr[n]);

            let lambda = h * eps * beta_star / (dx * dx);
            if lambda > 0.0 {
                mom[0] += lambda * ul;
                mom[n - 1] += lambda * ur;
                thomas(&rho, lambda, &mut mom, &mut scratch);
                uh.copy_from_slice(&mom);
            } else {
                for j in 0..n {
                    // Without viscosity, vacuum cells keep their previous velocity.
                    if rho[j] > VACUUM_FLOOR {
                        uh[j] = mom[j] / rho[j];
                    }
                }
            }
            t = if target - t - h == 0.0 { target } else { t + h };
            steps += 1;
            tracker.record(t, &rho, inflow);
            tracker.check_boundaries(&rho, &uh)?;
        }
        snapshots.push(physical_snapshot(target, &rho, &uh, profile)?);
    }

    Ok(FieldHistory {
        grid,
        epsilon: eps,
        dt: setup.dt,
        steps,
        x: x.clone(),
        snapshots,
        initial_mass,
        vacuum: tracker.vacuum,
        min_rho: tracker.min_rho,
        mass: tracker.mass,
    })
}

/// Errors of a Zeldovich run against the closed-form viscous solution over
/// `|x| ≤ x_max` at every snapshot time `≥ t_min`.
pub fn zeldovich_error(
    history: &FieldHistory,
    field: &ViscousField,
    x_max: f64,
    t_min: f64,
    scheme: &'static str,
) -> Result<ConvergenceRecord> {
    let dx = history.grid.dx();
    let mut rec = ConvergenceRecord {
        scheme,
        cells: history.grid.cells,
        dx,
        dt: history.dt,
        linf_rho: 0.0,
        linf_u: 0.0,
        l1_rho: 0.0,
        l1_u: 0.0,
    };
    let mut count = 0usize;
    for snap in history.snapshots.iter().filter(|s| s.t >= t_min) {
        let slice = field.slice(snap.t)?;
        for (j, &x) in history.x.iter().enumerate() {
            if x.abs() > x_max {
                continue;
            }
            let er = (snap.rho[j] - slice.density(x)).abs();
            let eu = (snap.u[j] - slice.velocity(x)).abs();
            rec.linf_rho = rec.linf_rho.max(er);
            rec.linf_u = rec.linf_u.max(eu);
            rec.l1_rho += er * dx;
            rec.l1_u += eu * dx;
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    rec.l1_rho /= count as f64;
    rec.l1_u /= count as f64;
    Ok(rec)
}

/// Runs the Zeldovich stepper on `grid` and `levels - 1` successive halvings
/// of `Δx`, returning one error record per level.
#[allow(clippy::too_many_arguments)]
pub fn zeldovich_refinement_study(
    data: RiemannData,
    profile: &CoefficientProfile,
    eps: f64,
    grid: GridSpec,
    opts: &StepperOptions,
    levels: usize,
    x_max: f64,
    t_min: f64,
) -> Result<Vec<ConvergenceRecord>> {
    let field = ViscousField::new(eps, data, profile.clone())?;
    let mut out = Vec::with_capacity(levels);
    for level in 0..levels {
        let g = grid.refined(1 << level);
        let hist = step_zeldovich_viscous(data, profile, eps, g, opts)?;
        out.push(zeldovich_error(&hist, &field, x_max, t_min, opts.flux.name())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> StepperOptions {
        StepperOptions {
            output_times: vec![0.25, 0.5],
            ..Default::default()
        }
    }

    #[test]
    fn uniform_state_is_exact() {
        let data = RiemannData::new(2.0, 2.0, 0.7, 0.7).unwrap();
        let profile = CoefficientProfile::constant(1.0, 0.8).unwrap();
        let grid = GridSpec::new(6.0, 96, 0.5, 0.9).unwrap();
        for pressureless in [false, true] {
            let hist = if pressureless {
                step_pressureless_viscous(data, &profile, 0.1, grid, &opts()).unwrap()
            } else {
                step_zeldovich_viscous(data, &profile, 0.1, grid, &opts()).unwrap()
            };
            for snap in &hist.snapshots {
                let e = libm::exp(-0.8 * snap.t);
                for j in 0..grid.cells {
                    assert!((snap.rho[j] - 2.0).abs() < 1e-14);
                    assert!((snap.u[j] - 0.7 * e).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn fixed_step_above_limit_is_rejected() {
        let data = RiemannData::new(1.0, 1.0, 1.0, -1.0).unwrap();
        let profile = CoefficientProfile::constant(1.0, 0.0).unwrap();
        let grid = GridSpec::new(6.0, 100, 0.5, 0.9).unwrap();
        let o = StepperOptions {
            dt: Some(0.1),
            ..opts()
        };
        assert!(matches!(
            step_zeldovich_viscous(data, &profile, 0.1, grid, &o),
            Err(Error::StabilityViolation { .. })
        ));
    }

    #[test]
    fn small_domain_is_rejected() {
        let data = RiemannData::new(1.0, 1.0, 1.0, -1.0).unwrap();
        let profile = CoefficientProfile::constant(1.0, 0.0).unwrap();
        let grid = GridSpec::new(1.0, 100, 1.0, 0.9).unwrap();
        assert!(step_zeldovich_viscous(data, &profile, 0.1, grid, &opts()).is_err());
    }

    #[test]
    fn thomas_solves_small_system() {
        let diag = [1.0, 2.0, 0.5];
        let lambda = 0.3;
        let want = [0.4, -1.0, 2.0];
        let mut rhs = [0.0; 3];
        for j in 0..3 {
            let l = if j > 0 { want[j - 1] } else { 0.0 };
            let r = if j < 2 { want[j + 1] } else { 0.0 };
            rhs[j] = (diag[j] + 2.0 * lambda) * want[j] - lambda * (l + r);
        }
        let mut s = [0.0; 3];
        thomas(&diag, lambda, &mut rhs, &mut s);
        for j in 0..3 {
            assert!((rhs[j] - want[j]).abs() < 1e-14);
        }
    }
}
