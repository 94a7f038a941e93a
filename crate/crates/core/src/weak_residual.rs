//! Distributional residuals of candidate solutions against compactly
//! supported test functions.
//!
//! Each test function is a tensor product of polynomial bumps
//! `(1 - s²)⁴`. The volume pairing integrates in `t` adaptively and in `x`
//! with an 8-point Gauss rule on every constant or vacuum piece of the
//! regular part. On a constant piece the integrand is a polynomial of
//! degree at most 10 in `x`, on a vacuum ramp at most 9, so the inner rule
//! is exact and the only quadrature error left is the outer one. Atoms are
//! paired through [`pair_with_test_function`].

use alloc::vec::Vec;

use crate::coeffs::CoefficientProfile;
use crate::error::{Error, Result};
use crate::quad::{integrate_with_breaks, GaussRule, QuadOptions};
use crate::waves::{pair_with_test_function, MeasureValuedState, SegmentKind, System, WaveFanSolution};

/// Safety factor between the estimated quadrature error and the tolerance.
pub const SAFETY: f64 = 10.0;

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - s * s;
        let q2 = q * q;
        q2 * q2
    }
}

fn bump_slope(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - s * s;
        -8.0 * s * q * q * q
    }
}

/// `φ(x, t) = p((x - cx)/rx) p((t - ct)/rt)` with `p(s) = (1 - s²)⁴₊`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub cx: f64,
    pub rx: f64,
    pub ct: f64,
    pub rt: f64,
}

/// `(φ, φ_x, φ_t)` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub phi: f64,
    pub phi_x: f64,
    pub phi_t: f64,
}

impl Bump {
    pub fn jet(&self, x: f64, t: f64) -> Jet {
        let sx = (x - self.cx) / self.rx;
        let st = (t - self.ct) / self.rt;
        let (px, pt) = (bump(sx), bump(st));
        Jet {
            phi: px * pt,
            phi_x: bump_slope(sx) / self.rx * pt,
            phi_t: px * bump_slope(st) / self.rt,
        }
    }

    pub fn x_support(&self) -> (f64, f64) {
        (self.cx - self.rx, self.cx + self.rx)
    }

    pub fn t_support(&self) -> (f64, f64) {
        (self.ct - self.rt, self.ct + self.rt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionFamily {
    pub bumps: Vec<Bump>,
}

impl TestFunctionFamily {
    /// `nx × nt` bumps whose supports tile `[x0, x1] × [t0, t1]` with
    /// two-fold overlap: centres at `x0 + (i+1)Δ`, radius `Δ = (x1-x0)/(nx+1)`.
    pub fn grid(x0: f64, x1: f64, t0: f64, t1: f64, nx: usize, nt: usize) -> Result<Self> {
        if !(x1 > x0 && t1 > t0) || nx == 0 || nt == 0 {
            return Err(Error::InvalidParameter("test-function window must be non-empty"));
        }
        if !(t0 > 0.0) {
            return Err(Error::InvalidParameter("test-function supports must stay in t > 0"));
        }
        let dx = (x1 - x0) / (nx + 1) as f64;
        let dt = (t1 - t0) / (nt + 1) as f64;
        let mut bumps = Vec::with_capacity(nx * nt);
        for k in 0..nt {
            for i in 0..nx {
                bumps.push(Bump {
                    cx: x0 + (i + 1) as f64 * dx,
                    rx: dx,
                    ct: t0 + (k + 1) as f64 * dt,
                    rt: dt,
                });
            }
        }
        Ok(Self { bumps })
    }

    /// The default 5 × 5 family.
    pub fn default_grid(x0: f64, x1: f64, t0: f64, t1: f64) -> Result<Self> {
        Self::grid(x0, x1, t0, t1, 5, 5)
    }

    pub fn len(&self) -> usize {
        self.bumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bumps.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    /// `⟨ρ, φ_t⟩ + ⟨αρu, φ_x⟩`.
    Mass,
    /// Zeldovich velocity equation, absolutely continuous part only.
    Velocity,
    /// Pressureless momentum balance with the damping moved to the left.
    Momentum,
}

impl Equation {
    pub fn id(&self) -> &'static str {
        match self {
            Equation::Mass => "mass",
            Equation::Velocity => "velocity",
            Equation::Momentum => "momentum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRecord {
    pub phi_id: usize,
    pub equation: Equation,
    /// Pairing with the regular part.
    pub volume: f64,
    /// Pairing with the atoms.
    pub atom: f64,
    pub residual: f64,
    /// Quadrature error estimate plus a rounding floor.
    pub error_estimate: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakResidualReport {
    pub system: System,
    pub records: Vec<ResidualRecord>,
}

impl WeakResidualReport {
    pub fn max_abs_residual(&self) -> f64 {
        self.records.iter().map(|r| r.residual.abs()).fold(0.0, f64::max)
    }

    pub fn max_tolerance(&self) -> f64 {
        self.records.iter().map(|r| r.tolerance).fold(0.0, f64::max)
    }

    /// Largest `|residual| / tolerance`.
    pub fn worst_ratio(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.residual.abs() / r.tolerance)
            .fold(0.0, f64::max)
    }

    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }
}

/// Integration settings for the residual pairings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualOptions {
    pub quad: QuadOptions,
    pub safety: f64,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self {
            quad: QuadOptions {
                abs_tol: 1e-12,
                rel_tol: 1e-10,
                max_panels: 4096,
            },
            safety: SAFETY,
        }
    }
}

/// Regular-part integrand for one equation.
fn regular_term(eq: Equation, rho: f64, u: f64, alpha: f64, sigma: f64, j: &Jet) -> f64 {
    match eq {
        Equation::Mass => rho * (j.phi_t + alpha * u * j.phi_x),
        Equation::Velocity => u * j.phi_t + 0.5 * alpha * u * u * j.phi_x - sigma * u * j.phi,
        Equation::Momentum => rho * (u * j.phi_t + alpha * u * u * j.phi_x - sigma * u * j.phi),
    }
}

/// Atom integrand per unit weight.
fn atom_term(eq: Equation, ud: f64, alpha: f64, sigma: f64, j: &Jet) -> f64 {
    match eq {
        Equation::Mass => j.phi_t + alpha * ud * j.phi_x,
        Equation::Velocity => 0.0,
        Equation::Momentum => ud * j.phi_t + alpha * ud * ud * j.phi_x - sigma * ud * j.phi,
    }
}

struct Pairing<'a> {
    sol: &'a WaveFanSolution,
    profile: &'a CoefficientProfile,
    rule: GaussRule,
    t_breaks: Vec<f64>,
    quad: QuadOptions,
}

impl Pairing<'_> {
    fn state(&self, t: f64) -> Result<(MeasureValuedState, f64)> {
        let (e, b) = self.profile.similarity(t)?;
        Ok((self.sol.state_from(t, e, b), e))
    }

    /// `∫ term dx` over the x-support at fixed `t`, and the same of `|term|`.
    fn inner(&self, eq: Equation, bump: &Bump, t: f64) -> Result<(f64, f64)> {
        let (state, _) = self.state(t)?;
        let (alpha, sigma) = (self.profile.alpha(t), self.profile.sigma(t));
        let (xa, xb) = bump.x_support();
        let mut sum = 0.0;
        let mut abs = 0.0;
        for seg in &state.segments {
            let lo = seg.left.max(xa);
            let hi = seg.right.min(xb);
            if !(hi > lo) {
                continue;
            }
            for (x, w) in self.rule.points(lo, hi) {
                let (rho, u) = match seg.kind {
                    SegmentKind::Constant { rho, u } => (rho, u),
                    SegmentKind::Vacuum { slope } => (0.0, slope * x),
                };
                let v = regular_term(eq, rho, u, alpha, sigma, &bump.jet(x, t));
                sum += w * v;
                abs += w * v.abs();
            }
        }
        Ok((sum, abs))
    }

    fn volume(&self, eq: Equation, bump: &Bump) -> Result<(f64, f64, f64)> {
        let (ta, tb) = bump.t_support();
        let breaks: Vec<f64> = self.t_breaks.iter().copied().filter(|&t| t > ta && t < tb).collect();
        let mut failure = None;
        let res = integrate_with_breaks(
            |t| match self.inner(eq, bump, t) {
                Ok((v, _)) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            ta,
            tb,
            &breaks,
            self.quad,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let res = res.map_err(quad_failure)?;
        let abs = self.fixed_t_rule(ta, tb, |t| self.inner(eq, bump, t).map(|p| p.1))?;
        Ok((res.value, res.error, abs))
    }

    fn atom(&self, eq: Equation, bump: &Bump) -> Result<(f64, f64, f64)> {
        if eq == Equation::Velocity || self.sol.delta.is_none() {
            return Ok((0.0, 0.0, 0.0));
        }
        let (ta, tb) = bump.t_support();
        let curve = self.sol.delta_curve(ta, tb)?;
        let mut extra = self.t_breaks.clone();
        extra.extend(curve.breakpoints.iter().copied());
        extra.retain(|&t| t > ta && t < tb);
        let curve = curve.with_breakpoints(extra);
        // A failed E(t) shows up as a NaN and is reported below.
        let integrand = |x: f64, t: f64| -> f64 {
            let jet = bump.jet(x, t);
            let e = self.profile.e(t).unwrap_or(f64::NAN);
            let ud = self.sol.delta.map_or(0.0, |d| d.u_delta0) * e;
            atom_term(eq, ud, self.profile.alpha(t), self.profile.sigma(t), &jet)
        };
        let res = pair_with_test_function(&curve, integrand, self.quad);
        let res = res?;
        let abs = self.fixed_t_rule(ta, tb, |t| {
            let p = curve.point(t);
            Ok((p.w * integrand(p.x, t)).abs())
        })?;
        Ok((res.value, res.error, abs))
    }

    /// Fixed 8 panels × 8 points, used only for magnitude estimates.
    fn fixed_t_rule<F: FnMut(f64) -> Result<f64>>(&self, a: f64, b: f64, mut f: F) -> Result<f64> {
        let panels = 8;
        let h = (b - a) / panels as f64;
        let mut sum = 0.0;
        for k in 0..panels {
            let lo = a + k as f64 * h;
            for (t, w) in self.rule.points(lo, lo + h) {
                sum += w * f(t)?;
            }
        }
        Ok(sum)
    }
}

fn quad_failure(e: Error) -> Error {
    match e {
        Error::NonIntegrable { value, error } => Error::QuadratureFailure { value, error },
        other => other,
    }
}

/// Both residuals of one bump.
pub fn bump_residuals(
    sol: &WaveFanSolution,
    phi_id: usize,
    bump: &Bump,
    opts: &ResidualOptions,
) -> Result<[ResidualRecord; 2]> {
    let second = match sol.system {
        System::Zeldovich => Equation::Velocity,
        System::Pressureless => Equation::Momentum,
    };
    let (ta, tb) = bump.t_support();
    if !(ta > 0.0) {
        return Err(Error::InvalidParameter("test-function supports must stay in t > 0"));
    }
    let mut t_breaks = Vec::new();
    sol.profile.alpha_coefficient().breakpoints(tb, &mut t_breaks);
    sol.profile.sigma_coefficient().breakpoints(tb, &mut t_breaks);
    let pairing = Pairing {
        sol,
        profile: &sol.profile,
        rule: GaussRule::new(8),
        t_breaks,
        quad: opts.quad,
    };
    let mut out = [Equation::Mass, second].map(|eq| ResidualRecord {
        phi_id,
        equation: eq,
        volume: 0.0,
        atom: 0.0,
        residual: 0.0,
        error_estimate: 0.0,
        tolerance: 0.0,
        pass: false,
    });
    for rec in out.iter_mut() {
        let (vol, vol_err, vol_abs) = pairing.volume(rec.equation, bump)?;
        let (atom, atom_err, atom_abs) = pairing.atom(rec.equation, bump)?;
        let residual = vol + atom;
        if !residual.is_finite() {
            return Err(Error::QuadratureFailure {
                value: residual,
                error: f64::INFINITY,
            });
        }
        let estimate = vol_err + atom_err + 64.0 * f64::EPSILON * (vol_abs + atom_abs);
        let tolerance = opts.safety * estimate;
        *rec = ResidualRecord {
            volume: vol,
            atom,
            residual,
            error_estimate: estimate,
            tolerance,
            pass: residual.abs() <= tolerance,
            ..*rec
        };
    }
    Ok(out)
}

fn residual_report(
    sol: &WaveFanSolution,
    family: &TestFunctionFamily,
    opts: &ResidualOptions,
) -> Result<WeakResidualReport> {
    let mut records = Vec::with_capacity(2 * family.len());
    for (id, bump) in family.bumps.iter().enumerate() {
        records.extend(bump_residuals(sol, id, bump, opts)?);
    }
    Ok(WeakResidualReport {
        system: sol.system,
        records,
    })
}

/// Mass and velocity residuals of a Zeldovich candidate.
pub fn residual_zeldovich(
    sol: &WaveFanSolution,
    family: &TestFunctionFamily,
    opts: &ResidualOptions,
) -> Result<WeakResidualReport> {
    if sol.system != System::Zeldovich {
        return Err(Error::InvalidParameter("expected a Zeldovich solution"));
    }
    residual_report(sol, family, opts)
}

/// Mass and momentum residuals of a pressureless candidate.
pub fn residual_pressureless(
    sol: &WaveFanSolution,
    family: &TestFunctionFamily,
    opts: &ResidualOptions,
) -> Result<WeakResidualReport> {
    if sol.system != System::Pressureless {
        return Err(Error::InvalidParameter("expected a pressureless solution"));
    }
    residual_report(sol, family, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_derivatives_match_differences() {
        let b = Bump {
            cx: 0.3,
            rx: 0.7,
            ct: 1.0,
            rt: 0.4,
        };
        let (x, t, h) = (0.5, 1.1, 1e-6);
        let j = b.jet(x, t);
        let fx = (b.jet(x + h, t).phi - b.jet(x - h, t).phi) / (2.0 * h);
        let ft = (b.jet(x, t + h).phi - b.jet(x, t - h).phi) / (2.0 * h);
        assert!((j.phi_x - fx).abs() < 1e-8);
        assert!((j.phi_t - ft).abs() < 1e-8);
        assert!(b.jet(1.0, 1.0).phi.abs() < 1e-30);
        assert!(b.jet(0.3, 1.4).phi_t.abs() < 1e-30);
    }

    #[test]
    fn grid_supports_tile_the_window() {
        let fam = TestFunctionFamily::default_grid(-2.0, 4.0, 0.2, 1.4).unwrap();
        assert_eq!(fam.len(), 25);
        for b in &fam.bumps {
            let (xa, xb) = b.x_support();
            let (ta, tb) = b.t_support();
            assert!(xa >= -2.0 - 1e-12 && xb <= 4.0 + 1e-12);
            assert!(ta >= 0.2 - 1e-12 && tb <= 1.4 + 1e-12);
        }
        assert!(TestFunctionFamily::default_grid(-1.0, 1.0, 0.0, 1.0).is_err());
    }
}
