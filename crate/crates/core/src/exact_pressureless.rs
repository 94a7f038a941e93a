//! Exact Riemann solutions of the damped pressureless system
//! `ρ_t + α(ρu)_x = 0`, `(ρu)_t + α(ρu²)_x = -σρu`.
//!
//! The delta-shock velocity solves the Rankine–Hugoniot quadratic
//! `(ρ_- - ρ_+)v² - 2(ρ_-u_- - ρ_+u_+)v + (ρ_-u_-² - ρ_+u_+²) = 0`;
//! only one root lies strictly between `u_+` and `u_-`.

use crate::coeffs::CoefficientProfile;
use crate::error::{Error, Result};
use crate::waves::{check_bracketing, classify, EntropyVerdict, RiemannData, System, WaveCase, WaveFanSolution};

pub use crate::waves::DeltaTriple;

/// The root of the quadratic discarded by the entropy condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RejectedRoot {
    pub u_delta: f64,
    /// Whether `u_+ < u_delta < u_-` holds (it never does).
    pub entropic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaRoots {
    pub triple: DeltaTriple,
    /// `None` when `ρ_- = ρ_+` and the quadratic degenerates to a line.
    pub rejected: Option<RejectedRoot>,
}

/// Relative density gap below which the equal-density formulas are used.
pub const EQUAL_DENSITY_TOL: f64 = 1e-12;

pub fn solve_u_delta(data: &RiemannData) -> Result<DeltaRoots> {
    let (rm, rp, um, up) = (data.rho_minus(), data.rho_plus(), data.u_minus(), data.u_plus());
    if um <= up {
        return Err(Error::NotDeltaCase);
    }
    if (rm - rp).abs() <= EQUAL_DENSITY_TOL * rm.max(rp) {
        let v = 0.5 * (um + up);
        return Ok(DeltaRoots {
            triple: DeltaTriple {
                varsigma: v,
                w0: rm * (um - up),
                u_delta0: v,
            },
            rejected: None,
        });
    }
    let (sm, sp) = (libm::sqrt(rm), libm::sqrt(rp));
    let v = (sm * um + sp * up) / (sm + sp);
    let r = (sm * um - sp * up) / (sm - sp);
    Ok(DeltaRoots {
        triple: DeltaTriple {
            varsigma: v,
            w0: sm * sp * (um - up),
            u_delta0: v,
        },
        rejected: Some(RejectedRoot {
            u_delta: r,
            entropic: up < r && r < um,
        }),
    })
}

pub fn solve_pressureless(data: RiemannData, profile: CoefficientProfile) -> Result<WaveFanSolution> {
    let delta = match classify(&data) {
        WaveCase::DeltaShock => Some(solve_u_delta(&data)?.triple),
        _ => None,
    };
    WaveFanSolution::new(System::Pressureless, data, profile, delta)
}

/// A pressureless solution with caller-supplied delta constants, e.g. the
/// rejected root, for testing the entropy check.
pub fn pressureless_with_triple(
    data: RiemannData,
    profile: CoefficientProfile,
    triple: DeltaTriple,
) -> Result<WaveFanSolution> {
    WaveFanSolution::new(System::Pressureless, data, profile, Some(triple))
}

/// Residuals `-η[ρ] + [ρu]` and `-η[ρu] + [ρu²]` of a contact moving at `η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactVerdict {
    pub mass_residual: f64,
    pub momentum_residual: f64,
    pub pass: bool,
}

pub const CONTACT_TOL: f64 = 1e-12;

/// Jumps are taken as left minus right.
pub fn rankine_hugoniot_contact_check(data: &RiemannData, eta: f64) -> ContactVerdict {
    let (rm, rp, um, up) = (data.rho_minus(), data.rho_plus(), data.u_minus(), data.u_plus());
    let mass_residual = -eta * (rm - rp) + (rm * um - rp * up);
    let momentum_residual = -eta * (rm * um - rp * up) + (rm * um * um - rp * up * up);
    ContactVerdict {
        mass_residual,
        momentum_residual,
        pass: mass_residual.abs() <= CONTACT_TOL && momentum_residual.abs() <= CONTACT_TOL,
    }
}

/// Checks `α u_+ E < dx/dt < α u_- E` on `t_grid`, relaxed where `α E = 0`.
pub fn check_entropy_pressureless(sol: &WaveFanSolution, t_grid: &[f64]) -> Result<EntropyVerdict> {
    let c = sol.delta.ok_or(Error::NotDeltaCase)?.varsigma;
    check_bracketing(&sol.data, &sol.profile, c, t_grid)
}
