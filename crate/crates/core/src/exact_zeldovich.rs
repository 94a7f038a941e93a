//! Exact Riemann solutions of the Zeldovich-type system
//! `ρ_t + α(ρu)_x = 0`, `u_t + α(u²/2)_x = -σu`.
//!
//! The delta shock travels with the mean velocity `(u_- + u_+)/2` and
//! gathers mass at the rate `(ρ_- + ρ_+)(u_- - u_+)/2` per unit of `B`.

use crate::coeffs::CoefficientProfile;
use crate::error::Result;
use crate::waves::{
    check_bracketing, classify, DeltaTriple, EntropyVerdict, RiemannData, Sample, System, WaveCase, WaveFanSolution,
};

/// Delta-shock constants of the Zeldovich system.
pub fn zeldovich_triple(data: &RiemannData) -> DeltaTriple {
    let c = 0.5 * (data.u_minus() + data.u_plus());
    DeltaTriple {
        varsigma: c,
        w0: 0.5 * (data.rho_minus() + data.rho_plus()) * (data.u_minus() - data.u_plus()),
        u_delta0: c,
    }
}

pub fn solve_zeldovich(data: RiemannData, profile: CoefficientProfile) -> Result<WaveFanSolution> {
    let delta = (classify(&data) == WaveCase::DeltaShock).then(|| zeldovich_triple(&data));
    WaveFanSolution::new(System::Zeldovich, data, profile, delta)
}

pub fn sample_zeldovich(sol: &WaveFanSolution, x: f64, t: f64) -> Result<Sample> {
    sol.sample(x, t)
}

/// Checks `u_+ α E ≤ dx/dt ≤ u_- α E` on `t_grid`, strictly where `α E > 0`.
pub fn check_entropy_zeldovich(sol: &WaveFanSolution, t_grid: &[f64]) -> Result<EntropyVerdict> {
    let c = sol.delta.ok_or(crate::Error::NotDeltaCase)?.varsigma;
    check_bracketing(&sol.data, &sol.profile, c, t_grid)
}
