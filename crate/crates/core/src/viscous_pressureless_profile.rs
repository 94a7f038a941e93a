//! Self-similar viscous profiles of the pressureless system.
//!
//! In `ξ = x/B(t)` the viscous system becomes
//! `-ξρ' + (ρû)' = 0`, `-ξ(ρû)' + (ρû²)' = εû''` with `û(±∞) = u_±`.
//! Writing `F = ρ(û - ξ)` the first equation reads `F' = -ρ`, so
//! `(ln |F|)' = -1/(û - ξ)`, and the second reduces to `εû'' = F û'`.
//!
//! Both are solved exactly for a piecewise-linear `û`: on a cell where
//! `d = û - ξ` is linear with slope `q`, `F ∝ |d|^{-1/q}` and
//! `∫F = (F d)|_a^b / (q - 1)`. `F` is swept in from both ends and vanishes
//! at the branch point `ξ_ς` where `û = ξ`. The velocity then follows from
//! `û' ∝ exp(Φ/ε)`, `Φ' = F`. A fixed-point loop couples the two, with
//! Aitken extrapolation of the branch-point sequence applied as a
//! horizontal shift of the iterate.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::waves::{DeltaTriple, RiemannData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    /// Stop when `max |û_new - û| ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Minimum grid points inside the 10%–90% transition of `û`.
    pub min_layer_points: usize,
    pub aitken: bool,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
            min_layer_points: 10,
            aitken: true,
        }
    }
}

/// A converged self-similar profile on a uniform grid of `[-L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilarProfile {
    pub epsilon: f64,
    pub data: RiemannData,
    pub xi: Vec<f64>,
    pub u_hat: Vec<f64>,
    /// `F/(û - ξ)`; infinite at a node that coincides with `ξ_ς`.
    pub rho: Vec<f64>,
    /// `F = ρ(û - ξ)`.
    pub flux: Vec<f64>,
    /// Branch point where `û(ξ_ς) = ξ_ς`.
    pub xi_varsigma: f64,
    pub iterations: usize,
    pub residual: f64,
    /// `max |û_new - û|` per iteration.
    pub history: Vec<f64>,
}

struct Flux {
    f: Vec<f64>,
    root: f64,
    /// Last node with `û > ξ`.
    left: usize,
}

fn grid(l: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| -l + 2.0 * l * k as f64 / (n - 1) as f64).collect()
}

fn flux(data: &RiemannData, xi: &[f64], u: &[f64]) -> Result<Flux> {
    let n = xi.len();
    let d: Vec<f64> = u.iter().zip(xi).map(|(a, b)| a - b).collect();
    if !(d[0] > 0.0 && d[n - 1] < 0.0) {
        return Err(Error::InvalidParameter(
            "velocity profile does not cross the line u = xi",
        ));
    }
    let left = d.iter().rposition(|&v| v > 0.0).unwrap_or(0);
    let right = d.iter().position(|&v| v < 0.0).unwrap_or(n - 1);
    let root = if d[left + 1] == 0.0 {
        xi[left + 1]
    } else {
        xi[left] + d[left] / (d[left] - d[left + 1]) * (xi[left + 1] - xi[left])
    };

    let step = |k: usize| {
        let h = xi[k + 1] - xi[k];
        (u[k + 1] - u[k]) / h - 1.0
    };
    let mut lnf = alloc::vec![f64::NEG_INFINITY; n];
    lnf[0] = libm::log(data.rho_minus() * d[0]);
    for k in 0..left {
        let q = step(k);
        lnf[k + 1] = if q.abs() < 1e-14 {
            lnf[k] - (xi[k + 1] - xi[k]) / d[k]
        } else {
            lnf[k] - libm::log(d[k + 1] / d[k]) / q
        };
    }
    lnf[n - 1] = libm::log(-data.rho_plus() * d[n - 1]);
    for k in (right..n - 1).rev() {
        let q = step(k);
        lnf[k] = if q.abs() < 1e-14 {
            lnf[k + 1] - (xi[k + 1] - xi[k]) / d[k]
        } else {
            lnf[k + 1] - libm::log(d[k] / d[k + 1]) / q
        };
    }
    let f = (0..n)
        .map(|k| {
            if k <= left {
                libm::exp(lnf[k])
            } else if k >= right {
                -libm::exp(lnf[k])
            } else {
                0.0
            }
        })
        .collect();
    Ok(Flux { f, root, left })
}

/// `∫_a^b exp(φ)` for `φ` linear between `pa` and `pb`.
fn exp_cell(h: f64, pa: f64, pb: f64) -> f64 {
    let dp = pb - pa;
    if dp.abs() < 1e-12 {
        h * libm::exp(0.5 * (pa + pb))
    } else {
        h * libm::exp(pa) * libm::expm1(dp) / dp
    }
}

/// New `û` from `εû'' = F û'` with `û(-L) = u_-`, `û(L) = u_+`.
fn velocity(data: &RiemannData, eps: f64, xi: &[f64], u: &[f64], fl: &Flux) -> Vec<f64> {
    let n = xi.len();
    let mut phi = alloc::vec![0.0; n];
    for k in 0..n - 1 {
        let h = xi[k + 1] - xi[k];
        let q = (u[k + 1] - u[k]) / h - 1.0;
        let (fa, fb) = (fl.f[k], fl.f[k + 1]);
        let (da, db) = (u[k] - xi[k], u[k + 1] - xi[k + 1]);
        phi[k + 1] = phi[k]
            + if (q - 1.0).abs() > 1e-12 {
                (fb * db - fa * da) / (q - 1.0)
            } else {
                0.5 * h * (fa + fb)
            };
    }
    let i = fl.left;
    let split = fl.root > xi[i] && fl.root < xi[i + 1];
    let phi_root = {
        let h = xi[i + 1] - xi[i];
        let q = (u[i + 1] - u[i]) / h - 1.0;
        phi[i] + fl.f[i] * (u[i] - xi[i]) / (1.0 - q)
    };
    let top = phi.iter().copied().fold(phi_root, f64::max);
    let s = |p: f64| (p - top) / eps;

    let mut cum = alloc::vec![0.0; n];
    for k in 0..n - 1 {
        let inc = if k == i && split {
            exp_cell(fl.root - xi[k], s(phi[k]), s(phi_root))
                + exp_cell(xi[k + 1] - fl.root, s(phi_root), s(phi[k + 1]))
        } else {
            exp_cell(xi[k + 1] - xi[k], s(phi[k]), s(phi[k + 1]))
        };
        cum[k + 1] = cum[k] + inc;
    }
    let total = cum[n - 1];
    let (um, up) = (data.u_minus(), data.u_plus());
    cum.iter().map(|c| um + (up - um) * (c / total)).collect()
}

/// `û(ξ - shift)` by linear interpolation with constant extension.
fn shifted(xi: &[f64], u: &[f64], shift: f64) -> Vec<f64> {
    xi.iter().map(|&x| interp(xi, u, x - shift)).collect()
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x) - 1;
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + t * (ys[k + 1] - ys[k])
}

pub fn solve_profile(data: &RiemannData, epsilon: f64, l: f64, grid_n: usize) -> Result<SelfSimilarProfile> {
    solve_profile_with(data, epsilon, l, grid_n, ProfileOptions::default())
}

pub fn solve_profile_with(
    data: &RiemannData,
    epsilon: f64,
    l: f64,
    grid_n: usize,
    opts: ProfileOptions,
) -> Result<SelfSimilarProfile> {
    let (um, up) = (data.u_minus(), data.u_plus());
    if um <= up {
        return Err(Error::NotDeltaCase);
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive"));
    }
    if !(l.is_finite() && l > um.abs().max(up.abs()) + 5.0) {
        return Err(Error::InvalidParameter("half-width L must exceed max|u_±| + 5"));
    }
    if grid_n < 8 {
        return Err(Error::InvalidParameter("grid needs at least 8 points"));
    }
    let xi = grid(l, grid_n);
    let mid = 0.5 * (um + up);
    let half = 0.5 * (um - up);
    let mut u: Vec<f64> = xi
        .iter()
        .map(|&x| mid - half * libm::tanh((x - mid) / epsilon))
        .collect();

    let mut roots: Vec<f64> = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    for it in 0..opts.max_iter {
        let fl = flux(data, &xi, &u)?;
        let next = velocity(data, epsilon, &xi, &u, &fl);
        let residual = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if !residual.is_finite() {
            return Err(Error::NoConvergence {
                iterations: it + 1,
                residual,
            });
        }
        roots.push(fl.root);
        history.push(residual);
        u = next;
        if residual <= opts.tol {
            converged = true;
            break;
        }
        if it == 0 {
            check_layer(&xi, &u, data, opts.min_layer_points)?;
        }
        if opts.aitken && roots.len() >= 3 && it % 3 == 2 {
            let r = &roots[roots.len() - 3..];
            let (d1, d2) = (r[1] - r[0], r[2] - r[1]);
            if d1 != 0.0 {
                let ratio = d2 / d1;
                if ratio > 0.0 && ratio < 0.999 {
                    let shift = d2 * ratio / (1.0 - ratio);
                    if shift.abs() <= 50.0 * d2.abs() {
                        u = shifted(&xi, &u, shift);
                    }
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: history.len(),
            residual: history.last().copied().unwrap_or(f64::INFINITY),
        });
    }
    check_layer(&xi, &u, data, opts.min_layer_points)?;
    let fl = flux(data, &xi, &u)?;
    let rho = xi
        .iter()
        .zip(&u)
        .zip(&fl.f)
        .map(|((x, v), f)| {
            let d = v - x;
            if d == 0.0 {
                f64::INFINITY
            } else {
                f / d
            }
        })
        .collect();
    Ok(SelfSimilarProfile {
        epsilon,
        data: *data,
        xi,
        u_hat: u,
        rho,
        flux: fl.f,
        xi_varsigma: fl.root,
        iterations: history.len(),
        residual: *history.last().unwrap_or(&0.0),
        history,
    })
}

fn layer_bounds(xi: &[f64], u: &[f64], data: &RiemannData) -> (f64, f64, usize) {
    let (um, up) = (data.u_minus(), data.u_plus());
    let hi = um - 0.1 * (um - up);
    let lo = up + 0.1 * (um - up);
    let crossing = |level: f64| -> f64 {
        // û is nonincreasing
        let k = u.iter().position(|&v| v < level).unwrap_or(u.len() - 1).max(1);
        let (a, b) = (u[k - 1], u[k]);
        if a == b {
            xi[k]
        } else {
            xi[k - 1] + (a - level) / (a - b) * (xi[k] - xi[k - 1])
        }
    };
    let count = u.iter().filter(|&&v| v < hi && v > lo).count();
    (crossing(hi), crossing(lo), count)
}

fn check_layer(xi: &[f64], u: &[f64], data: &RiemannData, min_points: usize) -> Result<()> {
    let (_, _, count) = layer_bounds(xi, u, data);
    if count < min_points {
        return Err(Error::GridTooCoarse { layer_points: count });
    }
    Ok(())
}

impl SelfSimilarProfile {
    /// Distance between the points where `û` has covered 10% and 90% of
    /// the jump. For `u_+ = -u_-` these are the `0.9u_-` and `0.9u_+` levels.
    pub fn layer_width(&self) -> f64 {
        let (a, b, _) = layer_bounds(&self.xi, &self.u_hat, &self.data);
        b - a
    }

    pub fn layer_points(&self) -> usize {
        layer_bounds(&self.xi, &self.u_hat, &self.data).2
    }

    pub fn flux_at(&self, x: f64) -> f64 {
        interp(&self.xi, &self.flux, x)
    }

    pub fn u_at(&self, x: f64) -> f64 {
        interp(&self.xi, &self.u_hat, x)
    }

    /// `∫ρ` over `ξ_ς ± h` minus the background, i.e.
    /// `F(ξ_ς - h) - F(ξ_ς + h) - (ρ_- + ρ_+)h`.
    pub fn weight_estimate(&self, h: f64) -> f64 {
        let c = self.xi_varsigma;
        self.flux_at(c - h) - self.flux_at(c + h) - (self.data.rho_minus() + self.data.rho_plus()) * h
    }

    /// Window used by [`extract_delta_limit`]: ten layer widths, at most a
    /// quarter of the domain.
    pub fn default_window(&self) -> f64 {
        let l = self.xi[self.xi.len() - 1];
        (10.0 * self.layer_width()).min(0.25 * l)
    }

    pub fn min_slope(&self) -> f64 {
        self.u_hat
            .windows(2)
            .zip(self.xi.windows(2))
            .map(|(u, x)| (u[1] - u[0]) / (x[1] - x[0]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_slope(&self) -> f64 {
        self.u_hat
            .windows(2)
            .zip(self.xi.windows(2))
            .map(|(u, x)| (u[1] - u[0]) / (x[1] - x[0]))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mass-equation weak residuals `∫ρφ - ∫ρ(û - ξ)φ'` against hat
    /// functions spanning `2m` cells, skipping hats within `exclude` of
    /// `ξ_ς`. Here `ρ` comes from the integral formulas
    /// `ρ₁ = ρ_- exp(-∫ û'/(û - s))` and `ρ₂ = ρ_+ exp(∫ û'/(û - s))` by
    /// trapezoidal quadrature, independently of the flux sweep.
    pub fn mass_weak_residuals(&self, m: usize, exclude: f64) -> Vec<(f64, f64)> {
        let n = self.xi.len();
        let h = self.xi[1] - self.xi[0];
        let du: Vec<f64> = (0..n)
            .map(|k| {
                if k == 0 {
                    (self.u_hat[1] - self.u_hat[0]) / h
                } else if k == n - 1 {
                    (self.u_hat[n - 1] - self.u_hat[n - 2]) / h
                } else {
                    (self.u_hat[k + 1] - self.u_hat[k - 1]) / (2.0 * h)
                }
            })
            .collect();
        let g: Vec<f64> = (0..n).map(|k| du[k] / (self.u_hat[k] - self.xi[k])).collect();
        let c = self.xi_varsigma;
        let mut rho = alloc::vec![f64::NAN; n];
        let mut acc = 0.0;
        rho[0] = self.data.rho_minus();
        for k in 1..n {
            if self.xi[k] >= c {
                break;
            }
            acc += 0.5 * h * (g[k - 1] + g[k]);
            rho[k] = self.data.rho_minus() * libm::exp(-acc);
        }
        acc = 0.0;
        rho[n - 1] = self.data.rho_plus();
        for k in (0..n - 1).rev() {
            if self.xi[k] <= c {
                break;
            }
            acc += 0.5 * h * (g[k] + g[k + 1]);
            rho[k] = self.data.rho_plus() * libm::exp(acc);
        }
        let mut out = Vec::new();
        let mut centre = m;
        while centre + m < n {
            let (a, b) = (self.xi[centre - m], self.xi[centre + m]);
            if b < c - exclude || a > c + exclude {
                let width = m as f64 * h;
                let mut r = 0.0;
                for (k, &xk) in self.xi.iter().enumerate().take(centre + m + 1).skip(centre - m) {
                    let s = (xk - self.xi[centre]) / width;
                    let phi = 1.0 - s.abs();
                    // one-sided slopes cancel at the centre node
                    let dphi = if k < centre {
                        1.0 / width
                    } else if k > centre {
                        -1.0 / width
                    } else {
                        0.0
                    };
                    let wgt = if k == centre - m || k == centre + m { 0.5 * h } else { h };
                    let f = rho[k] * (self.u_hat[k] - self.xi[k]);
                    r += wgt * (rho[k] * phi - f * dphi);
                }
                out.push((self.xi[centre], r));
            }
            centre += m;
        }
        out
    }
}

/// One profile's contribution to the limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitSample {
    pub epsilon: f64,
    pub xi_varsigma: f64,
    pub w0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaLimit {
    pub triple: DeltaTriple,
    pub varsigma_error: f64,
    pub w0_error: f64,
    pub samples: Vec<LimitSample>,
}

/// Values at `ε = 0` of the interpolating polynomials through the last two
/// and last three points; returns `(second order, |second - first|)`.
fn richardson(eps: &[f64], v: &[f64]) -> (f64, f64) {
    let n = eps.len();
    let (e0, e1, e2) = (eps[n - 3], eps[n - 2], eps[n - 1]);
    let (v0, v1, v2) = (v[n - 3], v[n - 2], v[n - 1]);
    let p12 = (e1 * v2 - e2 * v1) / (e1 - e2);
    let p01 = (e0 * v1 - e1 * v0) / (e0 - e1);
    let p012 = (e0 * p12 - e2 * p01) / (e0 - e2);
    (p012, (p012 - p12).abs())
}

/// Extrapolates `ξ_ς^ε → ς` and the captured weight to `ε = 0`.
pub fn extract_delta_limit(profiles: &[SelfSimilarProfile]) -> Result<DeltaLimit> {
    if profiles.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: profiles.len(),
        });
    }
    if profiles.windows(2).any(|w| !(w[1].epsilon < w[0].epsilon)) {
        return Err(Error::InvalidParameter(
            "profiles must have strictly decreasing epsilon",
        ));
    }
    let samples: Vec<LimitSample> = profiles
        .iter()
        .map(|p| LimitSample {
            epsilon: p.epsilon,
            xi_varsigma: p.xi_varsigma,
            w0: p.weight_estimate(p.default_window()),
        })
        .collect();
    let eps: Vec<f64> = samples.iter().map(|s| s.epsilon).collect();
    let xs: Vec<f64> = samples.iter().map(|s| s.xi_varsigma).collect();
    let ws: Vec<f64> = samples.iter().map(|s| s.w0).collect();
    let (varsigma, varsigma_error) = richardson(&eps, &xs);
    let (w0, w0_error) = richardson(&eps, &ws);
    Ok(DeltaLimit {
        triple: DeltaTriple {
            varsigma,
            w0,
            u_delta0: varsigma,
        },
        varsigma_error,
        w0_error,
        samples,
    })
}
