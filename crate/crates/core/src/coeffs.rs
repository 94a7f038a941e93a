//! Time-dependent flux coefficient `alpha(t)` and damping rate `sigma(t)`,
//! together with the cumulative integrals every closed-form solution uses:
//!
//! * `S(t) = ∫₀ᵗ σ`, `E(t) = exp(-S(t))`, `A(t) = ∫₀ᵗ α`,
//! * `B(t) = ∫₀ᵗ α E` (the similarity time), and
//! * `B*(t) = ∫₀ᵗ α E B`, which equals `B(t)²/2`.
//!
//! Presets with antiderivatives are evaluated in closed form; everything
//! else goes through adaptive quadrature split at declared breakpoints.
//! `E` is always derived from `S`, never integrated separately.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::quad::{integrate_with_breaks, QuadOptions};

/// Default absolute/relative quadrature tolerance for cumulative integrals.
pub const QUAD_TOL: f64 = 1e-10;

pub type CoefficientFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Piecewise-linear table, held constant outside its first and last node.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Table {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidParameter(
                "table needs matching, non-empty time and value lists",
            ));
        }
        if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("table entries must be finite"));
        }
        if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "table times must be non-negative and strictly increasing",
            ));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn value(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let (v0, v1) = (self.values[k], self.values[k + 1]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Exact integral over `[0, t]`.
    fn antiderivative(&self, t: f64) -> f64 {
        let n = self.times.len();
        let first = self.times[0];
        if t <= first {
            return self.values[0] * t;
        }
        let mut acc = self.values[0] * first;
        for k in 0..n - 1 {
            let (t0, t1) = (self.times[k], self.times[k + 1]);
            if t <= t0 {
                break;
            }
            let end = t.min(t1);
            let v_end = self.value(end);
            acc += 0.5 * (self.values[k] + v_end) * (end - t0);
        }
        if t > self.times[n - 1] {
            acc += self.values[n - 1] * (t - self.times[n - 1]);
        }
        acc
    }
}

/// A non-negative scalar function of time.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    /// `mu / (1 + t)^theta`: time-gradually-degenerate damping.
    PowerDecay {
        mu: f64,
        theta: f64,
    },
    Table(Table),
    /// `mu * base(t)`.
    Scaled {
        mu: f64,
        base: Arc<Coefficient>,
    },
    /// User callback; integrable singularities must be listed as breakpoints.
    Custom {
        f: CoefficientFn,
        breakpoints: Vec<f64>,
    },
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Coefficient::PowerDecay { mu, theta } => f
                .debug_struct("PowerDecay")
                .field("mu", mu)
                .field("theta", theta)
                .finish(),
            Coefficient::Table(t) => f.debug_tuple("Table").field(t).finish(),
            Coefficient::Scaled { mu, base } => f.debug_struct("Scaled").field("mu", mu).field("base", base).finish(),
            Coefficient::Custom { breakpoints, .. } => f
                .debug_struct("Custom")
                .field("breakpoints", breakpoints)
                .finish_non_exhaustive(),
        }
    }
}

impl Coefficient {
    pub fn constant(c: f64) -> Self {
        Coefficient::Constant(c)
    }

    pub fn power_decay(mu: f64, theta: f64) -> Self {
        Coefficient::PowerDecay { mu, theta }
    }

    pub fn scaled(mu: f64, base: Coefficient) -> Self {
        Coefficient::Scaled {
            mu,
            base: Arc::new(base),
        }
    }

    pub fn custom<F>(f: F, breakpoints: Vec<f64>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Coefficient::Custom {
            f: Arc::new(f),
            breakpoints,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::PowerDecay { mu, theta } => {
                if *mu == 0.0 {
                    0.0
                } else {
                    mu * libm::pow(1.0 + t, -theta)
                }
            }
            Coefficient::Table(table) => table.value(t),
            Coefficient::Scaled { mu, base } => {
                if *mu == 0.0 {
                    0.0
                } else {
                    mu * base.value(t)
                }
            }
            Coefficient::Custom { f, .. } => f(t),
        }
    }

    /// `∫₀ᵗ` in closed form when one exists.
    pub fn antiderivative(&self, t: f64) -> Option<f64> {
        match self {
            Coefficient::Constant(c) => Some(c * t),
            Coefficient::PowerDecay { mu, theta } => {
                if *mu == 0.0 {
                    Some(0.0)
                } else if *theta == 1.0 {
                    Some(mu * libm::log1p(t))
                } else {
                    let p = 1.0 - theta;
                    Some(mu * libm::expm1(p * libm::log1p(t)) / p)
                }
            }
            Coefficient::Table(table) => Some(table.antiderivative(t)),
            Coefficient::Scaled { mu, base } => {
                if *mu == 0.0 {
                    Some(0.0)
                } else {
                    base.antiderivative(t).map(|v| mu * v)
                }
            }
            Coefficient::Custom { .. } => None,
        }
    }

    /// True when the coefficient is zero for every `t` by construction.
    pub fn is_identically_zero(&self) -> bool {
        match self {
            Coefficient::Constant(c) => *c == 0.0,
            Coefficient::PowerDecay { mu, .. } => *mu == 0.0,
            Coefficient::Table(t) => t.values.iter().all(|&v| v == 0.0),
            Coefficient::Scaled { mu, base } => *mu == 0.0 || base.is_identically_zero(),
            Coefficient::Custom { .. } => false,
        }
    }

    fn as_constant(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(c) => Some(*c),
            Coefficient::Scaled { mu, base } => base.as_constant().map(|c| mu * c),
            _ => None,
        }
    }

    fn as_power_decay(&self) -> Option<(f64, f64)> {
        match self {
            Coefficient::PowerDecay { mu, theta } => Some((*mu, *theta)),
            Coefficient::Scaled { mu, base } => base.as_power_decay().map(|(m, th)| (mu * m, th)),
            _ => None,
        }
    }

    /// Breakpoints inside `(0, horizon)`.
    pub fn breakpoints(&self, horizon: f64, out: &mut Vec<f64>) {
        match self {
            Coefficient::Table(t) => out.extend(t.times.iter().copied().filter(|&s| s > 0.0 && s < horizon)),
            Coefficient::Scaled { base, .. } => base.breakpoints(horizon, out),
            Coefficient::Custom { breakpoints, .. } => {
                out.extend(breakpoints.iter().copied().filter(|&s| s > 0.0 && s < horizon))
            }
            _ => {}
        }
    }

    /// Checks the sign constraint wherever it can be decided without sampling.
    fn validate(&self, name: &'static str) -> Result<()> {
        let bad = match self {
            Coefficient::Constant(c) => !(c.is_finite() && *c >= 0.0),
            Coefficient::PowerDecay { mu, theta } => !(mu.is_finite() && theta.is_finite() && *mu >= 0.0),
            Coefficient::Table(t) => t.values.iter().any(|&v| v < 0.0),
            Coefficient::Scaled { mu, base } => {
                base.validate(name)?;
                !(mu.is_finite() && *mu >= 0.0)
            }
            Coefficient::Custom { .. } => false,
        };
        if bad {
            Err(Error::NegativeCoefficient { name, t: 0.0 })
        } else {
            Ok(())
        }
    }
}

/// All cumulative quantities at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralValues {
    pub t: f64,
    pub s: f64,
    pub e: f64,
    pub a: f64,
    pub b: f64,
    pub bstar: f64,
}

/// The coefficient pair `(alpha, sigma)`.
#[derive(Debug, Clone)]
pub struct CoefficientProfile {
    alpha: Coefficient,
    sigma: Coefficient,
    quad: QuadOptions,
}

impl CoefficientProfile {
    pub fn new(alpha: Coefficient, sigma: Coefficient) -> Result<Self> {
        alpha.validate("alpha")?;
        sigma.validate("sigma")?;
        Ok(Self {
            alpha,
            sigma,
            quad: QuadOptions::uniform(QUAD_TOL),
        })
    }

    /// `alpha ≡ a`, `sigma ≡ s`.
    pub fn constant(a: f64, s: f64) -> Result<Self> {
        Self::new(Coefficient::Constant(a), Coefficient::Constant(s))
    }

    pub fn with_quad(mut self, quad: QuadOptions) -> Self {
        self.quad = quad;
        self
    }

    pub fn quad_options(&self) -> QuadOptions {
        self.quad
    }

    pub fn alpha_coefficient(&self) -> &Coefficient {
        &self.alpha
    }

    pub fn sigma_coefficient(&self) -> &Coefficient {
        &self.sigma
    }

    pub fn alpha(&self, t: f64) -> f64 {
        self.alpha.value(t)
    }

    pub fn sigma(&self, t: f64) -> f64 {
        self.sigma.value(t)
    }

    fn breaks(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.alpha.breakpoints(t1, &mut out);
        self.sigma.breakpoints(t1, &mut out);
        out.retain(|&s| s > t0);
        out
    }

    fn check_time(t: f64) -> Result<()> {
        if t.is_finite() && t >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter("time must be finite and non-negative"))
        }
    }

    fn quad_err(e: Error) -> Error {
        match e {
            Error::NonIntegrable { .. } => e,
            Error::QuadratureFailure { value, error } => Error::NonIntegrable { value, error },
            other => other,
        }
    }

    /// `∫_{t0}^{t} σ` added to a known `S(t0)`.
    fn s_from(&self, t0: f64, s0: f64, t: f64) -> Result<f64> {
        if let Some(v) = self.sigma.antiderivative(t) {
            return Ok(v);
        }
        if t == t0 {
            return Ok(s0);
        }
        let mut negative = None;
        let r = integrate_with_breaks(
            |s| {
                let v = self.sigma.value(s);
                if v < 0.0 && negative.is_none() {
                    negative = Some(s);
                }
                v
            },
            t0,
            t,
            &self.breaks(t0, t),
            self.quad,
        )
        .map_err(Self::quad_err)?;
        if let Some(ts) = negative {
            return Err(Error::NegativeCoefficient { name: "sigma", t: ts });
        }
        Ok(s0 + r.value)
    }

    /// Closed form of `B(t)` for the presets that have one.
    fn b_closed(&self, t: f64) -> Option<f64> {
        if self.alpha.is_identically_zero() {
            return Some(0.0);
        }
        if self.sigma.is_identically_zero() {
            return self.alpha.antiderivative(t);
        }
        let c = self.alpha.as_constant()?;
        if let Some(s) = self.sigma.as_constant() {
            return Some(-c * libm::expm1(-s * t) / s);
        }
        if let Some((mu, theta)) = self.sigma.as_power_decay() {
            if theta == 1.0 {
                let l = libm::log1p(t);
                return Some(if mu == 1.0 {
                    c * l
                } else {
                    c * libm::expm1((1.0 - mu) * l) / (1.0 - mu)
                });
            }
        }
        None
    }

    /// `B(t)` given `S(t0)` and `B(t0)`.
    fn b_from(&self, t0: f64, s0: f64, b0: f64, t: f64) -> Result<f64> {
        if let Some(v) = self.b_closed(t) {
            return Ok(v);
        }
        if t == t0 {
            return Ok(b0);
        }
        let mut failure = None;
        let r = integrate_with_breaks(
            |s| match self.beta_from(t0, s0, s) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            t0,
            t,
            &self.breaks(t0, t),
            self.quad,
        )
        .map_err(Self::quad_err)?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(b0 + r.value)
    }

    fn beta_from(&self, t0: f64, s0: f64, s: f64) -> Result<f64> {
        let a = self.alpha.value(s);
        if a < 0.0 {
            return Err(Error::NegativeCoefficient { name: "alpha", t: s });
        }
        if a == 0.0 {
            return Ok(0.0);
        }
        Ok(a * libm::exp(-self.s_from(t0, s0, s)?))
    }

    /// `S(t) = ∫₀ᵗ σ(s) ds`.
    pub fn integrate_s(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        self.s_from(0.0, 0.0, t)
    }

    /// `E(t) = exp(-S(t))`.
    pub fn e(&self, t: f64) -> Result<f64> {
        Ok(libm::exp(-self.integrate_s(t)?))
    }

    /// `A(t) = ∫₀ᵗ α(s) ds`.
    pub fn integrate_a(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        if let Some(v) = self.alpha.antiderivative(t) {
            return Ok(v);
        }
        let mut negative = None;
        let r = integrate_with_breaks(
            |s| {
                let v = self.alpha.value(s);
                if v < 0.0 && negative.is_none() {
                    negative = Some(s);
                }
                v
            },
            0.0,
            t,
            &self.breaks(0.0, t),
            self.quad,
        )
        .map_err(Self::quad_err)?;
        if let Some(ts) = negative {
            return Err(Error::NegativeCoefficient { name: "alpha", t: ts });
        }
        Ok(r.value)
    }

    /// `B(t) = ∫₀ᵗ α(s) E(s) ds`.
    pub fn integrate_b(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        self.b_from(0.0, 0.0, 0.0, t)
    }

    /// `B*(t) = ∫₀ᵗ α(s) E(s) B(s) ds`, always by quadrature so that the
    /// identity `B* = B²/2` remains an independent check.
    pub fn integrate_bstar(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        if t == 0.0 || self.alpha.is_identically_zero() {
            return Ok(0.0);
        }
        self.bstar_panel(0.0, 0.0, 0.0, 0.0, t)
    }

    fn bstar_panel(&self, t0: f64, s0: f64, b0: f64, bstar0: f64, t1: f64) -> Result<f64> {
        let mut failure = None;
        let r = integrate_with_breaks(
            |s| {
                let v = self
                    .beta_from(t0, s0, s)
                    .and_then(|beta| Ok(beta * self.b_from(t0, s0, b0, s)?));
                match v {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            t0,
            t1,
            &self.breaks(t0, t1),
            self.quad,
        )
        .map_err(Self::quad_err)?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(bstar0 + r.value)
    }

    /// `β(t) = α(t) E(t)`.
    pub fn beta(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        self.beta_from(0.0, 0.0, t)
    }

    /// `β*(t) = α(t) E(t) B(t)`.
    pub fn beta_star(&self, t: f64) -> Result<f64> {
        Ok(self.beta(t)? * self.integrate_b(t)?)
    }

    /// `S, E, A, B` (and `B*` by quadrature) at one time.
    pub fn values(&self, t: f64) -> Result<IntegralValues> {
        let s = self.integrate_s(t)?;
        Ok(IntegralValues {
            t,
            s,
            e: libm::exp(-s),
            a: self.integrate_a(t)?,
            b: self.integrate_b(t)?,
            bstar: self.integrate_bstar(t)?,
        })
    }

    /// `S, E, B` only: what the closed-form solutions need.
    pub fn similarity(&self, t: f64) -> Result<(f64, f64)> {
        let e = self.e(t)?;
        let b = self.integrate_b(t)?;
        Ok((e, b))
    }
}

/// Cumulative integrals tabulated on `[0, horizon]` and interpolated with
/// cubic Hermite polynomials using the exact integrands as slopes.
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct CumulativeIntegrals {
    times: Vec<f64>,
    s: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    bstar: Vec<f64>,
    ds: Vec<f64>,
    da: Vec<f64>,
    db: Vec<f64>,
    dbstar: Vec<f64>,
}

impl CumulativeIntegrals {
    /// Tabulates with `panels` uniform panels plus every coefficient breakpoint.
    pub fn build(profile: &CoefficientProfile, horizon: f64, panels: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) || panels == 0 {
            return Err(Error::InvalidParameter(
                "cache horizon must be positive and panel count non-zero",
            ));
        }
        let mut times: Vec<f64> = (0..=panels).map(|k| horizon * k as f64 / panels as f64).collect();
        times.extend(profile.breaks(0.0, horizon));
        times.sort_by(f64::total_cmp);
        times.dedup();

        let n = times.len();
        let mut s = Vec::with_capacity(n);
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let mut bstar = Vec::with_capacity(n);
        s.push(0.0);
        a.push(0.0);
        b.push(0.0);
        bstar.push(0.0);
        for k in 0..n - 1 {
            let (t0, t1) = (times[k], times[k + 1]);
            let s1 = profile.s_from(t0, s[k], t1)?;
            let a1 = profile.integrate_a(t1)?;
            let b1 = profile.b_from(t0, s[k], b[k], t1)?;
            let bs1 = if profile.alpha.is_identically_zero() {
                0.0
            } else {
                profile.bstar_panel(t0, s[k], b[k], bstar[k], t1)?
            };
            s.push(s1);
            a.push(a1);
            b.push(b1);
            bstar.push(bs1);
        }
        let mut ds = Vec::with_capacity(n);
        let mut da = Vec::with_capacity(n);
        let mut db = Vec::with_capacity(n);
        let mut dbstar = Vec::with_capacity(n);
        for k in 0..n {
            let t = times[k];
            let al = profile.alpha(t);
            let beta = al * libm::exp(-s[k]);
            ds.push(profile.sigma(t));
            da.push(al);
            db.push(beta);
            dbstar.push(beta * b[k]);
        }
        Ok(Self {
            times,
            s,
            a,
            b,
            bstar,
            ds,
            da,
            db,
            dbstar,
        })
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.times
    }

    /// Interpolated values; `t` is clamped to `[0, horizon]`.
    pub fn at(&self, t: f64) -> IntegralValues {
        let t = t.clamp(0.0, self.horizon());
        let n = self.times.len();
        let k = (self.times.partition_point(|&s| s <= t).max(1) - 1).min(n - 2);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let h = t1 - t0;
        let u = (t - t0) / h;
        let herm = |v: &[f64], d: &[f64]| -> f64 {
            let (d0, d1) = (d[k], d[k + 1]);
            if !(d0.is_finite() && d1.is_finite()) {
                return v[k] + (v[k + 1] - v[k]) * u;
            }
            let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
            let h10 = u * (1.0 - u) * (1.0 - u);
            let h01 = u * u * (3.0 - 2.0 * u);
            let h11 = u * u * (u - 1.0);
            h00 * v[k] + h10 * h * d0 + h01 * v[k + 1] + h11 * h * d1
        };
        let s = herm(&self.s, &self.ds);
        IntegralValues {
            t,
            s,
            e: libm::exp(-s),
            a: herm(&self.a, &self.da),
            b: herm(&self.b, &self.db),
            bstar: herm(&self.bstar, &self.dbstar),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn s_examples() {
        let p = CoefficientProfile::constant(1.0, 1.0).unwrap();
        assert_eq!(p.integrate_s(2.0).unwrap(), 2.0);
        let p = CoefficientProfile::new(Coefficient::Constant(1.0), Coefficient::power_decay(3.0, 1.0)).unwrap();
        assert!(close(p.integrate_s(1.0).unwrap(), 3.0 * core::f64::consts::LN_2, 1e-15));
        let p = CoefficientProfile::constant(1.0, 0.0).unwrap();
        assert_eq!(p.integrate_s(7.5).unwrap(), 0.0);
    }

    #[test]
    fn b_examples() {
        for &sig in &[0.3, 1.0, 2.5] {
            let p = CoefficientProfile::constant(1.0, sig).unwrap();
            for &t in &[0.1, 1.0, 4.0] {
                let want = (1.0 - libm::exp(-sig * t)) / sig;
                assert!(close(p.integrate_b(t).unwrap(), want, 1e-14));
            }
        }
        let p = CoefficientProfile::new(Coefficient::Constant(1.0), Coefficient::power_decay(2.0, 1.0)).unwrap();
        assert!(close(p.integrate_b(1.0).unwrap(), 0.5, 1e-15));
        let p = CoefficientProfile::constant(0.0, 0.7).unwrap();
        assert_eq!(p.integrate_b(3.0).unwrap(), 0.0);
    }

    #[test]
    fn bstar_examples() {
        let p = CoefficientProfile::constant(1.0, 0.0).unwrap();
        assert!(close(p.integrate_bstar(2.0).unwrap(), 2.0, 1e-12));
        let p = CoefficientProfile::constant(1.0, 1.0).unwrap();
        for &t in &[0.5, 1.0, 3.0] {
            let b = 1.0 - libm::exp(-t);
            assert!(close(p.integrate_bstar(t).unwrap(), 0.5 * b * b, 1e-11));
        }
        assert_eq!(p.integrate_bstar(0.0).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        // Custom callbacks force the quadrature path for the same functions.
        let quad = CoefficientProfile::new(
            Coefficient::custom(|_| 1.0, vec![]),
            Coefficient::custom(|t| 2.0 / (1.0 + t), vec![]),
        )
        .unwrap();
        let closed = CoefficientProfile::new(Coefficient::Constant(1.0), Coefficient::power_decay(2.0, 1.0)).unwrap();
        for &t in &[0.25, 1.0, 3.0] {
            assert!(close(
                quad.integrate_s(t).unwrap(),
                closed.integrate_s(t).unwrap(),
                1e-10
            ));
            assert!(close(
                quad.integrate_b(t).unwrap(),
                closed.integrate_b(t).unwrap(),
                1e-10
            ));
        }
    }

    #[test]
    fn table_is_integrated_exactly() {
        let table = Table::new(vec![0.0, 1.0, 3.0], vec![1.0, 3.0, 0.0]).unwrap();
        let c = Coefficient::Table(table);
        assert!(close(c.antiderivative(1.0).unwrap(), 2.0, 1e-15));
        assert!(close(c.antiderivative(3.0).unwrap(), 5.0, 1e-15));
        // constant extension past the last node
        assert!(close(c.antiderivative(4.0).unwrap(), 5.0, 1e-15));
        assert!(close(c.antiderivative(2.0).unwrap(), 2.0 + 0.5 * (3.0 + 1.5), 1e-15));
    }

    #[test]
    fn negative_coefficients_rejected() {
        assert!(CoefficientProfile::constant(-1.0, 0.0).is_err());
        assert!(CoefficientProfile::constant(1.0, -0.1).is_err());
        let p = CoefficientProfile::new(Coefficient::custom(|t| 1.0 - t, vec![]), Coefficient::Constant(0.0)).unwrap();
        assert!(matches!(p.integrate_a(2.0), Err(Error::NegativeCoefficient { .. })));
    }

    #[test]
    fn singular_sigma_with_breakpoint() {
        // sigma(t) = |t - 1|^{-1/2}, integrable at t = 1.
        let p = CoefficientProfile::new(
            Coefficient::Constant(1.0),
            Coefficient::custom(|t: f64| 1.0 / libm::sqrt((t - 1.0).abs()), vec![1.0]),
        )
        .unwrap()
        .with_quad(QuadOptions::uniform(1e-6));
        // ∫₀² |t-1|^{-1/2} dt = 4
        assert!(close(p.integrate_s(2.0).unwrap(), 4.0, 1e-6));
    }

    #[test]
    fn cache_matches_direct_evaluation() {
        let p = CoefficientProfile::new(
            Coefficient::Table(Table::new(vec![0.0, 0.5, 2.0], vec![1.0, 2.0, 0.5]).unwrap()),
            Coefficient::power_decay(0.8, 0.5),
        )
        .unwrap();
        let cache = CumulativeIntegrals::build(&p, 2.0, 256).unwrap();
        for &t in &[0.0, 0.13, 0.5, 0.77, 1.9, 2.0] {
            let c = cache.at(t);
            assert!(close(c.s, p.integrate_s(t).unwrap(), 1e-9), "S at {t}");
            assert!(close(c.b, p.integrate_b(t).unwrap(), 1e-8), "B at {t}");
            assert!(
                close(c.bstar, 0.5 * c.b * c.b, 1e-8),
                "B* at {t}: {} vs {}",
                c.bstar,
                0.5 * c.b * c.b
            );
        }
    }
}
