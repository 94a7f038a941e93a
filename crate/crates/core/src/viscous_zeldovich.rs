//! Closed-form solution of the viscous Zeldovich system
//! `ρ_t + α(ρu)_x = εβρ_xx`, `u_t + α(u²/2)_x + σu = εβu_xx`
//! with Riemann initial data, obtained through a Hopf–Cole transform.
//!
//! With `B_ε = 4εB(t)` and `x_± = u_± B(t)` the heat-kernel integrals are
//! `b_± = ½ exp(-x²/B_ε) erfcx(z_±)` where `z_+ = (x_+ - x)/√B_ε` and
//! `z_- = (x - x_-)/√B_ε`. The Gaussian factor is common to every term of
//! `u^ε` and of the potential `W^ε` (whose x-derivative is `ρ^ε`), so it
//! cancels. The remaining `g_± = ½ erfcx(z_±)` are handled in log-space,
//! shifted by their maximum.

use crate::coeffs::CoefficientProfile;
use crate::error::{Error, Result};
use crate::quad::{integrate_with_breaks, QuadOptions};
use crate::special::{erfcx, ln_erfcx};
use crate::waves::{classify, RiemannData, WaveCase};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const SQRT_PI: f64 = 1.772_453_850_905_516;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// `b_± = exp(ln_scaled + gaussian_exponent)`, kept factored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledB {
    /// `ln(½ erfcx(z_±))`.
    pub ln_scaled: f64,
    /// `-x²/B_ε`, shared by `b_+` and `b_-`.
    pub gaussian_exponent: f64,
}

impl ScaledB {
    pub fn value(&self) -> f64 {
        libm::exp(self.ln_scaled + self.gaussian_exponent)
    }
}

/// Optimally truncated asymptotic series for `Q_±`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QSeries {
    pub value: f64,
    /// Number of terms summed, i.e. the index of the smallest term.
    pub terms_used: usize,
    pub stop_magnitude: f64,
    /// `±(√π/2) erfcx(z_±)`, the function the series expands.
    pub exact: f64,
}

/// Viscous Zeldovich solution for one `ε`.
#[derive(Debug, Clone)]
pub struct ViscousField {
    pub epsilon: f64,
    pub data: RiemannData,
    pub profile: CoefficientProfile,
}

/// Time-dependent quantities of a [`ViscousField`] at fixed `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscousSlice {
    pub t: f64,
    pub e: f64,
    pub b: f64,
    pub b_eps: f64,
    pub x_minus: f64,
    pub x_plus: f64,
    rho_minus: f64,
    rho_plus: f64,
    u_minus: f64,
    u_plus: f64,
}

/// Log-shifted kernel weights at one point.
struct Kernel {
    z_minus: f64,
    z_plus: f64,
    g_minus: f64,
    g_plus: f64,
    /// `exp(-shift)`, the factor applied to everything not carrying a `g`.
    scale: f64,
}

impl ViscousField {
    pub fn new(epsilon: f64, data: RiemannData, profile: CoefficientProfile) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter("epsilon must be positive"));
        }
        Ok(Self { epsilon, data, profile })
    }

    pub fn slice(&self, t: f64) -> Result<ViscousSlice> {
        let (e, b) = self.profile.similarity(t)?;
        ViscousSlice::new(self.epsilon, &self.data, t, e, b)
    }

    pub fn eval_b_pm(&self, x: f64, t: f64, sign: Sign) -> Result<ScaledB> {
        Ok(self.slice(t)?.b_pm(x, sign))
    }

    /// `(ρ^ε, u^ε)` at `(x, t)`.
    pub fn eval_viscous(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        let s = self.slice(t)?;
        Ok((s.density(x), s.velocity(x)))
    }

    pub fn eval_q_series(&self, x: f64, t: f64, sign: Sign) -> Result<QSeries> {
        self.slice(t)?.q_series(x, sign)
    }

    /// `∫ ρ^ε` over `x(t) ± h` minus the background `(ρ_- + ρ_+) h`.
    /// The window is centred on the Zeldovich shock path `(x_- + x_+)/2`.
    pub fn capture_delta_weight(&self, t: f64, h: f64) -> Result<f64> {
        if classify(&self.data) != WaveCase::DeltaShock {
            return Err(Error::NotDeltaCase);
        }
        self.slice(t)?.capture_weight(h)
    }
}

impl ViscousSlice {
    pub fn new(epsilon: f64, data: &RiemannData, t: f64, e: f64, b: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::DegenerateTime { t });
        }
        Ok(Self {
            t,
            e,
            b,
            b_eps: 4.0 * epsilon * b,
            x_minus: data.u_minus() * b,
            x_plus: data.u_plus() * b,
            rho_minus: data.rho_minus(),
            rho_plus: data.rho_plus(),
            u_minus: data.u_minus(),
            u_plus: data.u_plus(),
        })
    }

    fn width(&self) -> f64 {
        libm::sqrt(self.b_eps)
    }

    fn z(&self, x: f64) -> (f64, f64) {
        let w = self.width();
        ((x - self.x_minus) / w, (self.x_plus - x) / w)
    }

    fn kernel(&self, x: f64) -> Kernel {
        let (z_minus, z_plus) = self.z(x);
        let lm = ln_erfcx(z_minus);
        let lp = ln_erfcx(z_plus);
        let shift = lm.max(lp);
        // the ½ in g_± cancels in every ratio except against `scale`
        Kernel {
            z_minus,
            z_plus,
            g_minus: libm::exp(lm - shift),
            g_plus: libm::exp(lp - shift),
            scale: 2.0 * libm::exp(-shift),
        }
    }

    pub fn b_pm(&self, x: f64, sign: Sign) -> ScaledB {
        let (zm, zp) = self.z(x);
        let z = match sign {
            Sign::Plus => zp,
            Sign::Minus => zm,
        };
        ScaledB {
            ln_scaled: ln_erfcx(z) - core::f64::consts::LN_2,
            gaussian_exponent: -x * x / self.b_eps,
        }
    }

    /// `u^ε = (u_+ b_+ + u_- b_-)/(b_+ + b_-) · E`.
    pub fn velocity(&self, x: f64) -> f64 {
        let k = self.kernel(x);
        (self.u_plus * k.g_plus + self.u_minus * k.g_minus) / (k.g_plus + k.g_minus) * self.e
    }

    /// `(√(εB/π))` expressed through `B_ε`.
    fn gaussian_term(&self) -> f64 {
        (self.rho_plus - self.rho_minus) * self.width() / (2.0 * SQRT_PI)
    }

    /// The potential `W^ε` with `ρ^ε = ∂ₓW^ε`.
    pub fn potential(&self, x: f64) -> f64 {
        let k = self.kernel(x);
        let num = self.rho_minus * (x - self.x_minus) * k.g_minus
            + self.rho_plus * (x - self.x_plus) * k.g_plus
            + self.gaussian_term() * k.scale;
        num / (k.g_minus + k.g_plus)
    }

    /// `ρ^ε` by the analytic derivative of `W^ε`, falling back to a central
    /// difference if the analytic value is not finite.
    pub fn density(&self, x: f64) -> f64 {
        let v = self.density_analytic(x);
        if v.is_finite() {
            v
        } else {
            self.density_fd(x)
        }
    }

    pub fn density_analytic(&self, x: f64) -> f64 {
        let k = self.kernel(x);
        let w = self.width();
        // d/dx of ½erfcx(z_±), rescaled like g_±
        let c = FRAC_1_SQRT_PI * k.scale * 0.5;
        let dg_plus = -(2.0 * k.z_plus * k.g_plus - 2.0 * c) / w;
        let dg_minus = (2.0 * k.z_minus * k.g_minus - 2.0 * c) / w;
        let (dm, dp) = (x - self.x_minus, x - self.x_plus);
        let d = k.g_minus + k.g_plus;
        let n = self.rho_minus * dm * k.g_minus + self.rho_plus * dp * k.g_plus + self.gaussian_term() * k.scale;
        let dn = self.rho_minus * (k.g_minus + dm * dg_minus) + self.rho_plus * (k.g_plus + dp * dg_plus);
        (dn - n / d * (dg_minus + dg_plus)) / d
    }

    /// Central difference of `W^ε` with step `eps^{1/3} max(1, |x|)`.
    pub fn density_fd(&self, x: f64) -> f64 {
        let h = libm::cbrt(f64::EPSILON) * x.abs().max(1.0);
        let h = h.min(0.05 * self.width());
        (self.potential(x + h) - self.potential(x - h)) / (2.0 * h)
    }

    /// Asymptotic series of `Q_±` for `±(x_± - x) > √B_ε`.
    pub fn q_series(&self, x: f64, sign: Sign) -> Result<QSeries> {
        let w = self.width();
        let (dist, edge) = match sign {
            Sign::Plus => (self.x_plus - x, self.x_plus),
            Sign::Minus => (x - self.x_minus, self.x_minus),
        };
        let ratio = dist / w;
        if !(ratio > 1.0) {
            return Err(Error::OutsideAsymptoticRegion { ratio });
        }
        let r = w / (2.0 * (edge - x));
        let r2 = r * r;
        let mut term = r;
        let mut sum = 0.0;
        let mut n = 0usize;
        loop {
            // |t_{n+1}/t_n| = 2(2n+1) r²; stop before the terms grow.
            let next = -term * 2.0 * (2 * n + 1) as f64 * r2;
            if next.abs() >= term.abs() || n >= 400 {
                break;
            }
            sum += term;
            term = next;
            n += 1;
        }
        let exact_mag = 0.5 * SQRT_PI * erfcx(ratio);
        let exact = match sign {
            Sign::Plus => exact_mag,
            Sign::Minus => -exact_mag,
        };
        let (value, terms_used) = if n == 0 { (term, 1) } else { (sum, n) };
        Ok(QSeries {
            value,
            terms_used,
            stop_magnitude: term.abs(),
            exact,
        })
    }

    /// Centre of the viscous delta layer, `(x_- + x_+)/2`.
    pub fn shock_centre(&self) -> f64 {
        0.5 * (self.x_minus + self.x_plus)
    }

    pub fn capture_weight(&self, h: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter("capture window must be positive"));
        }
        let c = self.shock_centre();
        let w = self.width();
        let breaks = [c - w, c, c + w];
        let r = integrate_with_breaks(|x| self.density(x), c - h, c + h, &breaks, QuadOptions::uniform(1e-11))?;
        Ok(r.value - (self.rho_minus + self.rho_plus) * h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    fn field(eps: f64, rm: f64, rp: f64, um: f64, up: f64, sigma: f64) -> ViscousField {
        ViscousField::new(
            eps,
            RiemannData::new(rm, rp, um, up).unwrap(),
            CoefficientProfile::constant(1.0, sigma).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn b_examples() {
        let f = field(0.1, 1.0, 1.0, 0.7, 0.0, 0.0);
        assert!((f.eval_b_pm(0.0, 1.0, Sign::Plus).unwrap().value() - 0.5).abs() < 1e-15);
        let f = field(0.1, 1.0, 2.0, 0.0, 0.0, 0.3);
        let s =
            f.eval_b_pm(0.0, 1.0, Sign::Plus).unwrap().value() + f.eval_b_pm(0.0, 1.0, Sign::Minus).unwrap().value();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn b_matches_defining_integral() {
        let (eps, um, up, t) = (0.2, 0.8, -0.6, 1.3);
        let f = field(eps, 1.0, 1.0, um, up, 0.5);
        let sl = f.slice(t).unwrap();
        let be = sl.b_eps;
        for &x in &[-1.0, -0.2, 0.0, 0.35, 1.1] {
            let kernel = |y: f64, u: f64| libm::exp(-(x - y) * (x - y) / be - u * y / (2.0 * eps));
            let plus = integrate(|y| kernel(y, up), 0.0, 40.0, QuadOptions::uniform(1e-13))
                .unwrap()
                .value;
            let minus = integrate(|y| kernel(y, um), -40.0, 0.0, QuadOptions::uniform(1e-13))
                .unwrap()
                .value;
            let norm = libm::sqrt(core::f64::consts::PI * be);
            let bp = sl.b_pm(x, Sign::Plus).value();
            let bm = sl.b_pm(x, Sign::Minus).value();
            assert!(((bp - plus / norm) / bp).abs() < 1e-8, "b_+ at {x}");
            assert!(((bm - minus / norm) / bm).abs() < 1e-8, "b_- at {x}");
        }
    }

    #[test]
    fn degenerate_time() {
        let f = field(0.1, 1.0, 1.0, 1.0, -1.0, 0.0);
        assert!(matches!(f.eval_viscous(0.0, 0.0), Err(Error::DegenerateTime { .. })));
    }

    #[test]
    fn antisymmetric_velocity() {
        let f = field(0.05, 2.0, 2.0, 1.5, -1.5, 0.4);
        assert!(f.eval_viscous(0.0, 1.0).unwrap().1.abs() < 1e-15);
        let f = field(0.05, 2.0, 2.0, -1.5, 1.5, 0.4);
        assert!(f.eval_viscous(0.0, 1.0).unwrap().1.abs() < 1e-15);
    }

    #[test]
    fn far_field_states() {
        for &(um, up) in &[(1.0, -1.0), (-0.5, 2.0)] {
            let f = field(0.01, 3.0, 0.5, um, up, 0.5);
            let t = 1.0;
            let sl = f.slice(t).unwrap();
            let far = 20.0 * libm::sqrt(sl.b_eps);
            let (rl, ul) = f.eval_viscous(sl.x_minus.min(sl.x_plus) - far, t).unwrap();
            let (rr, ur) = f.eval_viscous(sl.x_minus.max(sl.x_plus) + far, t).unwrap();
            assert!((rl - 3.0).abs() < 1e-12 && (ul - um * sl.e).abs() < 1e-12);
            assert!((rr - 0.5).abs() < 1e-12 && (ur - up * sl.e).abs() < 1e-12);
        }
    }

    #[test]
    fn density_integrates_to_potential_difference() {
        let f = field(0.02, 1.0, 2.0, 1.0, -0.5, 0.3);
        let sl = f.slice(0.8).unwrap();
        let r = 3.0;
        let q = integrate_with_breaks(
            |x| sl.density(x),
            -r,
            r,
            &[sl.x_plus, sl.shock_centre(), sl.x_minus],
            QuadOptions::uniform(1e-12),
        )
        .unwrap()
        .value;
        let diff = sl.potential(r) - sl.potential(-r);
        assert!((q - diff).abs() < 1e-9 * diff.abs(), "{q} vs {diff}");
    }

    #[test]
    fn analytic_density_matches_finite_difference() {
        for &(um, up) in &[(1.0, -1.0), (-1.0, 0.5), (0.3, 0.3)] {
            let f = field(0.05, 1.5, 0.7, um, up, 0.2);
            let sl = f.slice(1.0).unwrap();
            for k in -20..=20 {
                let x = 0.1 * k as f64;
                let a = sl.density_analytic(x);
                let d = sl.density_fd(x);
                assert!((a - d).abs() <= 1e-6 * a.abs().max(1.0), "x={x}: {a} vs {d}");
            }
        }
    }

    #[test]
    fn no_overflow_at_small_epsilon() {
        let f = field(1e-5, 1.0, 3.0, 2.0, -1.0, 0.0);
        for k in -30..=30 {
            let (r, u) = f.eval_viscous(0.1 * k as f64, 1.0).unwrap();
            assert!(r.is_finite() && u.is_finite());
        }
    }

    #[test]
    fn q_series_examples() {
        let f = field(1e-3, 1.0, 1.0, -1.0, 1.0, 0.0);
        let sl = f.slice(1.0).unwrap();
        // far region: plus edge at x_+ = 1, evaluate at x = 0
        let q = sl.q_series(0.0, Sign::Plus).unwrap();
        assert!(((q.value - q.exact) / q.exact).abs() < 1e-6);
        let first = libm::sqrt(1e-3 * sl.b) / (sl.x_plus - 0.0);
        assert!(((first - q.value) / q.value).abs() < 1e-2);
        let q = sl.q_series(0.0, Sign::Minus).unwrap();
        assert!(q.value < 0.0 && ((q.value - q.exact) / q.exact).abs() < 1e-6);
        // just inside the validity boundary
        let w = libm::sqrt(sl.b_eps);
        let q = sl.q_series(sl.x_plus - 1.0001 * w, Sign::Plus).unwrap();
        assert!(q.terms_used <= 1);
        assert!(matches!(
            sl.q_series(sl.x_plus - 0.5 * w, Sign::Plus),
            Err(Error::OutsideAsymptoticRegion { .. })
        ));
    }

    #[test]
    fn capture_small_epsilon() {
        let f = field(1e-3, 1.0, 1.0, 1.0, -1.0, 0.0);
        let sl = f.slice(1.0).unwrap();
        let h = 8.0 * libm::sqrt(sl.b_eps);
        let w = f.capture_delta_weight(1.0, h).unwrap();
        assert!((w - 2.0).abs() < 0.05 * 2.0, "captured {w}");
        let fan = field(1e-3, 1.0, 1.0, -1.0, 1.0, 0.0);
        assert_eq!(fan.capture_delta_weight(1.0, h), Err(Error::NotDeltaCase));
    }
}
