//! Riemann data, wave-fan taxonomy and measure-valued states shared by both
//! systems.
//!
//! Every exact solution has the same skeleton. Outer states carry the damped
//! velocities `u_± E(t)`, and waves move along `c B(t)` for a constant `c`.
//! The two systems differ only in the constants of the delta shock, which
//! are bundled in a [`DeltaTriple`].

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::coeffs::CoefficientProfile;
use crate::error::{Error, Result};
use crate::quad::{integrate_with_breaks, QuadOptions, QuadResult};

/// Constant left/right states of a Riemann problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannData {
    rho_minus: f64,
    rho_plus: f64,
    u_minus: f64,
    u_plus: f64,
}

impl RiemannData {
    pub fn new(rho_minus: f64, rho_plus: f64, u_minus: f64, u_plus: f64) -> Result<Self> {
        let good = |r: f64| r.is_finite() && r > 0.0;
        if !(good(rho_minus) && good(rho_plus)) {
            return Err(Error::InvalidDensity { rho_minus, rho_plus });
        }
        if !(u_minus.is_finite() && u_plus.is_finite()) {
            return Err(Error::InvalidParameter("velocities must be finite"));
        }
        Ok(Self {
            rho_minus,
            rho_plus,
            u_minus,
            u_plus,
        })
    }

    pub fn rho_minus(&self) -> f64 {
        self.rho_minus
    }

    pub fn rho_plus(&self) -> f64 {
        self.rho_plus
    }

    pub fn u_minus(&self) -> f64 {
        self.u_minus
    }

    pub fn u_plus(&self) -> f64 {
        self.u_plus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveCase {
    /// `u_- < u_+`: two contact discontinuities bounding a vacuum.
    TwoContactsVacuum,
    /// `u_- = u_+`: one contact discontinuity.
    SingleContact,
    /// `u_- > u_+`: a delta shock.
    DeltaShock,
}

/// Exact (bitwise) comparison of the two velocities.
pub fn classify(data: &RiemannData) -> WaveCase {
    if data.u_minus < data.u_plus {
        WaveCase::TwoContactsVacuum
    } else if data.u_minus == data.u_plus {
        WaveCase::SingleContact
    } else {
        WaveCase::DeltaShock
    }
}

/// Like [`classify`], but velocities within `tau` count as equal.
pub fn classify_with_tolerance(data: &RiemannData, tau: f64) -> WaveCase {
    let d = data.u_minus - data.u_plus;
    if d.abs() <= tau {
        WaveCase::SingleContact
    } else if d < 0.0 {
        WaveCase::TwoContactsVacuum
    } else {
        WaveCase::DeltaShock
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum System {
    Zeldovich,
    Pressureless,
}

/// Delta-shock constants in the similarity variable `ξ = x / B(t)`:
/// the path is `varsigma B(t)`, the weight `w0 B(t)` and the atom velocity
/// `u_delta0 E(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaTriple {
    pub varsigma: f64,
    pub w0: f64,
    pub u_delta0: f64,
}

/// A point mass of the density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub x: f64,
    pub weight: f64,
    pub velocity: f64,
}

/// Point value of a measure-valued state. `atom` is set exactly on the
/// shock path; `rho` is then the mean of the neighbouring densities and
/// `u` the atom velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub rho: f64,
    pub u: f64,
    pub atom: Option<Atom>,
}

/// Flat output record `(t, x, rho_regular, u, atom_flag, atom_weight)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    pub t: f64,
    pub x: f64,
    pub rho_regular: f64,
    pub u: f64,
    pub atom_flag: bool,
    pub atom_weight: f64,
}

impl Sample {
    pub fn record(&self, x: f64, t: f64) -> SampleRecord {
        SampleRecord {
            t,
            x,
            rho_regular: self.rho,
            u: self.u,
            atom_flag: self.atom.is_some(),
            atom_weight: self.atom.map_or(0.0, |a| a.weight),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentKind {
    Constant {
        rho: f64,
        u: f64,
    },
    /// Zero density with the linear velocity `u = slope * x`.
    Vacuum {
        slope: f64,
    },
}

/// Regular part on the open interval `(left, right)`; ends may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub left: f64,
    pub right: f64,
    pub kind: SegmentKind,
}

impl Segment {
    fn value(&self, x: f64) -> (f64, f64) {
        match self.kind {
            SegmentKind::Constant { rho, u } => (rho, u),
            SegmentKind::Vacuum { slope } => (0.0, slope * x),
        }
    }
}

/// Spatial state at fixed `t`: a bounded piecewise part plus point atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureValuedState {
    pub t: f64,
    pub segments: Vec<Segment>,
    pub atoms: Vec<Atom>,
}

impl MeasureValuedState {
    /// Regular `(rho, u)`. At an interior segment boundary the segment on
    /// the outside of a vacuum wins, which closes fans at their edges.
    pub fn regular(&self, x: f64) -> (f64, f64) {
        for (k, seg) in self.segments.iter().enumerate() {
            if x > seg.left && x < seg.right {
                return seg.value(x);
            }
            if x == seg.right {
                return match self.segments.get(k + 1) {
                    Some(next) if matches!(seg.kind, SegmentKind::Vacuum { .. }) => next.value(x),
                    _ => seg.value(x),
                };
            }
        }
        self.segments[0].value(x)
    }

    pub fn atom_at(&self, x: f64) -> Option<Atom> {
        self.atoms.iter().copied().find(|a| a.x == x)
    }

    pub fn sample(&self, x: f64) -> Sample {
        if let Some(atom) = self.atom_at(x) {
            let l = self.regular_side(x, true);
            let r = self.regular_side(x, false);
            return Sample {
                rho: 0.5 * (l.0 + r.0),
                u: atom.velocity,
                atom: Some(atom),
            };
        }
        let (rho, u) = self.regular(x);
        Sample { rho, u, atom: None }
    }

    fn regular_side(&self, x: f64, left: bool) -> (f64, f64) {
        for seg in &self.segments {
            let hit = if left {
                x > seg.left && x <= seg.right
            } else {
                x >= seg.left && x < seg.right
            };
            if hit {
                return seg.value(x);
            }
        }
        self.regular(x)
    }

    /// Total mass on `[a, b]`, atoms included.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        let mut m = 0.0;
        for seg in &self.segments {
            let lo = seg.left.max(a);
            let hi = seg.right.min(b);
            if hi > lo {
                if let SegmentKind::Constant { rho, .. } = seg.kind {
                    m += rho * (hi - lo);
                }
            }
        }
        m + self
            .atoms
            .iter()
            .filter(|at| at.x >= a && at.x <= b)
            .map(|at| at.weight)
            .sum::<f64>()
    }
}

/// A point `(x, t)` of a delta curve with its weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub t: f64,
    pub w: f64,
}

pub type CurveFn = Arc<dyn Fn(f64) -> CurvePoint + Send + Sync>;

/// Weighted delta function supported on `s ↦ (x(s), t(s))`, `s ∈ (a, b)`.
#[derive(Clone)]
pub struct DeltaCurve {
    pub a: f64,
    pub b: f64,
    pub breakpoints: Vec<f64>,
    path: CurveFn,
}

impl core::fmt::Debug for DeltaCurve {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DeltaCurve")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

impl DeltaCurve {
    pub fn new<F>(a: f64, b: f64, path: F) -> Self
    where
        F: Fn(f64) -> CurvePoint + Send + Sync + 'static,
    {
        Self {
            a,
            b,
            breakpoints: Vec::new(),
            path: Arc::new(path),
        }
    }

    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Self {
        self.breakpoints = breakpoints;
        self
    }

    pub fn point(&self, s: f64) -> CurvePoint {
        (self.path)(s)
    }
}

/// `⟨w δ_L, φ⟩ = ∫ₐᵇ w(s) φ(x(s), t(s)) ds`.
pub fn pair_with_test_function<P>(curve: &DeltaCurve, mut phi: P, opts: QuadOptions) -> Result<QuadResult>
where
    P: FnMut(f64, f64) -> f64,
{
    integrate_with_breaks(
        |s| {
            let p = curve.point(s);
            if p.w == 0.0 {
                0.0
            } else {
                p.w * phi(p.x, p.t)
            }
        },
        curve.a,
        curve.b,
        &curve.breakpoints,
        opts,
    )
    .map_err(|e| match e {
        Error::NonIntegrable { value, error } => Error::QuadratureFailure { value, error },
        other => other,
    })
}

/// Exact Riemann solution of either system.
#[derive(Debug, Clone)]
pub struct WaveFanSolution {
    pub system: System,
    pub data: RiemannData,
    pub profile: CoefficientProfile,
    pub case: WaveCase,
    /// Delta-shock constants; `None` unless `case` is `DeltaShock`.
    pub delta: Option<DeltaTriple>,
}

impl WaveFanSolution {
    /// Assembles a solution; `delta` must be given exactly in the delta case.
    pub fn new(
        system: System,
        data: RiemannData,
        profile: CoefficientProfile,
        delta: Option<DeltaTriple>,
    ) -> Result<Self> {
        let case = classify(&data);
        if (case == WaveCase::DeltaShock) != delta.is_some() {
            return Err(Error::NotDeltaCase);
        }
        Ok(Self {
            system,
            data,
            profile,
            case,
            delta,
        })
    }

    fn triple(&self) -> Result<DeltaTriple> {
        self.delta.ok_or(Error::NotDeltaCase)
    }

    /// `x(t) = varsigma B(t)`.
    pub fn shock_path(&self, t: f64) -> Result<f64> {
        Ok(self.triple()?.varsigma * self.profile.integrate_b(t)?)
    }

    /// `w(t) = w0 B(t)`.
    pub fn weight(&self, t: f64) -> Result<f64> {
        Ok(self.triple()?.w0 * self.profile.integrate_b(t)?)
    }

    /// `u_δ(t) = u_delta0 E(t)`.
    pub fn atom_velocity(&self, t: f64) -> Result<f64> {
        Ok(self.triple()?.u_delta0 * self.profile.e(t)?)
    }

    /// `dx/dt = varsigma α(t) E(t)`.
    pub fn shock_speed(&self, t: f64) -> Result<f64> {
        Ok(self.triple()?.varsigma * self.profile.beta(t)?)
    }

    /// Fan edges `(u_- B(t), u_+ B(t))`; for a single contact both coincide.
    pub fn fan_edges(&self, t: f64) -> Result<(f64, f64)> {
        let b = self.profile.integrate_b(t)?;
        Ok((self.data.u_minus * b, self.data.u_plus * b))
    }

    /// Velocity `x E(t) / B(t)` inside the vacuum.
    pub fn vacuum_velocity(&self, x: f64, t: f64) -> Result<f64> {
        let (e, b) = self.profile.similarity(t)?;
        if b == 0.0 {
            return Err(Error::VacuumDivision { t });
        }
        Ok(x * e / b)
    }

    /// The full state at time `t`. At `t = 0` this is the Riemann data.
    pub fn state_at(&self, t: f64) -> Result<MeasureValuedState> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidParameter("time must be finite and non-negative"));
        }
        let (e, b) = if t == 0.0 {
            (1.0, 0.0)
        } else {
            self.profile.similarity(t)?
        };
        Ok(self.state_from(t, e, b))
    }

    /// State from precomputed `E(t)` and `B(t)`.
    pub fn state_from(&self, t: f64, e: f64, b: f64) -> MeasureValuedState {
        let d = &self.data;
        let left = SegmentKind::Constant {
            rho: d.rho_minus,
            u: d.u_minus * e,
        };
        let right = SegmentKind::Constant {
            rho: d.rho_plus,
            u: d.u_plus * e,
        };
        let inf = f64::INFINITY;
        let seg = |l: f64, r: f64, kind| Segment {
            left: l,
            right: r,
            kind,
        };
        if t == 0.0 {
            return MeasureValuedState {
                t,
                segments: alloc::vec![seg(-inf, 0.0, left), seg(0.0, inf, right)],
                atoms: Vec::new(),
            };
        }
        match (self.case, self.delta) {
            (WaveCase::DeltaShock, Some(tr)) => {
                let x = tr.varsigma * b;
                MeasureValuedState {
                    t,
                    segments: alloc::vec![seg(-inf, x, left), seg(x, inf, right)],
                    atoms: alloc::vec![Atom {
                        x,
                        weight: tr.w0 * b,
                        velocity: tr.u_delta0 * e,
                    }],
                }
            }
            (WaveCase::TwoContactsVacuum, _) if b > 0.0 => {
                let (xl, xr) = (d.u_minus * b, d.u_plus * b);
                MeasureValuedState {
                    t,
                    segments: alloc::vec![
                        seg(-inf, xl, left),
                        seg(xl, xr, SegmentKind::Vacuum { slope: e / b }),
                        seg(xr, inf, right),
                    ],
                    atoms: Vec::new(),
                }
            }
            _ => {
                // Single contact, or a fan that has not opened (B = 0).
                let xc = d.u_minus * b;
                MeasureValuedState {
                    t,
                    segments: alloc::vec![seg(-inf, xc, left), seg(xc, inf, right)],
                    atoms: Vec::new(),
                }
            }
        }
    }

    /// Point value at `(x, t)`.
    pub fn sample(&self, x: f64, t: f64) -> Result<Sample> {
        Ok(self.state_at(t)?.sample(x))
    }

    /// The atom as a delta curve over `t ∈ (t0, t1)`.
    pub fn delta_curve(&self, t0: f64, t1: f64) -> Result<DeltaCurve> {
        let tr = self.triple()?;
        let profile = self.profile.clone();
        let mut breaks = Vec::new();
        profile.alpha_coefficient().breakpoints(t1, &mut breaks);
        profile.sigma_coefficient().breakpoints(t1, &mut breaks);
        Ok(DeltaCurve::new(t0, t1, move |t| {
            let b = profile.integrate_b(t).unwrap_or(f64::NAN);
            CurvePoint {
                x: tr.varsigma * b,
                t,
                w: tr.w0 * b,
            }
        })
        .with_breakpoints(breaks))
    }
}

/// Outcome of an entropy check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyStatus {
    Pass,
    Fail,
    /// Every characteristic speed vanished on the grid.
    Degenerate,
}

/// One grid time of an entropy check. Margins are `speed - lower` and
/// `upper - speed`; both must be positive where `α E > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySample {
    pub t: f64,
    pub lower: f64,
    pub speed: f64,
    pub upper: f64,
    pub margin_lower: f64,
    pub margin_upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyVerdict {
    pub status: EntropyStatus,
    pub samples: Vec<EntropySample>,
}

/// Checks `u_+ β(t) < c β(t) < u_- β(t)` on `t_grid` for a shock moving
/// along `c B(t)`, with `β = α E`. Strictness is relaxed where `β = 0`.
pub fn check_bracketing(
    data: &RiemannData,
    profile: &CoefficientProfile,
    c: f64,
    t_grid: &[f64],
) -> Result<EntropyVerdict> {
    let mut samples = Vec::with_capacity(t_grid.len());
    let mut all_zero = true;
    let mut ok = true;
    for &t in t_grid {
        let beta = profile.beta(t)?;
        let lower = data.u_plus * beta;
        let upper = data.u_minus * beta;
        let speed = c * beta;
        let s = EntropySample {
            t,
            lower,
            speed,
            upper,
            margin_lower: speed - lower,
            margin_upper: upper - speed,
        };
        if beta > 0.0 {
            all_zero = false;
            ok &= s.margin_lower > 0.0 && s.margin_upper > 0.0;
        } else {
            ok &= s.margin_lower >= 0.0 && s.margin_upper >= 0.0;
        }
        samples.push(s);
    }
    let status = if all_zero {
        EntropyStatus::Degenerate
    } else if ok {
        EntropyStatus::Pass
    } else {
        EntropyStatus::Fail
    };
    Ok(EntropyVerdict { status, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn classify_examples() {
        let d = RiemannData::new(1.0, 1.0, -1.0, 1.0).unwrap();
        assert_eq!(classify(&d), WaveCase::TwoContactsVacuum);
        let d = RiemannData::new(1.0, 1.0, 0.5, 0.5).unwrap();
        assert_eq!(classify(&d), WaveCase::SingleContact);
        let d = RiemannData::new(4.0, 1.0, 2.0, 0.0).unwrap();
        assert_eq!(classify(&d), WaveCase::DeltaShock);
        assert!(matches!(
            RiemannData::new(0.0, 1.0, 0.0, 0.0),
            Err(Error::InvalidDensity { .. })
        ));
        assert!(matches!(
            RiemannData::new(1.0, -2.0, 0.0, 0.0),
            Err(Error::InvalidDensity { .. })
        ));
    }

    #[test]
    fn tolerant_classification() {
        let d = RiemannData::new(1.0, 1.0, 0.5, 0.5 + 1e-14).unwrap();
        assert_eq!(classify(&d), WaveCase::TwoContactsVacuum);
        assert_eq!(classify_with_tolerance(&d, 1e-12), WaveCase::SingleContact);
    }

    #[test]
    fn pairing_examples() {
        let opts = QuadOptions::default();
        let zero = DeltaCurve::new(0.0, 1.0, |s| CurvePoint { x: 0.0, t: s, w: 0.0 });
        assert_eq!(
            pair_with_test_function(&zero, |x, t| x + t + 1.0, opts).unwrap().value,
            0.0
        );

        let unit = DeltaCurve::new(0.0, 1.0, |s| CurvePoint { x: 0.0, t: s, w: 1.0 });
        let r = pair_with_test_function(&unit, |_, t| t, opts).unwrap();
        assert!((r.value - 0.5).abs() < 1e-15);

        let far = |x: f64, _t: f64| if x.abs() > 5.0 { 1.0 } else { 0.0 };
        assert_eq!(pair_with_test_function(&unit, far, opts).unwrap().value, 0.0);
    }

    #[test]
    fn state_mass_counts_atoms() {
        let st = MeasureValuedState {
            t: 1.0,
            segments: vec![
                Segment {
                    left: f64::NEG_INFINITY,
                    right: 0.0,
                    kind: SegmentKind::Constant { rho: 2.0, u: 0.0 },
                },
                Segment {
                    left: 0.0,
                    right: f64::INFINITY,
                    kind: SegmentKind::Constant { rho: 1.0, u: 0.0 },
                },
            ],
            atoms: vec![Atom {
                x: 0.0,
                weight: 0.5,
                velocity: 0.0,
            }],
        };
        assert!((st.mass(-1.0, 1.0) - 3.5).abs() < 1e-15);
        let s = st.sample(0.0);
        assert_eq!(s.atom.unwrap().weight, 0.5);
        assert_eq!(s.rho, 1.5);
    }
}
