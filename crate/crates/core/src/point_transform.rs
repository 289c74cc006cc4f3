//! Point transformations from a stationary problem in `y` to a
//! time-dependent one in `(x, t)`.
//!
//! With `s = 4t + c1`, `y = (2x - c2) / (2s)`, and for a stationary state
//! `psi` of energy `E`
//!
//! ```text
//! phi(x, t) = s^{-1/2} psi(y) exp{ i [x² - c2 x + (E + c2²)/4] / s }
//! V(x, t)   = V2(y) / s²
//! ```
//!
//! solves `i phi_t + phi_xx - V phi = 0`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Grid, RealField};
use crate::interp;
use crate::quadrature;

/// Integration constants of the special map with `A = -1/(4t + c1)`,
/// `B = c2/(4t + c1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMapConstants {
    pub c1: f64,
    pub c2: f64,
}

impl PointMapConstants {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !c1.is_finite() || !c2.is_finite() {
            return Err(Error::Domain(format!("c1 = {c1}, c2 = {c2} must be finite")));
        }
        Ok(Self { c1, c2 })
    }

    /// `4t + c1`, rejecting the singular time `t = -c1/4`.
    pub fn scale(&self, t: f64) -> Result<f64> {
        let s = 4.0 * t + self.c1;
        if s.abs() <= 1e-12 * (1.0 + self.c1.abs()) || !s.is_finite() {
            return Err(Error::SingularTime { t, denominator: s });
        }
        Ok(s)
    }

    /// Like [`scale`](Self::scale) but also requires `4t + c1 > 0`.
    pub fn positive_scale(&self, t: f64) -> Result<f64> {
        let s = self.scale(t)?;
        if s < 0.0 {
            return Err(Error::Domain(format!(
                "4t + c1 = {s} < 0 at t = {t}; the square-root prefactor needs a positive scale"
            )));
        }
        Ok(s)
    }

    /// `(x² - c2 x + (E + c2²)/4) / s`.
    pub fn phase(&self, x: f64, energy: f64, s: f64) -> f64 {
        (x * x - self.c2 * x + 0.25 * (energy + self.c2 * self.c2)) / s
    }

    pub fn a(&self, t: f64) -> f64 {
        -1.0 / (4.0 * t + self.c1)
    }

    pub fn b(&self, t: f64) -> f64 {
        self.c2 / (4.0 * t + self.c1)
    }
}

impl Default for PointMapConstants {
    fn default() -> Self {
        Self { c1: 1.0, c2: 0.0 }
    }
}

pub fn y_of_xt(x: f64, t: f64, c: &PointMapConstants) -> Result<f64> {
    let s = c.scale(t)?;
    Ok((2.0 * x - c.c2) / (2.0 * s))
}

pub fn transform_potential(
    v2: impl Fn(f64) -> f64,
    x: f64,
    t: f64,
    c: &PointMapConstants,
) -> Result<f64> {
    let s = c.scale(t)?;
    Ok(v2((2.0 * x - c.c2) / (2.0 * s)) / (s * s))
}

pub fn transform_wavefunction(
    psi: impl Fn(f64) -> f64,
    energy: f64,
    x: f64,
    t: f64,
    c: &PointMapConstants,
) -> Result<Complex64> {
    let s = c.positive_scale(t)?;
    let y = (2.0 * x - c.c2) / (2.0 * s);
    Ok(Complex64::from_polar(psi(y) / s.sqrt(), c.phase(x, energy, s)))
}

type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A general map given by real functions `A(t)`, `B(t)`, with the nested
/// time integrals tabulated on a uniform time grid `[t0, t_end]`.
#[derive(Clone)]
pub struct GeneralMapSpec {
    a: TimeFn,
    b: TimeFn,
    t0: f64,
    energy: f64,
    /// `∫ A`
    int_a: RealField,
    /// `∫ B exp(4 ∫A)`
    int_b_stretch: RealField,
    /// `∫ exp(8 ∫A)`
    int_stretch_sq: RealField,
    /// `∫ B²`
    int_b_sq: RealField,
}

impl std::fmt::Debug for GeneralMapSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneralMapSpec")
            .field("t0", &self.t0)
            .field("t_end", &self.int_a.grid().y_max())
            .field("energy", &self.energy)
            .finish_non_exhaustive()
    }
}

/// Values produced by [`general_transform`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralMapValue {
    pub y: f64,
    pub phi: Complex64,
    pub potential: f64,
    /// `A' - 4A²`, the coefficient of `x²` in the potential.
    pub quadratic: f64,
    /// `B' - 4AB`, the coefficient of `x`.
    pub linear: f64,
}

impl GeneralMapSpec {
    pub fn new(
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
        t0: f64,
        t_end: f64,
        energy: f64,
        time_nodes: usize,
    ) -> Result<Self> {
        let times = Grid::new(t0, t_end, time_nodes)?;
        let a: TimeFn = Arc::new(a);
        let b: TimeFn = Arc::new(b);
        let a_samples = times.sample(|t| a(t));
        let b_samples = times.sample(|t| b(t));
        if a_samples.values().iter().chain(b_samples.values()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("A or B is not finite on the time interval".into()));
        }
        let int_a = quadrature::cumulative_integral(&a_samples, t0)?;
        let stretch = int_a.map(|v| (4.0 * v).exp());
        let int_b_stretch =
            quadrature::cumulative_integral(&b_samples.zip_with(&stretch, |b, e| b * e)?, t0)?;
        let int_stretch_sq = quadrature::cumulative_integral(&stretch.map(|e| e * e), t0)?;
        let int_b_sq = quadrature::cumulative_integral(&b_samples.map(|b| b * b), t0)?;
        Ok(Self {
            a,
            b,
            t0,
            energy,
            int_a,
            int_b_stretch,
            int_stretch_sq,
            int_b_sq,
        })
    }

    /// The special solution `A = -1/(4t + c1)`, `B = c2/(4t + c1)`.
    pub fn special(
        c: PointMapConstants,
        t0: f64,
        t_end: f64,
        energy: f64,
        time_nodes: usize,
    ) -> Result<Self> {
        c.scale(t0)?;
        c.scale(t_end)?;
        if (4.0 * t0 + c.c1).signum() != (4.0 * t_end + c.c1).signum() {
            return Err(Error::SingularTime {
                t: -c.c1 / 4.0,
                denominator: 0.0,
            });
        }
        Self::new(move |t| c.a(t), move |t| c.b(t), t0, t_end, energy, time_nodes)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    fn table(&self, f: &RealField, t: f64) -> Result<f64> {
        if !f.grid().contains(t) {
            return Err(Error::Domain(format!(
                "t = {t} outside the tabulated interval [{}, {}]",
                f.grid().y_min(),
                f.grid().y_max()
            )));
        }
        Ok(interp::lagrange4(f, t))
    }

    /// Five-point derivative of a time function.
    fn rate(f: &TimeFn, t: f64) -> f64 {
        let d = 2e-4;
        (f(t - 2.0 * d) - 8.0 * f(t - d) + 8.0 * f(t + d) - f(t + 2.0 * d)) / (12.0 * d)
    }
}

pub fn general_transform(
    spec: &GeneralMapSpec,
    psi: impl Fn(f64) -> f64,
    v2: impl Fn(f64) -> f64,
    x: f64,
    t: f64,
) -> Result<GeneralMapValue> {
    let ia = spec.table(&spec.int_a, t)?;
    let stretch = (4.0 * ia).exp();
    let y = x * stretch + 2.0 * spec.table(&spec.int_b_stretch, t)?;
    let (a, b) = ((spec.a)(t), (spec.b)(t));
    let real_phase = a * x * x
        + b * x
        + spec.energy * spec.table(&spec.int_stretch_sq, t)?
        + spec.table(&spec.int_b_sq, t)?;
    // the imaginary part of the phase integral, -i (2i ∫A), is a real
    // amplitude factor exp(2 ∫A)
    let amplitude = (2.0 * ia).exp();
    let phi = Complex64::from_polar(psi(y) * amplitude, -real_phase);
    let quadratic = GeneralMapSpec::rate(&spec.a, t) - 4.0 * a * a;
    let linear = GeneralMapSpec::rate(&spec.b, t) - 4.0 * a * b;
    let potential = stretch * stretch * v2(y) + quadratic * x * x + linear * x;
    Ok(GeneralMapValue {
        y,
        phi,
        potential,
        quadratic,
        linear,
    })
}

/// Finite-difference steps for [`tdse_residual`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSteps {
    pub hx: f64,
    pub ht: f64,
}

impl Default for ResidualSteps {
    fn default() -> Self {
        Self { hx: 1e-3, ht: 1e-5 }
    }
}

/// `max |i phi_t + phi_xx - V phi|` over the given `(x, t)` points, with
/// five-point stencils in both variables.
pub fn tdse_residual(
    phi: impl Fn(f64, f64) -> Complex64,
    v: impl Fn(f64, f64) -> f64,
    points: &[(f64, f64)],
    steps: ResidualSteps,
) -> f64 {
    let ResidualSteps { hx, ht } = steps;
    points
        .iter()
        .map(|&(x, t)| {
            let p0 = phi(x, t);
            let dt = (phi(x, t - 2.0 * ht) - phi(x, t - ht) * 8.0 + phi(x, t + ht) * 8.0
                - phi(x, t + 2.0 * ht))
                / (12.0 * ht);
            let dxx = (-phi(x - 2.0 * hx, t) + phi(x - hx, t) * 16.0 - p0 * 30.0
                + phi(x + hx, t) * 16.0
                - phi(x + 2.0 * hx, t))
                / (12.0 * hx * hx);
            (Complex64::i() * dt + dxx - p0 * v(x, t)).norm()
        })
        .fold(0.0, f64::max)
}
