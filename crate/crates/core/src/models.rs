//! Closed forms for the free-particle example on the half line, envelope
//! fits, and tail diagnostics for potentials and bound states.

use crate::diff;
use crate::error::{Error, Result};
use crate::field::{Field, RealField, Sample};
use crate::quadrature;

/// Confluent partner of the free particle on `y > 0` with seed `sin(ky)`,
/// `y0 = 0` and integration constant `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeParticleBicModel {
    k: f64,
    omega: f64,
    c: f64,
}

impl FreeParticleBicModel {
    pub fn new(k: f64, omega: f64, c: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("wavenumber k = {k} must be positive")));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Regularity {
                position: 0.0,
                min_abs: omega.abs(),
                max_abs: f64::INFINITY,
            });
        }
        if !c.is_finite() {
            return Err(Error::Domain(format!("amplitude C = {c} must be finite")));
        }
        Ok(Self { k, omega, c })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn amplitude(&self) -> f64 {
        self.c
    }

    /// Factorization energy `k²`.
    pub fn epsilon(&self) -> f64 {
        self.k * self.k
    }

    pub fn with_amplitude(&self, c: f64) -> Self {
        Self { c, ..*self }
    }

    /// `2k(2 omega + y) - sin(2ky)`, positive for `y >= 0`.
    fn denominator(&self, y: f64) -> f64 {
        2.0 * self.k * (2.0 * self.omega + y) - (2.0 * self.k * y).sin()
    }

    /// `C` that gives the bound state unit norm on the half line.
    ///
    /// The integral over `[0, Y]` is taken by Simpson on a fine grid and the
    /// tail beyond `Y` from its averaged asymptotic form `2/(y + 2 omega)²`.
    pub fn unit_amplitude(&self) -> f64 {
        let span = 400.0 / self.k;
        let grid = crate::field::Grid::new(0.0, span, 400_001).expect("static grid");
        let unit = self.with_amplitude(1.0);
        let density = grid.sample(|y| bic_closed(y, &unit).powi(2));
        let tail = 2.0 / (span + 2.0 * self.omega);
        1.0 / (quadrature::integrate(&density) + tail).sqrt()
    }
}

/// `V2(y)`. The numerator is written as `2 sin²(ky) - k(2 omega + y) sin(2ky)`
/// so it vanishes exactly at `y = 0`.
pub fn v2_closed(y: f64, model: &FreeParticleBicModel) -> f64 {
    let k = model.k;
    let d = model.denominator(y);
    let s = (k * y).sin();
    16.0 * k * k * (2.0 * s * s - k * (2.0 * model.omega + y) * (2.0 * k * y).sin()) / (d * d)
}

/// The added bound state `C 4k sin(ky) / (2k(2 omega + y) - sin(2ky))`.
pub fn bic_closed(y: f64, model: &FreeParticleBicModel) -> f64 {
    model.c * 4.0 * model.k * (model.k * y).sin() / model.denominator(y)
}

/// Slope of [`bic_closed`].
pub fn bic_closed_slope(y: f64, model: &FreeParticleBicModel) -> f64 {
    let k = model.k;
    let d = model.denominator(y);
    let dd = 2.0 * k - 2.0 * k * (2.0 * k * y).cos();
    model.c * 4.0 * k * (k * (k * y).cos() * d - (k * y).sin() * dd) / (d * d)
}

/// Scattering state of `V2` at energy `q²`.
pub fn scattering_closed(y: f64, q: f64, model: &FreeParticleBicModel) -> Result<f64> {
    let k = model.k;
    ensure_distinct(q, k)?;
    let (s, c) = (k * y).sin_cos();
    Ok(4.0 * k * s * (k * c * (q * y).sin() - q * s * (q * y).cos())
        / ((q * q - k * k) * model.denominator(y))
        - (q * y).sin())
}

/// Slope of [`scattering_closed`].
pub fn scattering_closed_slope(y: f64, q: f64, model: &FreeParticleBicModel) -> Result<f64> {
    let k = model.k;
    ensure_distinct(q, k)?;
    let (s, c) = (k * y).sin_cos();
    let (sq, cq) = (q * y).sin_cos();
    let d = model.denominator(y);
    let dd = 2.0 * k - 2.0 * k * (2.0 * k * y).cos();
    let num = s * (k * c * sq - q * s * cq);
    let dnum = k * c * (k * c * sq - q * s * cq)
        + s * (-k * k * s * sq + k * q * c * cq - q * k * c * cq + q * q * s * sq);
    Ok(4.0 * k * (dnum * d - num * dd) / ((q * q - k * k) * d * d) - q * cq)
}

/// Seed of the second step in the two-level chain: the once-transformed
/// scattering state at `k2²`.
pub fn second_seed_closed(y: f64, k1: f64, k2: f64, omega1: f64) -> Result<f64> {
    let model = FreeParticleBicModel::new(k1, omega1, 1.0)?;
    scattering_closed(y, k2, &model)
}

fn ensure_distinct(q: f64, k: f64) -> Result<()> {
    if (q * q - k * k).abs() <= 1e-12 * (1.0 + k * k) {
        return Err(Error::DegenerateEnergy {
            energy: q * q,
            epsilon: k * k,
        });
    }
    Ok(())
}

/// Envelope `a / (b + y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeFit {
    pub a: f64,
    pub b: f64,
}

impl EnvelopeFit {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Domain(format!("envelope needs a, b > 0 (a = {a}, b = {b})")));
        }
        Ok(Self { a, b })
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.a / (self.b + y)
    }

    /// `max |psi(y)| / envelope(y)` over the grid; at most 1 when the bound holds.
    pub fn worst_ratio<T: Sample>(&self, psi: &Field<T>) -> f64 {
        psi.grid()
            .nodes()
            .zip(psi.values())
            .map(|(y, v)| v.modulus() / self.eval(y).abs())
            .fold(0.0, f64::max)
    }

    pub fn bounds<T: Sample>(&self, psi: &Field<T>) -> bool {
        self.worst_ratio(psi) <= 1.0
    }

    /// Smallest-area envelope that dominates `psi` at every node.
    ///
    /// For each `b` on a log-spaced scan the least feasible `a` is
    /// `max |psi|(b + y)`; the scan keeps the `b` minimizing the envelope's
    /// squared norm `a²/b` on the half line.
    pub fn fit<T: Sample>(psi: &Field<T>) -> Result<Self> {
        let g = psi.grid();
        if g.y_min() < 0.0 {
            return Err(Error::Domain("envelope fits need y >= 0".into()));
        }
        let span = g.y_max();
        let (lo, hi, count) = ((1e-3 * span).ln(), (10.0 * span).ln(), 600);
        let mut best: Option<(f64, Self)> = None;
        for j in 0..=count {
            let b = (lo + (hi - lo) * j as f64 / count as f64).exp();
            let a = g
                .nodes()
                .zip(psi.values())
                .map(|(y, v)| v.modulus() * (b + y))
                .fold(0.0, f64::max);
            if a == 0.0 {
                continue;
            }
            let cost = a * a / b;
            if best.is_none_or(|(c, _)| cost < c) {
                best = Some((cost, Self { a, b }));
            }
        }
        best.map(|(_, fit)| fit)
            .ok_or_else(|| Error::Numeric("no positive envelope: state vanishes".into()))
    }
}

/// Truncated-domain proxies for the tail integrability conditions on a
/// potential.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    /// `∫ |V'|²` over `[tail_start, y_max]`.
    pub gradient_sq: f64,
    /// `∫ |V''|` over `[tail_start, y_max]`.
    pub curvature: f64,
    /// Same integrals with the upper limit halved.
    pub gradient_sq_half: f64,
    pub curvature_half: f64,
    pub gradient_converged: bool,
    pub curvature_converged: bool,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.gradient_converged && self.curvature_converged
    }
}

/// Relative change allowed between the integrals to `Y/2` and `Y`.
pub const CAUCHY_TOL: f64 = 0.01;

pub fn admissibility_check(v0: &RealField, tail_start: f64) -> Result<AdmissibilityReport> {
    let g = v0.grid();
    if !g.contains(tail_start) {
        return Err(Error::Domain(format!("tail start {tail_start} outside the grid")));
    }
    let d1 = diff::first_derivative(v0).map(|v| v * v);
    let d2 = diff::second_derivative(v0).map(f64::abs);
    let half = (0.5 * g.y_max()).max(tail_start);
    let gradient_sq = quadrature::integrate_between(&d1, tail_start, g.y_max());
    let curvature = quadrature::integrate_between(&d2, tail_start, g.y_max());
    let gradient_sq_half = quadrature::integrate_between(&d1, tail_start, half);
    let curvature_half = quadrature::integrate_between(&d2, tail_start, half);
    let settled = |full: f64, part: f64| (full - part).abs() <= CAUCHY_TOL * full.abs().max(1e-300);
    Ok(AdmissibilityReport {
        gradient_sq,
        curvature,
        gradient_sq_half,
        curvature_half,
        gradient_converged: settled(gradient_sq, gradient_sq_half),
        curvature_converged: settled(curvature, curvature_half),
    })
}

/// Settings for [`tail_validator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailOptions {
    /// Bound on `|V - V_r|` over the last tenth of the grid.
    pub potential_bound: f64,
    /// A fitted envelope counts as decaying when `b <= decay_fraction * y_max`,
    /// i.e. it falls by at least `1 + 1/decay_fraction` across the grid.
    pub decay_fraction: f64,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self {
            potential_bound: 0.1,
            decay_fraction: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub potential_tail: f64,
    pub potential_ok: bool,
    pub envelope: Option<EnvelopeFit>,
    pub envelope_ok: bool,
}

impl TailReport {
    pub fn passed(&self) -> bool {
        self.potential_ok && self.envelope_ok
    }
}

pub fn tail_validator(
    v2: &RealField,
    psi_bic: &RealField,
    v_r: f64,
    options: TailOptions,
) -> Result<TailReport> {
    psi_bic.ensure_same_grid(v2.grid())?;
    let g = v2.grid();
    let start = g.y_max() - 0.1 * (g.y_max() - g.y_min());
    let potential_tail = g
        .nodes()
        .zip(v2.values())
        .filter(|&(y, _)| y >= start)
        .map(|(_, v)| (v - v_r).abs())
        .fold(0.0, f64::max);
    let envelope = EnvelopeFit::fit(psi_bic).ok();
    let envelope_ok = envelope
        .map(|e| e.b <= options.decay_fraction * g.y_max() && e.bounds(psi_bic))
        .unwrap_or(false);
    Ok(TailReport {
        potential_tail,
        potential_ok: potential_tail < options.potential_bound,
        envelope,
        envelope_ok,
    })
}
