//! Freezing a time-dependent potential at `t_F`, the gauge phase that
//! turns the frozen slice into a stationary eigenstate, and time reversal.
//!
//! For `t >= t_F` the potential stays at `V(x, t_F)`. A transformed state
//! `phi(x, t_F) = s_F^{-1/2} psi(y_F) e^{i g(x)}` solves the eigenproblem of
//! `(-i d/dx + A_x)² + V(x, t_F)` with `A_x = -g'`, and after the gauge factor
//! `e^{-i g}` is removed it evolves as a plain eigenstate with energy
//! `E / s_F²`.

use num_complex::Complex64;

use crate::diff;
use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField};
use crate::point_transform::PointMapConstants;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreezeSpec {
    t_freeze: f64,
    constants: PointMapConstants,
}

impl FreezeSpec {
    pub fn new(t_freeze: f64, constants: PointMapConstants) -> Result<Self> {
        if !(t_freeze > 0.0 && t_freeze.is_finite()) {
            return Err(Error::Domain(format!("freeze time t_F = {t_freeze} must be positive")));
        }
        constants.positive_scale(t_freeze)?;
        if constants.c1 <= 0.0 {
            // a singular time would lie inside [0, t_F]
            constants.positive_scale(0.0)?;
        }
        Ok(Self {
            t_freeze,
            constants,
        })
    }

    pub fn t_freeze(&self) -> f64 {
        self.t_freeze
    }

    pub fn constants(&self) -> &PointMapConstants {
        &self.constants
    }

    /// `s_F = 4 t_F + c1`.
    pub fn scale(&self) -> f64 {
        4.0 * self.t_freeze + self.constants.c1
    }

    /// `E / s_F²`, the energy of a frozen state.
    pub fn frozen_energy(&self, energy: f64) -> f64 {
        energy / self.scale().powi(2)
    }

    /// `y_F = (2x - c2) / (2 s_F)`.
    pub fn frozen_coordinate(&self, x: f64) -> f64 {
        (2.0 * x - self.constants.c2) / (2.0 * self.scale())
    }
}

/// `g(x) = (x² - c2 x + (E + c2²)/4) / s_F`.
pub fn gauge_phase(x: f64, energy: f64, f: &FreezeSpec) -> f64 {
    f.constants.phase(x, energy, f.scale())
}

/// `A_x(x) = -g'(x) = -(2x - c2) / s_F`.
pub fn vector_potential(x: f64, f: &FreezeSpec) -> f64 {
    -(2.0 * x - f.constants.c2) / f.scale()
}

/// The full vector potential `(A_x(x), 0, 0)` at a point in space.
pub fn vector_potential_3d(point: [f64; 3], f: &FreezeSpec) -> [f64; 3] {
    [vector_potential(point[0], f), 0.0, 0.0]
}

/// `∇ × A` by central differences of [`vector_potential_3d`].
pub fn magnetic_field(point: [f64; 3], f: &FreezeSpec) -> [f64; 3] {
    let h = 1e-4;
    let partial = |component: usize, axis: usize| {
        let (mut lo, mut hi) = (point, point);
        lo[axis] -= h;
        hi[axis] += h;
        (vector_potential_3d(hi, f)[component] - vector_potential_3d(lo, f)[component]) / (2.0 * h)
    };
    [
        partial(2, 1) - partial(1, 2),
        partial(0, 2) - partial(2, 0),
        partial(1, 0) - partial(0, 1),
    ]
}

/// `V(x, t)` before `t_F`, `V(x, t_F)` from then on.
pub fn frozen_potential<V>(v: V, x: f64, t: f64, f: &FreezeSpec) -> Result<f64>
where
    V: Fn(f64, f64) -> Result<f64>,
{
    v(x, t.min(f.t_freeze))
}

/// `phi(x, t)` before `t_F`; afterwards the gauge-free frozen branch
/// `s_F^{-1/2} psi(y_F) exp(-i E (t - t_F) / s_F²)`, which coincides with
/// `e^{-i g} phi(x, t_F)` at `t = t_F`.
pub fn frozen_state<P, S>(
    psi: S,
    phi: P,
    energy: f64,
    x: f64,
    t: f64,
    f: &FreezeSpec,
) -> Result<Complex64>
where
    S: Fn(f64) -> f64,
    P: Fn(f64, f64) -> Result<Complex64>,
{
    if t < f.t_freeze {
        return phi(x, t);
    }
    let s = f.scale();
    let amplitude = psi(f.frozen_coordinate(x)) / s.sqrt();
    Ok(Complex64::from_polar(
        amplitude,
        -f.frozen_energy(energy) * (t - f.t_freeze),
    ))
}

/// Sup-norm over interior nodes of
/// `[(-i d/dx + A_x)² + V - E/s_F²] phi`.
pub fn magnetic_residual(
    phi: &ComplexField,
    v: &RealField,
    energy: f64,
    f: &FreezeSpec,
) -> Result<f64> {
    phi.ensure_same_grid(v.grid())?;
    let d1 = diff::first_derivative(phi);
    let d2 = diff::second_derivative(phi);
    let g = phi.grid();
    let n = phi.len();
    let da = -2.0 / f.scale();
    let eps = f.frozen_energy(energy);
    let i = Complex64::i();
    Ok((2..n.saturating_sub(2))
        .map(|j| {
            let a = vector_potential(g.node(j), f);
            let p = phi.values()[j];
            let r = -d2.values()[j] - i * 2.0 * a * d1.values()[j] - i * da * p
                + p * (a * a + v.values()[j] - eps);
            r.norm()
        })
        .fold(0.0, f64::max))
}

/// `e^{-i g(x)} phi(x)`.
pub fn remove_gauge(phi: &ComplexField, energy: f64, f: &FreezeSpec) -> ComplexField {
    phi.map_with_y(|x, p| p * Complex64::from_polar(1.0, -gauge_phase(x, energy, f)))
}

/// Plain stationary residual of the gauge-removed slice at `E / s_F²`.
pub fn gauge_removed_residual(
    phi: &ComplexField,
    v: &RealField,
    energy: f64,
    f: &FreezeSpec,
) -> Result<f64> {
    diff::stationary_residual(v, &remove_gauge(phi, energy, f), f.frozen_energy(energy))
}

/// `(x, t) -> conj(phi(x, -t))` and `(x, t) -> V(x, -t)`.
pub fn time_reversal<P, V>(
    phi: P,
    v: V,
) -> (
    impl Fn(f64, f64) -> Result<Complex64>,
    impl Fn(f64, f64) -> Result<f64>,
)
where
    P: Fn(f64, f64) -> Result<Complex64>,
    V: Fn(f64, f64) -> Result<f64>,
{
    (
        move |x: f64, t: f64| phi(x, -t).map(|p| p.conj()),
        move |x: f64, t: f64| v(x, -t),
    )
}

/// Time-reversed frozen scenario shifted so it starts at `s = 0`:
/// `V_R(x, s) = V_F(x, t_F - s)` and `phi_R(x, s) = conj(phi_F(x, t_F - s))`.
/// It is frozen for `s <= 0`, starts from the flat slice `V(x, t_F)` and
/// reaches `V(x, 0)` at `s = t_F`.
pub fn reversed_scenario<P, V>(
    phi_frozen: P,
    v_frozen: V,
    f: &FreezeSpec,
) -> (
    impl Fn(f64, f64) -> Result<Complex64>,
    impl Fn(f64, f64) -> Result<f64>,
)
where
    P: Fn(f64, f64) -> Result<Complex64>,
    V: Fn(f64, f64) -> Result<f64>,
{
    let t_f = f.t_freeze;
    let (phi_r, v_r) = time_reversal(phi_frozen, v_frozen);
    (
        move |x: f64, s: f64| phi_r(x, s - t_f),
        move |x: f64, s: f64| v_r(x, s - t_f),
    )
}

/// Variance of the samples of a field, a measure of how much a potential
/// profile varies across the grid.
pub fn spatial_variance(v: &RealField) -> f64 {
    let n = v.len() as f64;
    let mean = v.values().iter().sum::<f64>() / n;
    v.values().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::models::{bic_closed, scattering_closed, v2_closed, FreeParticleBicModel};
    use crate::point_transform::{
        tdse_residual, transform_potential, transform_wavefunction, ResidualSteps,
    };
    use crate::quadrature;

    fn setup() -> (FreeParticleBicModel, FreezeSpec) {
        let m = FreeParticleBicModel::new(1.0, 1.0, 1.0).unwrap();
        (m, FreezeSpec::new(0.2, PointMapConstants::default()).unwrap())
    }

    #[test]
    fn spec_validation() {
        let c = PointMapConstants::default();
        assert!(FreezeSpec::new(0.0, c).is_err());
        assert!(FreezeSpec::new(-0.5, c).is_err());
        let bad = PointMapConstants::new(-1.0, 0.0).unwrap();
        assert!(FreezeSpec::new(0.5, bad).is_err());
    }

    #[test]
    fn gauge_phase_examples() {
        let (_, f) = setup();
        assert!((gauge_phase(0.0, 1.0, &f) - 0.25 / 1.8).abs() < 1e-15);
        assert!((gauge_phase(0.0, 1.0, &f) - 0.13889).abs() < 1e-5);
        let f2 = FreezeSpec::new(0.3, PointMapConstants::new(1.0, 1.4).unwrap()).unwrap();
        assert_eq!(vector_potential(0.7, &f2), 0.0);
        for &x in &[-2.0, 0.3, 5.5] {
            let h = 1e-5;
            let dg = (gauge_phase(x + h, 2.0, &f2) - gauge_phase(x - h, 2.0, &f2)) / (2.0 * h);
            assert!((vector_potential(x, &f2) + dg).abs() < 1e-8);
            assert_eq!(magnetic_field([x, 0.4, -1.0], &f2), [0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn frozen_energy_value() {
        let (_, f) = setup();
        assert!((f.frozen_energy(1.0) - 1.0 / 3.24).abs() < 1e-15);
        assert!((f.frozen_energy(1.0) - 0.308642).abs() < 1e-6);
    }

    fn pieces(
        m: FreeParticleBicModel,
        c: PointMapConstants,
    ) -> (
        impl Fn(f64, f64) -> Result<f64> + Copy,
        impl Fn(f64, f64) -> Result<Complex64> + Copy,
    ) {
        (
            move |x: f64, t: f64| transform_potential(|y| v2_closed(y, &m), x, t, &c),
            move |x: f64, t: f64| transform_wavefunction(|y| bic_closed(y, &m), 1.0, x, t, &c),
        )
    }

    #[test]
    fn frozen_potential_examples() {
        let (m, f) = setup();
        let c = *f.constants();
        let (v, _) = pieces(m, c);
        for i in 0..100 {
            let x = 0.3 * i as f64;
            let at_f = frozen_potential(v, x, 0.2, &f).unwrap();
            assert_eq!(at_f, frozen_potential(v, x, 5.2, &f).unwrap());
            assert_eq!(frozen_potential(v, x, 0.15, &f).unwrap(), v(x, 0.15).unwrap());
            assert_eq!(frozen_potential(v, x, 0.3, &f).unwrap(), v(x, 0.2).unwrap());
            let before = frozen_potential(v, x, 0.2 - 1e-9, &f).unwrap();
            assert!((before - at_f).abs() < 1e-7);
        }
    }

    #[test]
    fn frozen_branch_is_stationary_and_continuous() {
        let (m, f) = setup();
        let (_, phi) = pieces(m, *f.constants());
        let psi = |y| bic_closed(y, &m);
        let eps_f = f.frozen_energy(1.0);
        for i in 1..100 {
            let x = 0.2 * i as f64;
            let at = |t| frozen_state(psi, phi, 1.0, x, t, &f).unwrap();
            let d0 = at(0.2).norm_sqr();
            for &s in &[0.1, 1.0, 7.5] {
                assert!((at(0.2 + s).norm_sqr() - d0).abs() < 1e-15);
            }
            // density continuity and exact gauge relation at t_F
            let slice = phi(x, 0.2).unwrap();
            assert!((slice.norm_sqr() - d0).abs() < 1e-15);
            let gauged = slice * Complex64::from_polar(1.0, -gauge_phase(x, 1.0, &f));
            assert!((gauged - at(0.2)).norm() < 1e-14);
            // i d/dt phi = eps_F phi on the frozen branch
            let (t, h) = (0.7, 1e-5);
            let dt = (at(t + h) - at(t - h)) / (2.0 * h);
            assert!((Complex64::i() * dt - at(t) * eps_f).norm() < 1e-8);
        }
    }

    #[test]
    fn slice_solves_vector_potential_eigenproblem() {
        let (m, f) = setup();
        let c = *f.constants();
        let (v, phi) = pieces(m, c);
        let err = |n: usize| {
            let g = Grid::new(0.0, 40.0, n).unwrap();
            let slice: ComplexField = g.sample(|x| phi(x, 0.2).unwrap());
            let vs = g.sample(|x| v(x, 0.2).unwrap());
            (
                magnetic_residual(&slice, &vs, 1.0, &f).unwrap(),
                gauge_removed_residual(&slice, &vs, 1.0, &f).unwrap(),
            )
        };
        let (coarse, _) = err(20_001);
        let (fine, plain) = err(40_001);
        assert!(fine < 1e-4 && plain < 1e-4, "{fine} {plain}");
        assert!(coarse / fine > 8.0, "{coarse} {fine}");
        let g = Grid::new(0.0, 40.0, 4001).unwrap();
        let vs = g.sample(|x| v(x, 0.2).unwrap());
        assert_eq!(magnetic_residual(&ComplexField::zeros(g), &vs, 1.0, &f).unwrap(), 0.0);
    }

    #[test]
    fn time_reversed_pair_solves_tdse() {
        let (m, f) = setup();
        let (v, phi) = pieces(m, *f.constants());
        let (phi_r, v_r) = time_reversal(phi, v);
        let points: Vec<(f64, f64)> = (1..60)
            .flat_map(|i| [-0.15, -0.05].map(|t| (0.15 * i as f64, t)))
            .collect();
        let r = tdse_residual(
            |x, t| phi_r(x, t).unwrap(),
            |x, t| v_r(x, t).unwrap(),
            &points,
            ResidualSteps::default(),
        );
        assert!(r < 1e-4, "{r}");
        for &(x, t) in &points {
            assert_eq!(phi_r(x, t).unwrap().norm_sqr(), phi(x, -t).unwrap().norm_sqr());
        }
    }

    #[test]
    fn reversed_scenario_starts_flat() {
        let (m, f) = setup();
        let (v, phi) = pieces(m, *f.constants());
        let psi = |y| bic_closed(y, &m);
        let vf = move |x, t| frozen_potential(v, x, t, &f);
        let pf = move |x, t| frozen_state(psi, phi, 1.0, x, t, &f);
        let (phi_r, v_r) = reversed_scenario(pf, vf, &f);
        let g = Grid::new(0.0, 40.0, 4001).unwrap();
        let start = g.sample(|x| v_r(x, 0.0).unwrap());
        let end = g.sample(|x| v_r(x, 0.2).unwrap());
        assert!(spatial_variance(&start) < spatial_variance(&end));
        assert_eq!(end, g.sample(|x| v(x, 0.0).unwrap()));
        let frozen_past = g.sample(|x| v_r(x, -3.0).unwrap());
        assert_eq!(frozen_past, start);
        let d = (phi_r(1.3, 0.05).unwrap() - phi(1.3, 0.15).unwrap().conj()).norm();
        assert!(d < 1e-15);
    }

    #[test]
    fn scattering_states_stay_spread_after_freezing() {
        let (m, f) = setup();
        let q = 2f64.sqrt();
        let c = *f.constants();
        let psi = |y| scattering_closed(y, q, &m).unwrap();
        let phi = |x, t| transform_wavefunction(psi, 2.0, x, t, &c);
        let g = Grid::new(0.0, 400.0, 40_001).unwrap();
        for &t in &[0.2, 0.5, 2.0] {
            let d: ComplexField = g.sample(|x| frozen_state(psi, phi, 2.0, x, t, &f).unwrap());
            let fraction = quadrature::integrate_between(&d.density(), 0.0, 20.0)
                / quadrature::l2_norm_sq(&d);
            assert!(fraction < 0.2, "{fraction}");
        }
    }
}
