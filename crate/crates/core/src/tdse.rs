//! Crank–Nicolson propagation of `i dφ/dt = -φ'' + V(x, t) φ` on a finite
//! interval with Dirichlet ends.
//!
//! The Laplacian is the three-point stencil, so both the grid spacing and
//! the time step enter at second order. The discrete propagator is a Cayley
//! transform of a Hermitian matrix and preserves `h Σ|φ_j|²` up to roundoff.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid, RealField};
use crate::freeze_gauge::{self, FreezeSpec};

/// What to do when `|φ|` next to the far boundary exceeds the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeakPolicy {
    Abort,
    /// Stop and return the trajectory recorded so far.
    Truncate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Dirichlet,
}

/// Discretization of `d²/dx²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Laplacian {
    /// `δ²/h²`, second order.
    #[default]
    ThreePoint,
    /// Compact `(1 + δ²/12)^{-1} δ²/h²`, fourth order. Still tridiagonal
    /// and Hermitian.
    Numerov,
}

impl Laplacian {
    fn mass_weights(self) -> (f64, f64) {
        match self {
            Laplacian::ThreePoint => (0.0, 1.0),
            Laplacian::Numerov => (1.0 / 12.0, 10.0 / 12.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorConfig {
    pub grid: Grid,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub boundary: Boundary,
    pub laplacian: Laplacian,
    /// Start a frozen run from `e^{-ig} φ(·, t_F)` instead of the raw slice.
    pub frozen_gauge_removed: bool,
    pub leak_threshold: f64,
    pub leak_policy: LeakPolicy,
    /// Record a snapshot every this many steps. The first and last states
    /// are always recorded.
    pub output_every: usize,
}

impl PropagatorConfig {
    pub fn new(grid: Grid, dt: f64, t_start: f64, t_end: f64) -> Result<Self> {
        let cfg = Self {
            grid,
            dt,
            t_start,
            t_end,
            boundary: Boundary::Dirichlet,
            laplacian: Laplacian::ThreePoint,
            frozen_gauge_removed: true,
            leak_threshold: 0.1,
            leak_policy: LeakPolicy::Abort,
            output_every: 100,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Domain(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end > self.t_start && self.t_end.is_finite() && self.t_start.is_finite()) {
            return Err(Error::Domain(format!(
                "time window [{}, {}] is empty",
                self.t_start, self.t_end
            )));
        }
        if self.grid.len() < 3 {
            return Err(Error::InvalidGrid("propagation needs at least 3 nodes".into()));
        }
        if !(self.leak_threshold > 0.0) {
            return Err(Error::Domain("leak threshold must be positive".into()));
        }
        if self.output_every == 0 {
            return Err(Error::Domain("output_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt).round() as usize
    }
}

/// Source of the potential on the propagation grid.
pub trait PotentialSource {
    fn fill(&self, t: f64, grid: &Grid, out: &mut [f64]) -> Result<()>;

    /// True when the potential does not depend on time.
    fn is_static(&self) -> bool {
        false
    }
}

impl PotentialSource for RealField {
    fn fill(&self, _t: f64, grid: &Grid, out: &mut [f64]) -> Result<()> {
        self.ensure_same_grid(grid)?;
        out.copy_from_slice(self.values());
        Ok(())
    }

    fn is_static(&self) -> bool {
        true
    }
}

/// Pointwise potential `V(x, t)`.
pub struct PotentialFn<F>(pub F);

impl<F> PotentialSource for PotentialFn<F>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    fn fill(&self, t: f64, grid: &Grid, out: &mut [f64]) -> Result<()> {
        for (slot, x) in out.iter_mut().zip(grid.nodes()) {
            *slot = (self.0)(x, t)?;
        }
        Ok(())
    }
}

/// Owns the work arrays of one run.
pub struct Propagator {
    grid: Grid,
    v_half: Vec<f64>,
    rhs: Vec<Complex64>,
    c_prime: Vec<Complex64>,
}

impl Propagator {
    pub fn new(grid: Grid) -> Self {
        let n = grid.len();
        Self {
            grid,
            v_half: vec![0.0; n],
            rhs: vec![Complex64::new(0.0, 0.0); n],
            c_prime: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// One step with the half-step potential already in `v_half`.
    ///
    /// Solves `(B + a M) φ' = (B - a M) φ` with `a = i dt / 2` and
    /// `M = -δ²/h² + B V`, where `B` is the identity for the three-point
    /// stencil and `(1, 10, 1)/12` for Numerov.
    fn advance(&mut self, phi: &mut [Complex64], dt: f64, laplacian: Laplacian) -> Result<()> {
        let n = phi.len();
        let h2 = self.grid.spacing().powi(2);
        let a = Complex64::new(0.0, dt / 2.0);
        let (b_off, b_diag) = laplacian.mass_weights();
        let v = &self.v_half;
        // entries of M in row j
        let m_off = |k: usize| -1.0 / h2 + b_off * v[k];
        let m_diag = |k: usize| 2.0 / h2 + b_diag * v[k];
        let rhs = &mut self.rhs;
        rhs[0] = Complex64::new(0.0, 0.0);
        rhs[n - 1] = Complex64::new(0.0, 0.0);
        for j in 1..n - 1 {
            rhs[j] = phi[j - 1] * (b_off - a * m_off(j - 1))
                + phi[j] * (b_diag - a * m_diag(j))
                + phi[j + 1] * (b_off - a * m_off(j + 1));
        }
        // Thomas elimination on interior rows, Dirichlet zeros at the ends
        let cp = &mut self.c_prime;
        let mut prev_c = Complex64::new(0.0, 0.0);
        let mut prev_d = Complex64::new(0.0, 0.0);
        for j in 1..n - 1 {
            let lower = b_off + a * m_off(j - 1);
            let upper = b_off + a * m_off(j + 1);
            let denom = b_diag + a * m_diag(j) - lower * prev_c;
            if denom.norm() < 1e-300 || !denom.is_finite() {
                return Err(Error::SolverBreakdown { row: j });
            }
            prev_c = upper / denom;
            prev_d = (rhs[j] - lower * prev_d) / denom;
            cp[j] = prev_c;
            rhs[j] = prev_d;
        }
        phi[n - 1] = Complex64::new(0.0, 0.0);
        let mut next = Complex64::new(0.0, 0.0);
        for j in (1..n - 1).rev() {
            next = rhs[j] - cp[j] * next;
            phi[j] = next;
        }
        phi[0] = Complex64::new(0.0, 0.0);
        Ok(())
    }
}

/// One Crank–Nicolson step with `H = -d² + (V_now + V_next)/2` and the
/// three-point Laplacian.
pub fn step(
    phi: &ComplexField,
    v_now: &RealField,
    v_next: &RealField,
    dt: f64,
) -> Result<ComplexField> {
    step_with(phi, v_now, v_next, dt, Laplacian::ThreePoint)
}

pub fn step_with(
    phi: &ComplexField,
    v_now: &RealField,
    v_next: &RealField,
    dt: f64,
    laplacian: Laplacian,
) -> Result<ComplexField> {
    phi.ensure_same_grid(v_now.grid())?;
    phi.ensure_same_grid(v_next.grid())?;
    if phi.len() < 3 {
        return Err(Error::InvalidGrid("propagation needs at least 3 nodes".into()));
    }
    let mut p = Propagator::new(*phi.grid());
    for (slot, (a, b)) in p
        .v_half
        .iter_mut()
        .zip(v_now.values().iter().zip(v_next.values()))
    {
        *slot = 0.5 * (a + b);
    }
    let mut out = phi.clone();
    p.advance(out.values_mut(), dt, laplacian)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexField>,
    /// `‖φ‖²` at each recorded time.
    pub norms: Vec<f64>,
    /// `|φ|` at the last interior node at each recorded time.
    pub leaks: Vec<f64>,
    /// Set when a leak stopped the run early.
    pub truncated_at: Option<f64>,
}

impl Trajectory {
    pub fn densities(&self) -> Vec<RealField> {
        self.states.iter().map(|s| s.density()).collect()
    }

    /// Largest relative change of the norm from its initial value.
    pub fn norm_drift(&self) -> f64 {
        let n0 = self.norms[0];
        self.norms
            .iter()
            .map(|n| ((n - n0) / n0).abs())
            .fold(0.0, f64::max)
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one state")
    }

    pub fn index_of(&self, t: f64, tol: f64) -> Option<usize> {
        self.times.iter().position(|s| (s - t).abs() <= tol)
    }
}

fn discrete_norm(phi: &[Complex64], h: f64) -> f64 {
    h * phi.iter().map(|p| p.norm_sqr()).sum::<f64>()
}

/// Propagates `phi0` from `cfg.t_start` to `cfg.t_end`.
pub fn evolve<P: PotentialSource + ?Sized>(
    phi0: &ComplexField,
    potential: &P,
    cfg: &PropagatorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    phi0.ensure_same_grid(&cfg.grid)?;
    let grid = &cfg.grid;
    let n = grid.len();
    let h = grid.spacing();
    let mut prop = Propagator::new(*grid);
    let mut phi = phi0.values().to_vec();
    phi[0] = Complex64::new(0.0, 0.0);
    phi[n - 1] = Complex64::new(0.0, 0.0);

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        norms: Vec::new(),
        leaks: Vec::new(),
        truncated_at: None,
    };
    let record = |traj: &mut Trajectory, t: f64, phi: &[Complex64]| -> Result<()> {
        traj.times.push(t);
        traj.states.push(ComplexField::new(*grid, phi.to_vec())?);
        traj.norms.push(discrete_norm(phi, h));
        traj.leaks.push(phi[n - 2].norm());
        Ok(())
    };
    record(&mut traj, cfg.t_start, &phi)?;

    let mut v_now = vec![0.0; n];
    let mut v_next = vec![0.0; n];
    potential.fill(cfg.t_start, grid, &mut v_now)?;
    let is_static = potential.is_static();
    if is_static {
        v_next.copy_from_slice(&v_now);
        prop.v_half.copy_from_slice(&v_now);
    }
    let steps = cfg.steps();
    for k in 1..=steps {
        let t = cfg.t_start + k as f64 * cfg.dt;
        if !is_static {
            potential.fill(t, grid, &mut v_next)?;
            for j in 0..n {
                prop.v_half[j] = 0.5 * (v_now[j] + v_next[j]);
            }
        }
        prop.advance(&mut phi, cfg.dt, cfg.laplacian)?;
        if !is_static {
            std::mem::swap(&mut v_now, &mut v_next);
        }
        let leak = phi[n - 2].norm();
        if !leak.is_finite() {
            return Err(Error::NonFinite { node: n - 2 });
        }
        if leak > cfg.leak_threshold {
            match cfg.leak_policy {
                LeakPolicy::Abort => {
                    return Err(Error::Leak {
                        t,
                        leak,
                        threshold: cfg.leak_threshold,
                    })
                }
                LeakPolicy::Truncate => {
                    record(&mut traj, t, &phi)?;
                    traj.truncated_at = Some(t);
                    return Ok(traj);
                }
            }
        }
        if k % cfg.output_every == 0 || k == steps {
            record(&mut traj, t, &phi)?;
        }
    }
    Ok(traj)
}

/// Continues a pre-freeze slice `φ(·, t_F)` under the frozen potential
/// `V(·, t_F)`. With `cfg.frozen_gauge_removed` the run starts from
/// `e^{-ig} φ(·, t_F)`, otherwise from the raw slice.
pub fn evolve_frozen(
    slice: &ComplexField,
    v_frozen: &RealField,
    energy: f64,
    freeze: &FreezeSpec,
    cfg: &PropagatorConfig,
) -> Result<Trajectory> {
    if cfg.frozen_gauge_removed {
        let start = freeze_gauge::remove_gauge(slice, energy, freeze);
        evolve(&start, v_frozen, cfg)
    } else {
        evolve(slice, v_frozen, cfg)
    }
}

/// Max over recorded `t >= t_ref` of `sup_x | |φ(x,t)|² - |φ(x,t_ref)|² |`.
pub fn density_drift(traj: &Trajectory, t_ref: f64) -> Result<f64> {
    density_drift_within(traj, t_ref, f64::INFINITY)
}

/// As [`density_drift`], with the sup restricted to `x <= x_max`.
pub fn density_drift_within(traj: &Trajectory, t_ref: f64, x_max: f64) -> Result<f64> {
    let tol = 1e-9 * (1.0 + t_ref.abs());
    let i0 = traj
        .index_of(t_ref, tol)
        .ok_or_else(|| Error::Domain(format!("t_ref = {t_ref} is not a sampled time")))?;
    let reference = traj.states[i0].density();
    let grid = *reference.grid();
    let mut worst = 0.0f64;
    for (t, state) in traj.times.iter().zip(&traj.states) {
        if *t < t_ref - tol {
            continue;
        }
        for (j, (p, r)) in state.values().iter().zip(reference.values()).enumerate() {
            if grid.node(j) > x_max {
                break;
            }
            worst = worst.max((p.norm_sqr() - r).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{bic_closed, v2_closed, FreeParticleBicModel};
    use crate::point_transform::{transform_potential, transform_wavefunction, PointMapConstants};
    use crate::quadrature;
    use proptest::prelude::*;

    fn gaussian(grid: &Grid, center: f64, width: f64, k0: f64) -> ComplexField {
        // exp(-(x - x0)² / (2 width²)), so <(x - <x>)²> = width² / 2
        let norm = (std::f64::consts::PI * width * width).powf(-0.25);
        grid.sample(|x| {
            let d = x - center;
            Complex64::from_polar(norm * (-d * d / (2.0 * width * width)).exp(), k0 * x)
        })
    }

    fn width_sq(psi: &ComplexField) -> f64 {
        let d = psi.density();
        let n = quadrature::integrate(&d);
        let mean = quadrature::integrate(&d.map_with_y(|x, p| x * p)) / n;
        2.0 * quadrature::integrate(&d.map_with_y(|x, p| (x - mean).powi(2) * p)) / n
    }

    #[test]
    fn free_gaussian_dispersion() {
        let grid = Grid::new(-20.0, 20.0, 8001).unwrap();
        let w0 = 1.0;
        let mut cfg = PropagatorConfig::new(grid, 1e-3, 0.0, 0.5).unwrap();
        cfg.output_every = 50;
        let zero = RealField::zeros(grid);
        let traj = evolve(&gaussian(&grid, 0.0, w0, 0.0), &zero, &cfg).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let exact = w0 * w0 * (1.0 + (2.0 * t / (w0 * w0)).powi(2));
            assert!((width_sq(s) / exact - 1.0).abs() < 5e-3, "t={t}");
        }
        assert!(traj.norm_drift() < 1e-10);
    }

    #[test]
    fn zero_stays_zero() {
        let grid = Grid::new(0.0, 1.0, 101).unwrap();
        let v = grid.sample(|x| x * x);
        let z = ComplexField::zeros(grid);
        assert_eq!(step(&z, &v, &v, 0.1).unwrap(), z);
    }

    #[test]
    fn step_rejects_mismatched_grids() {
        let a = Grid::new(0.0, 1.0, 101).unwrap();
        let b = Grid::new(0.0, 2.0, 101).unwrap();
        let v = RealField::zeros(b);
        assert!(step(&ComplexField::zeros(a), &v, &v, 0.1).is_err());
    }

    #[test]
    fn config_validation() {
        let g = Grid::new(0.0, 1.0, 11).unwrap();
        assert!(PropagatorConfig::new(g, 0.0, 0.0, 1.0).is_err());
        assert!(PropagatorConfig::new(g, 0.1, 1.0, 1.0).is_err());
        let mut cfg = PropagatorConfig::new(g, 0.1, 0.0, 1.0).unwrap();
        assert_eq!(cfg.steps(), 10);
        cfg.output_every = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn box_eigenstate_density_is_frozen() {
        // discrete eigenvector of the three-point Laplacian with Dirichlet ends
        let grid = Grid::new(0.0, 10.0, 1001).unwrap();
        let psi: ComplexField = grid.sample(|x| {
            Complex64::new((std::f64::consts::PI * 3.0 * x / 10.0).sin(), 0.0)
        });
        let mut cfg = PropagatorConfig::new(grid, 1e-3, 0.0, 1.0).unwrap();
        cfg.leak_threshold = 2.0;
        let traj = evolve(&psi, &RealField::zeros(grid), &cfg).unwrap();
        assert!(density_drift(&traj, 0.0).unwrap() < 1e-6);
        assert!(density_drift(&traj, 0.5).unwrap() < 1e-6);
        assert!(density_drift(&traj, 0.55).is_err());
    }

    #[test]
    fn leak_policies() {
        let grid = Grid::new(-10.0, 10.0, 2001).unwrap();
        let psi = gaussian(&grid, 5.0, 1.0, 5.0);
        let zero = RealField::zeros(grid);
        let mut cfg = PropagatorConfig::new(grid, 1e-3, 0.0, 2.0).unwrap();
        cfg.leak_threshold = 1e-3;
        assert!(matches!(evolve(&psi, &zero, &cfg), Err(Error::Leak { .. })));
        cfg.leak_policy = LeakPolicy::Truncate;
        let traj = evolve(&psi, &zero, &cfg).unwrap();
        let stop = traj.truncated_at.unwrap();
        assert!(stop > 0.0 && stop < 2.0);
        assert_eq!(traj.final_time(), stop);
    }

    #[test]
    fn short_run_tracks_point_mapped_bic() {
        let m = FreeParticleBicModel::new(1.0, 1.0, 1.0).unwrap();
        let c = PointMapConstants::default();
        let grid = Grid::new(0.0, 40.0, 4001).unwrap();
        let phi = |x, t| transform_wavefunction(|y| bic_closed(y, &m), 1.0, x, t, &c).unwrap();
        let v = PotentialFn(|x, t| transform_potential(|y| v2_closed(y, &m), x, t, &c));
        let mut cfg = PropagatorConfig::new(grid, 2e-4, 0.0, 0.02).unwrap();
        cfg.output_every = 1000;
        let traj = evolve(&grid.sample(|x| phi(x, 0.0)), &v, &cfg).unwrap();
        let last = traj.states.last().unwrap();
        let err = last.sup_distance_to(0.0, 5.0, |x| phi(x, traj.final_time()));
        assert!(err < 1e-3, "{err}");
    }

    fn standing_wave_error(nodes: usize, laplacian: Laplacian) -> f64 {
        let grid = Grid::new(0.0, 10.0, nodes).unwrap();
        let k = 3.0 * std::f64::consts::PI / 10.0;
        let psi = grid.sample(|x| Complex64::new((k * x).sin(), 0.0));
        let mut cfg = PropagatorConfig::new(grid, 1e-4, 0.0, 1.0).unwrap();
        cfg.laplacian = laplacian;
        cfg.leak_threshold = 2.0;
        cfg.output_every = 10_000;
        let traj = evolve(&psi, &RealField::zeros(grid), &cfg).unwrap();
        let phase = Complex64::from_polar(1.0, -k * k);
        traj.states.last().unwrap().sup_distance_to(0.0, 10.0, |x| phase * (k * x).sin())
    }

    #[test]
    fn spatial_order_of_each_laplacian() {
        let three = standing_wave_error(101, Laplacian::ThreePoint) / standing_wave_error(201, Laplacian::ThreePoint);
        let numerov = standing_wave_error(101, Laplacian::Numerov) / standing_wave_error(201, Laplacian::Numerov);
        assert!((three - 4.0).abs() < 0.2, "{three}");
        assert!((numerov - 16.0).abs() < 1.5, "{numerov}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn cn_step_is_unitary(
            center in -3.0f64..3.0,
            k0 in -4.0f64..4.0,
            depth in -20.0f64..20.0,
            dt in 1e-4f64..0.1,
            numerov in any::<bool>(),
        ) {
            let grid = Grid::new(-15.0, 15.0, 1501).unwrap();
            let psi = gaussian(&grid, center, 1.0, k0);
            let v0 = grid.sample(|x| depth / (1.0 + x * x));
            let v1 = grid.sample(|x| depth * (1.0 - 0.1 * x.sin()) / (1.0 + x * x));
            let laplacian = if numerov { Laplacian::Numerov } else { Laplacian::ThreePoint };
            let next = step_with(&psi, &v0, &v1, dt, laplacian).unwrap();
            let h = grid.spacing();
            let before = discrete_norm(psi.values(), h);
            let after = discrete_norm(next.values(), h);
            prop_assert!(((after - before) / before).abs() < 1e-10);
        }
    }
}
