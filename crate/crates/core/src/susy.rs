//! First-order and confluent SUSY transformations, missing states,
//! intertwining operators and iterated chains.
//!
//! The confluent partner of `H0 = -d² + V0` at factorization energy `eps`
//! is built from a seed `u` solving `H0 u = eps u` through
//! `w(y) = omega + ∫_{y0}^{y} u²`:
//!
//! ```text
//! V2 = V0 - 2 (ln w)''      missing state  u / w
//! ```
//!
//! Eigenstates of `H0` are carried over by the composed second-order
//! intertwiner. For an eigenstate `psi` at energy `E` it reduces to
//! `-psi - u W(u, psi) / ((E - eps) w)` with `W = u psi' - u' psi`, which
//! never divides by `u` and is therefore safe at the nodes of the seed.

use crate::diff;
use crate::error::{Error, Result};
use crate::field::{ComplexField, Field, Grid, Jet, RealField, Sample};
use crate::quadrature;

/// Regularity margin: `min |w| >= REGULARITY_MARGIN * max |w|`.
pub const REGULARITY_MARGIN: f64 = 1e-6;

/// Seed residual tolerance, relative to `‖V0 u‖∞ + |eps| ‖u‖∞`.
pub const SEED_RESIDUAL_TOL: f64 = 1e-6;

/// A bound state is rejected as non-normalizable when more than this
/// fraction of its norm sits in the upper half of the grid.
pub const TAIL_FRACTION_LIMIT: f64 = 0.1;

/// Samples with `|u| <= NODE_TOL * max|u|` count as nodes of the seed.
const NODE_TOL: f64 = 1e-12;

/// How the constant in front of a missing state is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Amplitude {
    Constant(f64),
    /// Scale to unit `l2` norm on the grid.
    Normalized,
}

/// Factorization energy, seed solution with its slope, and the integration
/// constants of the running integral.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSpec {
    epsilon: f64,
    u: Jet<f64>,
    omega: f64,
    y0: f64,
}

impl SeedSpec {
    /// Seed from samples; the slope is taken by finite differences.
    pub fn new(epsilon: f64, u: RealField, omega: f64, y0: f64) -> Result<Self> {
        Self::with_derivative(epsilon, Jet::from_samples(u), omega, y0)
    }

    pub fn with_derivative(epsilon: f64, u: Jet<f64>, omega: f64, y0: f64) -> Result<Self> {
        if !epsilon.is_finite() || !omega.is_finite() {
            return Err(Error::Domain(format!(
                "epsilon = {epsilon} and omega = {omega} must be finite"
            )));
        }
        if !u.grid().contains(y0) {
            return Err(Error::Domain(format!(
                "lower limit y0 = {y0} outside [{}, {}]",
                u.grid().y_min(),
                u.grid().y_max()
            )));
        }
        Ok(Self {
            epsilon,
            u,
            omega,
            y0,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn u(&self) -> &RealField {
        &self.u.value
    }

    pub fn du(&self) -> &RealField {
        &self.u.slope
    }

    pub fn jet(&self) -> &Jet<f64> {
        &self.u
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// `u -> c u`, `omega -> c² omega`. Leaves the partner potential unchanged.
    pub fn rescaled(&self, c: f64) -> Self {
        Self {
            epsilon: self.epsilon,
            u: self.u.scale(c),
            omega: c * c * self.omega,
            y0: self.y0,
        }
    }

    /// `w = omega + ∫_{y0}^{y} u²`, unchecked.
    pub fn auxiliary_integral(&self) -> Result<RealField> {
        let u2 = self.u.value.map(|v| v * v);
        let w = quadrature::cumulative_integral(&u2, self.y0)?;
        Ok(w.map(|v| v + self.omega))
    }

    /// `w` after checking it stays clear of zero by `margin * max|w|`.
    pub fn regular_auxiliary_integral(&self, margin: f64) -> Result<RealField> {
        let w = self.auxiliary_integral()?;
        check_regularity(&w, margin)?;
        Ok(w)
    }

    /// Relative sup-norm residual of `-u'' + V0 u - eps u` on the interior.
    pub fn residual(&self, v0: &RealField) -> Result<f64> {
        let abs = diff::stationary_residual(v0, &self.u.value, self.epsilon)?;
        let vu = v0
            .values()
            .iter()
            .zip(self.u.value.values())
            .map(|(v, u)| (v * u).abs())
            .fold(0.0, f64::max);
        let scale = vu + self.epsilon.abs() * self.u.value.sup_norm();
        Ok(if scale > 0.0 { abs / scale } else { abs })
    }

    /// Seed equation against `v0` and the regularity condition.
    pub fn validate(&self, v0: &RealField, tolerance: f64) -> Result<()> {
        let residual = self.residual(v0)?;
        if residual.is_nan() || residual > tolerance {
            return Err(Error::SeedResidual {
                residual,
                tolerance,
            });
        }
        self.regular_auxiliary_integral(REGULARITY_MARGIN)?;
        Ok(())
    }
}

/// Fails unless `w` keeps one sign with `|w| >= margin * max|w|`.
pub fn check_regularity(w: &RealField, margin: f64) -> Result<()> {
    let values = w.values();
    let max_abs = w.sup_norm();
    let grid = w.grid();
    let min_abs = values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if max_abs == 0.0 {
        return Err(Error::Regularity {
            position: grid.y_min(),
            min_abs,
            max_abs,
        });
    }
    let sign = values
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .map(f64::signum)
        .unwrap_or(1.0);
    let floor = margin * max_abs;
    // a pure sign check still tolerates roundoff around an exact zero
    let floor = if margin == 0.0 { -1e-14 * max_abs } else { floor };
    match values.iter().position(|&v| sign * v < floor) {
        Some(i) => Err(Error::Regularity {
            position: grid.node(i),
            min_abs,
            max_abs,
        }),
        None => Ok(()),
    }
}

/// `V1 = V0 - 2 (ln u)''`.
pub fn first_order_partner(v0: &RealField, u: &RealField) -> Result<RealField> {
    u.ensure_same_grid(v0.grid())?;
    let l = diff::second_log_derivative(u)?;
    v0.zip_with(&l, |v, l| v - 2.0 * l)
}

/// `c / u`, the state annihilated by the first-order intertwiner.
pub fn first_order_missing(u: &RealField, c: f64) -> Result<RealField> {
    diff::ensure_sign_definite(u, diff::DEFAULT_LOG_FLOOR)?;
    Ok(u.map(|v| c / v))
}

/// `(-psi' + (u'/u) psi) / sqrt|E - eps|`.
pub fn apply_first_intertwiner(
    u: &RealField,
    psi: &ComplexField,
    energy: f64,
    epsilon: f64,
) -> Result<ComplexField> {
    psi.ensure_same_grid(u.grid())?;
    ensure_distinct(energy, epsilon)?;
    diff::ensure_sign_definite(u, diff::DEFAULT_LOG_FLOOR)?;
    let du = diff::first_derivative(u);
    let dpsi = diff::first_derivative(psi);
    let norm = 1.0 / (energy - epsilon).abs().sqrt();
    let values = (0..psi.len())
        .map(|i| {
            let l = du.values()[i] / u.values()[i];
            (-dpsi.values()[i] + psi.values()[i] * l) * norm
        })
        .collect();
    Field::new(*psi.grid(), values)
}

/// `v = w / u`, the second solution of the first-order partner at `eps`.
///
/// Only a sign change of `w` is rejected here. At nodes of `u` the function
/// has a pole, and the sample there is filled by quadratic interpolation from
/// its neighbours so the field stays finite.
pub fn confluent_auxiliary(seed: &SeedSpec) -> Result<RealField> {
    let w = seed.regular_auxiliary_integral(0.0)?;
    let u = seed.u().values();
    let n = u.len();
    let tiny = NODE_TOL * seed.u().sup_norm();
    let is_node = |i: usize| u[i].abs() <= tiny;
    let mut v: Vec<f64> = (0..n)
        .map(|i| if is_node(i) { 0.0 } else { w.values()[i] / u[i] })
        .collect();
    for i in (0..n).filter(|&i| is_node(i)) {
        v[i] = if i == 0 {
            3.0 * v[1] - 3.0 * v[2] + v[3]
        } else if i + 2 >= n {
            3.0 * v[i - 1] - 3.0 * v[i - 2] + v[i - 3]
        } else {
            v[i - 1] / 3.0 + v[i + 1] - v[i + 2] / 3.0
        };
    }
    Field::new(*seed.grid(), v)
}

/// `V2 = V0 - 2 (ln w)''`.
pub fn confluent_partner(v0: &RealField, seed: &SeedSpec) -> Result<RealField> {
    Ok(ConfluentStep::new(v0, seed.clone())?.partner)
}

/// `C u / w`.
pub fn confluent_missing(seed: &SeedSpec, amplitude: Amplitude) -> Result<RealField> {
    let w = seed.regular_auxiliary_integral(REGULARITY_MARGIN)?;
    Ok(missing_jet(&seed.u, &w, amplitude)?.value)
}

/// Maps an eigenstate of `H0` at energy `E` to one of the confluent partner,
/// `L† psi / (E - eps)`.
pub fn apply_confluent_intertwiner(
    seed: &SeedSpec,
    psi: &ComplexField,
    energy: f64,
) -> Result<ComplexField> {
    psi.ensure_same_grid(seed.grid())?;
    let w = seed.regular_auxiliary_integral(REGULARITY_MARGIN)?;
    let jet = Jet::from_samples(psi.clone());
    Ok(reduced_map(seed, &w, &jet, energy)?.value)
}

/// Scale factor giving unit norm; fails when the state is not localized on
/// the grid.
pub fn unit_normalization<T: Sample>(psi: &Field<T>) -> Result<f64> {
    let total = quadrature::l2_norm_sq(psi);
    if total == 0.0 || !total.is_finite() {
        return Err(Error::NotNormalizable(format!("norm² = {total}")));
    }
    let g = psi.grid();
    let mid = 0.5 * (g.y_min() + g.y_max());
    let density = psi.map(|v| v.modulus_sq());
    let tail = quadrature::integrate_between(&density, mid, g.y_max()) / total;
    if tail > TAIL_FRACTION_LIMIT {
        return Err(Error::NotNormalizable(format!(
            "{:.1}% of the norm lies in the upper half of the grid",
            100.0 * tail
        )));
    }
    Ok(1.0 / total.sqrt())
}

fn ensure_distinct(energy: f64, epsilon: f64) -> Result<()> {
    if (energy - epsilon).abs() <= 1e-12 * (1.0 + epsilon.abs()) {
        return Err(Error::DegenerateEnergy { energy, epsilon });
    }
    Ok(())
}

fn missing_jet(seed: &Jet<f64>, w: &RealField, amplitude: Amplitude) -> Result<Jet<f64>> {
    let grid = *w.grid();
    let (u, du, w) = (seed.value.values(), seed.slope.values(), w.values());
    let value = (0..u.len()).map(|i| u[i] / w[i]).collect();
    let slope = (0..u.len())
        .map(|i| (du[i] * w[i] - u[i].powi(3)) / (w[i] * w[i]))
        .collect();
    let jet = Jet::new(Field::new(grid, value)?, Field::new(grid, slope)?)?;
    let c = match amplitude {
        Amplitude::Constant(c) => c,
        Amplitude::Normalized => unit_normalization(&jet.value)?,
    };
    Ok(jet.scale(c))
}

fn reduced_map<T: Sample>(
    seed: &SeedSpec,
    w: &RealField,
    psi: &Jet<T>,
    energy: f64,
) -> Result<Jet<T>> {
    psi.value.ensure_same_grid(seed.grid())?;
    ensure_distinct(energy, seed.epsilon)?;
    let de = energy - seed.epsilon;
    let (u, du, w) = (seed.u().values(), seed.du().values(), w.values());
    let (p, dp) = (psi.value.values(), psi.slope.values());
    let n = u.len();
    let mut value = Vec::with_capacity(n);
    let mut slope = Vec::with_capacity(n);
    for i in 0..n {
        let wr = dp[i] * u[i] - p[i] * du[i];
        value.push(-p[i] - wr * (u[i] / (de * w[i])));
        slope.push(
            -dp[i] - wr * ((du[i] * w[i] - u[i].powi(3)) / (de * w[i] * w[i]))
                + p[i] * (u[i] * u[i] / w[i]),
        );
    }
    let grid = *seed.grid();
    Jet::new(Field::new(grid, value)?, Field::new(grid, slope)?)
}

/// One confluent step: the seed, its running integral `w`, and the
/// potentials before and after.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfluentStep {
    seed: SeedSpec,
    w: RealField,
    potential_in: RealField,
    partner: RealField,
}

impl ConfluentStep {
    pub fn new(v0: &RealField, seed: SeedSpec) -> Result<Self> {
        seed.u().ensure_same_grid(v0.grid())?;
        let w = seed.regular_auxiliary_integral(REGULARITY_MARGIN)?;
        let l = diff::second_log_derivative_with_floor(&w, REGULARITY_MARGIN)?;
        let partner = v0.zip_with(&l, |v, l| v - 2.0 * l)?;
        Ok(Self {
            seed,
            w,
            potential_in: v0.clone(),
            partner,
        })
    }

    pub fn seed(&self) -> &SeedSpec {
        &self.seed
    }

    pub fn w(&self) -> &RealField {
        &self.w
    }

    pub fn potential_in(&self) -> &RealField {
        &self.potential_in
    }

    pub fn partner(&self) -> &RealField {
        &self.partner
    }

    /// `C u / w` together with its slope.
    pub fn missing_state(&self, amplitude: Amplitude) -> Result<Jet<f64>> {
        missing_jet(&self.seed.u, &self.w, amplitude)
    }

    /// Maps an eigenstate of the incoming Hamiltonian at `energy`.
    pub fn map_state<T: Sample>(&self, psi: &Jet<T>, energy: f64) -> Result<Jet<T>> {
        reduced_map(&self.seed, &self.w, psi, energy)
    }

    /// `L† psi = psi'' - (u²/w) psi' + (u u'/w - (V0 - eps)) psi` for an
    /// arbitrary sampled `psi`.
    pub fn intertwiner<T: Sample>(&self, psi: &Field<T>) -> Result<Field<T>> {
        self.second_order(psi, 1.0)
    }

    /// The adjoint `L psi = psi'' + (u²/w) psi' + (3 u u'/w - u⁴/w² - (V0 - eps)) psi`,
    /// which annihilates the missing state.
    pub fn annihilator<T: Sample>(&self, psi: &Field<T>) -> Result<Field<T>> {
        self.second_order(psi, -1.0)
    }

    fn second_order<T: Sample>(&self, psi: &Field<T>, sign: f64) -> Result<Field<T>> {
        psi.ensure_same_grid(self.seed.grid())?;
        let d1 = diff::first_derivative(psi);
        let d2 = diff::second_derivative(psi);
        let (u, du, w) = (
            self.seed.u().values(),
            self.seed.du().values(),
            self.w.values(),
        );
        let v0 = self.potential_in.values();
        let eps = self.seed.epsilon;
        let values = (0..psi.len())
            .map(|i| {
                let a = u[i] * u[i] / w[i];
                let b = if sign > 0.0 {
                    u[i] * du[i] / w[i]
                } else {
                    3.0 * u[i] * du[i] / w[i] - a * a
                };
                d2.values()[i] - d1.values()[i] * (sign * a) + psi.values()[i] * (b - (v0[i] - eps))
            })
            .collect();
        Field::new(*psi.grid(), values)
    }
}

/// An ordered sequence of confluent steps starting from a base potential.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformChain {
    base: RealField,
    steps: Vec<ConfluentStep>,
}

impl TransformChain {
    pub fn empty(base: RealField) -> Self {
        Self {
            base,
            steps: Vec::new(),
        }
    }

    /// Chain whose `k`-th seed already solves the `k`-th intermediate
    /// Hamiltonian. Each seed is checked against the potential it enters.
    pub fn new(base: RealField, seeds: Vec<SeedSpec>) -> Result<Self> {
        Self::with_tolerance(base, seeds, SEED_RESIDUAL_TOL)
    }

    pub fn with_tolerance(base: RealField, seeds: Vec<SeedSpec>, tolerance: f64) -> Result<Self> {
        let mut chain = Self::empty(base);
        for seed in seeds {
            chain.push(seed, tolerance)?;
        }
        Ok(chain)
    }

    /// Chain from seeds that solve the base Hamiltonian: each is carried
    /// through the earlier steps at its own energy before it is used.
    pub fn from_base_seeds(base: RealField, seeds: Vec<SeedSpec>) -> Result<Self> {
        let mut chain = Self::empty(base);
        for seed in seeds {
            let mapped = chain.map_state(seed.jet(), seed.epsilon, 0)?;
            let seed = SeedSpec::with_derivative(seed.epsilon, mapped, seed.omega, seed.y0)?;
            chain.push(seed, SEED_RESIDUAL_TOL)?;
        }
        Ok(chain)
    }

    fn push(&mut self, seed: SeedSpec, tolerance: f64) -> Result<()> {
        let v = self.potential().clone();
        seed.validate(&v, tolerance)?;
        self.steps.push(ConfluentStep::new(&v, seed)?);
        Ok(())
    }

    pub fn base(&self) -> &RealField {
        &self.base
    }

    pub fn steps(&self) -> &[ConfluentStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The final potential, or the base one for an empty chain.
    pub fn potential(&self) -> &RealField {
        self.steps.last().map_or(&self.base, |s| &s.partner)
    }

    /// Carries an eigenstate entering step `first` through the remaining steps.
    pub fn map_state<T: Sample>(&self, psi: &Jet<T>, energy: f64, first: usize) -> Result<Jet<T>> {
        let mut state = psi.clone();
        for step in self.steps.iter().skip(first) {
            state = step.map_state(&state, energy)?;
        }
        Ok(state)
    }

    /// The bound state created by step `j`, carried to the final potential.
    pub fn bound_state(&self, j: usize, amplitude: Amplitude) -> Result<Jet<f64>> {
        let step = self.steps.get(j).ok_or_else(|| {
            Error::Domain(format!("step {j} out of range for a chain of {}", self.len()))
        })?;
        let state = step.missing_state(Amplitude::Constant(1.0))?;
        let state = self.map_state(&state, step.seed.epsilon, j + 1)?;
        let c = match amplitude {
            Amplitude::Constant(c) => c,
            Amplitude::Normalized => unit_normalization(&state.value)?,
        };
        Ok(state.scale(c))
    }
}

/// Final potential and the image of an eigenstate `psi0` of the base
/// Hamiltonian at energy `E`.
pub fn iterate_chain(
    chain: &TransformChain,
    psi0: &ComplexField,
    energy: f64,
) -> Result<(RealField, ComplexField)> {
    psi0.ensure_same_grid(chain.base.grid())?;
    let jet = Jet::from_samples(psi0.clone());
    let out = chain.map_state(&jet, energy, 0)?;
    Ok((chain.potential().clone(), out.value))
}
