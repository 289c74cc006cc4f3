//! A validated configuration turned into evaluable potentials and states.
//!
//! The chain lives on `y ∈ [0, y_max]`. Since `y = 0` maps to
//! `x0 = c2 / 2` at every time, all `x` grids start at `x0`.

use bicfreeze::freeze_gauge::{self, FreezeSpec};
use bicfreeze::interp;
use bicfreeze::point_transform::{self, PointMapConstants};
use bicfreeze::susy::{Amplitude, SeedSpec, TransformChain};
use bicfreeze::{Error, Grid, Jet, RealField};
use num_complex::Complex64;

use crate::config::{ScenarioConfig, StateSelection};
use crate::error::CliError;

pub struct Scenario {
    config: ScenarioConfig,
    grid: Grid,
    chain: TransformChain,
    constants: PointMapConstants,
    freeze: FreezeSpec,
}

/// An eigenstate of the final chain potential, sampled with slopes.
#[derive(Debug, Clone)]
pub struct State {
    pub selection: StateSelection,
    pub energy: f64,
    pub jet: Jet<f64>,
}

impl State {
    /// `ψ(y)` by Hermite interpolation, NaN off the grid.
    pub fn psi(&self, y: f64) -> f64 {
        match on_grid(self.jet.grid(), y) {
            Some(y) => interp::hermite(&self.jet, y).0,
            None => f64::NAN,
        }
    }

    pub fn label(&self) -> String {
        match self.selection {
            StateSelection::Bic { step } => format!("bic{step}"),
            StateSelection::Scattering { .. } => "scattering".into(),
        }
    }
}

/// `y` clamped onto the grid when it misses an end by rounding only.
fn on_grid(g: &Grid, y: f64) -> Option<f64> {
    let slack = 1e-12 * (g.y_max() - g.y_min());
    if y < g.y_min() - slack || y > g.y_max() + slack {
        return None;
    }
    Some(y.clamp(g.y_min(), g.y_max()))
}

fn sin_jet(grid: &Grid, k: f64) -> Jet<f64> {
    Jet::sample(grid, |y: f64| (k * y).sin(), |y: f64| k * (k * y).cos())
}

fn off_grid(what: &str, t: f64) -> Error {
    Error::Domain(format!(
        "{what} at t = {t} maps outside the chain grid; increase grid.y_max"
    ))
}

impl Scenario {
    pub fn build(config: ScenarioConfig) -> Result<Self, CliError> {
        config.validate()?;
        let n = (config.grid.y_max / config.grid.h).round() as usize + 1;
        let grid = Grid::new(0.0, config.grid.y_max, n)?;
        let seeds = config
            .model
            .steps
            .iter()
            .map(|s| SeedSpec::with_derivative(s.epsilon(), sin_jet(&grid, s.k), s.omega, 0.0))
            .collect::<Result<Vec<_>, _>>()?;
        let chain = TransformChain::from_base_seeds(RealField::zeros(grid), seeds)
            .map_err(|e| match e {
                Error::Regularity { .. } => CliError::Config {
                    field: "model.steps".into(),
                    message: e.to_string(),
                },
                other => other.into(),
            })?;
        let constants = PointMapConstants::new(config.point_map.c1, config.point_map.c2)?;
        let freeze = FreezeSpec::new(config.freeze.t_freeze, constants)?;
        Ok(Self {
            config,
            grid,
            chain,
            constants,
            freeze,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn chain(&self) -> &TransformChain {
        &self.chain
    }

    pub fn y_grid(&self) -> &Grid {
        &self.grid
    }

    pub fn constants(&self) -> &PointMapConstants {
        &self.constants
    }

    pub fn freeze(&self) -> &FreezeSpec {
        &self.freeze
    }

    pub fn t_freeze(&self) -> f64 {
        self.freeze.t_freeze()
    }

    /// Image of `y = 0`.
    pub fn x0(&self) -> f64 {
        0.5 * self.constants.c2
    }

    /// Final chain potential at `y`, NaN off the grid.
    pub fn v2(&self, y: f64) -> f64 {
        match on_grid(&self.grid, y) {
            Some(y) => interp::lagrange4(self.chain.potential(), y),
            None => f64::NAN,
        }
    }

    /// Fails unless `[x0, x0 + span]` at time `t` maps into the chain grid.
    pub fn ensure_covered(&self, span: f64, t: f64) -> Result<(), CliError> {
        let s = self.constants.positive_scale(t.min(self.t_freeze()))?;
        if span / s > self.grid.y_max() * (1.0 + 1e-12) {
            return Err(CliError::Config {
                field: "grid.y_max".into(),
                message: format!(
                    "x window of width {span} at t = {t} needs y up to {}, grid ends at {}",
                    span / s,
                    self.grid.y_max()
                ),
            });
        }
        Ok(())
    }

    /// Unfrozen `V(x, t)`.
    pub fn potential(&self, x: f64, t: f64) -> Result<f64, Error> {
        let v = point_transform::transform_potential(|y| self.v2(y), x, t, &self.constants)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(off_grid("potential", t))
        }
    }

    pub fn frozen_potential(&self, x: f64, t: f64) -> Result<f64, Error> {
        freeze_gauge::frozen_potential(|x, t| self.potential(x, t), x, t, &self.freeze)
    }

    pub fn state(&self, selection: StateSelection) -> Result<State, CliError> {
        let energy = self.config.energy_of(&selection);
        let jet = match selection {
            StateSelection::Bic { step } => {
                let amplitude = if self.config.model.normalize_bics {
                    Amplitude::Normalized
                } else {
                    Amplitude::Constant(self.config.model.bic_amplitude)
                };
                self.chain.bound_state(step, amplitude)?
            }
            StateSelection::Scattering { energy } => {
                self.chain.map_state(&sin_jet(&self.grid, energy.sqrt()), energy, 0)?
            }
        };
        Ok(State {
            selection,
            energy,
            jet,
        })
    }

    /// Unfrozen `φ(x, t)`.
    pub fn phi(&self, state: &State, x: f64, t: f64) -> Result<Complex64, Error> {
        let p = point_transform::transform_wavefunction(
            |y| state.psi(y),
            state.energy,
            x,
            t,
            &self.constants,
        )?;
        if p.is_finite() {
            Ok(p)
        } else {
            Err(off_grid("state", t))
        }
    }

    /// `φ` before the freeze, the gauge-free frozen branch after it.
    pub fn frozen_phi(&self, state: &State, x: f64, t: f64) -> Result<Complex64, Error> {
        let p = freeze_gauge::frozen_state(
            |y| state.psi(y),
            |x, t| self.phi(state, x, t),
            state.energy,
            x,
            t,
            &self.freeze,
        )?;
        if p.is_finite() {
            Ok(p)
        } else {
            Err(off_grid("state", t))
        }
    }

    /// Original time `t_F - s` of reversed-scenario time `s`.
    pub fn reversed_time(&self, s: f64) -> f64 {
        self.t_freeze() - s
    }

    pub fn reversed_potential(&self, x: f64, s: f64) -> Result<f64, Error> {
        self.frozen_potential(x, self.reversed_time(s))
    }

    pub fn reversed_phi(&self, state: &State, x: f64, s: f64) -> Result<Complex64, Error> {
        Ok(self.frozen_phi(state, x, self.reversed_time(s))?.conj())
    }
}
