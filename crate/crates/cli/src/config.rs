//! Scenario files: TOML with nested tables, all quantities in units with
//! `ħ = 1`, `2m = 1`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Largest number of nodes any grid may have.
pub const MAX_NODES: usize = 20_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub point_map: PointMapConfig,
    pub freeze: FreezeConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub propagator: PropagatorSettings,
    #[serde(default)]
    pub output: OutputConfig,
    /// States exported by `states` when no energies are given on the
    /// command line. Empty means every bound state of the chain.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<StateSelection>,
}

/// Confluent steps applied in order to the free particle, each seeded with
/// `sin(k y)` at `ε = k²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub steps: Vec<StepConfig>,
    /// Constant in front of every bound state, unless `normalize_bics`.
    #[serde(default = "one")]
    pub bic_amplitude: f64,
    #[serde(default)]
    pub normalize_bics: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub k: f64,
    pub omega: f64,
}

impl StepConfig {
    pub fn epsilon(&self) -> f64 {
        self.k * self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointMapConfig {
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default)]
    pub c2: f64,
}

impl Default for PointMapConfig {
    fn default() -> Self {
        Self { c1: 1.0, c2: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreezeConfig {
    pub t_freeze: f64,
}

/// The `y` grid `[0, y_max]` the SUSY chain is built on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_y_max")]
    pub y_max: f64,
    #[serde(default = "default_y_step")]
    pub h: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            y_max: default_y_max(),
            h: default_y_step(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaplacianChoice {
    ThreePoint,
    Numerov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeakChoice {
    Abort,
    Truncate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorSettings {
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_x_step")]
    pub h: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub t_start: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Multiply by `e^{-ig}` when the potential freezes.
    #[serde(default = "yes")]
    pub gauge_removed: bool,
    #[serde(default = "default_laplacian")]
    pub laplacian: LaplacianChoice,
    #[serde(default = "default_leak_threshold")]
    pub leak_threshold: f64,
    #[serde(default = "default_leak_policy")]
    pub leak_policy: LeakChoice,
    #[serde(default = "default_output_every")]
    pub output_every: usize,
    /// State to propagate; defaults to the first bound state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSelection>,
}

impl Default for PropagatorSettings {
    fn default() -> Self {
        Self {
            x_max: default_x_max(),
            h: default_x_step(),
            dt: default_dt(),
            t_start: 0.0,
            t_end: default_t_end(),
            gauge_removed: true,
            laplacian: default_laplacian(),
            leak_threshold: default_leak_threshold(),
            leak_policy: default_leak_policy(),
            output_every: default_output_every(),
            state: None,
        }
    }
}

/// Sampling of exported curves on `[0, x_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_export_x_max")]
    pub x_max: f64,
    #[serde(default = "default_export_step")]
    pub x_step: f64,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            x_max: default_export_x_max(),
            x_step: default_export_step(),
            times: default_times(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSelection {
    /// The bound state created by chain step `step` (0-based).
    Bic { step: usize },
    Scattering { energy: f64 },
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_y_max() -> f64 {
    80.0
}
fn default_y_step() -> f64 {
    1e-3
}
fn default_x_max() -> f64 {
    80.0
}
fn default_x_step() -> f64 {
    5e-3
}
fn default_dt() -> f64 {
    1e-4
}
fn default_t_end() -> f64 {
    1.2
}
fn default_laplacian() -> LaplacianChoice {
    LaplacianChoice::ThreePoint
}
fn default_leak_threshold() -> f64 {
    0.1
}
fn default_leak_policy() -> LeakChoice {
    LeakChoice::Abort
}
fn default_output_every() -> usize {
    100
}
fn default_export_x_max() -> f64 {
    40.0
}
fn default_export_step() -> f64 {
    0.01
}
fn default_times() -> Vec<f64> {
    vec![0.0, 0.1, 0.2, 0.3]
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.into(),
        message: message.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn node_count(field: &str, span: f64, h: f64) -> Result<usize, CliError> {
    let n = (span / h).round() + 1.0;
    if n > MAX_NODES as f64 {
        return Err(invalid(field, format!("{n} nodes exceeds the limit of {MAX_NODES}")));
    }
    if n < 3.0 {
        return Err(invalid(field, "grid needs at least 3 nodes"));
    }
    Ok(n as usize)
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config is always representable in TOML")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        if m.steps.is_empty() {
            return Err(invalid("model.steps", "at least one confluent step is required"));
        }
        for (i, s) in m.steps.iter().enumerate() {
            positive(&format!("model.steps[{i}].k"), s.k)?;
            if !(s.omega > 0.0 && s.omega.is_finite()) {
                return Err(invalid(
                    format!("model.steps[{i}].omega"),
                    format!(
                        "regularity requires omega > 0 so that w = omega + int u² never vanishes, got {}",
                        s.omega
                    ),
                ));
            }
            for (j, earlier) in m.steps[..i].iter().enumerate() {
                if (earlier.epsilon() - s.epsilon()).abs() <= 1e-12 * s.epsilon() {
                    return Err(invalid(
                        format!("model.steps[{i}].k"),
                        format!("factorization energy k² repeats step {j}"),
                    ));
                }
            }
        }
        if !m.bic_amplitude.is_finite() || m.bic_amplitude == 0.0 {
            return Err(invalid("model.bic_amplitude", "must be finite and nonzero"));
        }

        let pm = &self.point_map;
        positive("point_map.c1", pm.c1)?;
        if !pm.c2.is_finite() {
            return Err(invalid("point_map.c2", "must be finite"));
        }
        positive("freeze.t_freeze", self.freeze.t_freeze)?;

        positive("grid.y_max", self.grid.y_max)?;
        positive("grid.h", self.grid.h)?;
        node_count("grid.h", self.grid.y_max, self.grid.h)?;

        let p = &self.propagator;
        positive("propagator.x_max", p.x_max)?;
        positive("propagator.h", p.h)?;
        node_count("propagator.h", p.x_max, p.h)?;
        positive("propagator.dt", p.dt)?;
        if !p.t_start.is_finite() || 4.0 * p.t_start + pm.c1 <= 0.0 {
            return Err(invalid(
                "propagator.t_start",
                format!("4 t + c1 must stay positive, got t = {}", p.t_start),
            ));
        }
        if !(p.t_end > p.t_start && p.t_end.is_finite()) {
            return Err(invalid("propagator.t_end", "must exceed propagator.t_start"));
        }
        positive("propagator.leak_threshold", p.leak_threshold)?;
        if p.output_every == 0 {
            return Err(invalid("propagator.output_every", "must be at least 1"));
        }
        if let Some(state) = &p.state {
            self.check_state("propagator.state", state)?;
        }

        let o = &self.output;
        positive("output.x_max", o.x_max)?;
        positive("output.x_step", o.x_step)?;
        node_count("output.x_step", o.x_max, o.x_step)?;
        for (i, &t) in o.times.iter().enumerate() {
            self.check_time(&format!("output.times[{i}]"), t)?;
        }
        for (i, state) in self.states.iter().enumerate() {
            self.check_state(&format!("states[{i}]"), state)?;
        }
        Ok(())
    }

    pub fn check_time(&self, field: &str, t: f64) -> Result<(), CliError> {
        let s = 4.0 * t + self.point_map.c1;
        if !t.is_finite() || s <= 0.0 {
            return Err(invalid(
                field,
                format!("singular time t = {t}: 4t + c1 = {s} must be positive"),
            ));
        }
        Ok(())
    }

    fn check_state(&self, field: &str, state: &StateSelection) -> Result<(), CliError> {
        match *state {
            StateSelection::Bic { step } if step >= self.model.steps.len() => Err(invalid(
                format!("{field}.step"),
                format!("chain has {} steps", self.model.steps.len()),
            )),
            StateSelection::Bic { .. } => Ok(()),
            StateSelection::Scattering { energy } => {
                positive(&format!("{field}.energy"), energy)?;
                if let Some(step) = self.step_with_energy(energy) {
                    return Err(invalid(
                        format!("{field}.energy"),
                        format!(
                            "degenerate energy: E = {energy} equals the factorization energy of step {step}"
                        ),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Index of the step whose `ε` equals `energy`.
    pub fn step_with_energy(&self, energy: f64) -> Option<usize> {
        self.model
            .steps
            .iter()
            .position(|s| (s.epsilon() - energy).abs() <= 1e-12 * (1.0 + energy.abs()))
    }

    /// Bound state for an energy equal to some `ε`, scattering otherwise.
    pub fn classify_energy(&self, energy: f64) -> Result<StateSelection, CliError> {
        let state = match self.step_with_energy(energy) {
            Some(step) => StateSelection::Bic { step },
            None => StateSelection::Scattering { energy },
        };
        self.check_state("--energies", &state)?;
        Ok(state)
    }

    pub fn energy_of(&self, state: &StateSelection) -> f64 {
        match *state {
            StateSelection::Bic { step } => self.model.steps[step].epsilon(),
            StateSelection::Scattering { energy } => energy,
        }
    }

    /// Configured states, or every bound state when none are listed.
    pub fn selected_states(&self) -> Vec<StateSelection> {
        if self.states.is_empty() {
            (0..self.model.steps.len())
                .map(|step| StateSelection::Bic { step })
                .collect()
        } else {
            self.states.clone()
        }
    }
}
