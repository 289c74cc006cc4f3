//! End-to-end checks of a scenario, reported as JSON.

use std::f64::consts::PI;
use std::path::Path;

use bicfreeze::diff;
use bicfreeze::freeze_gauge;
use bicfreeze::models::{tail_validator, TailOptions};
use bicfreeze::point_transform::{tdse_residual, ResidualSteps};
use bicfreeze::quadrature;
use bicfreeze::susy::Amplitude;
use bicfreeze::{ComplexField, Grid, RealField};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::run_evolution;
use crate::config::StateSelection;
use crate::error::CliError;
use crate::output;
use crate::scenario::{Scenario, State};

pub const EIGEN_RESIDUAL_TOL: f64 = 1e-6;
pub const NORM_INVARIANCE_TOL: f64 = 1e-6;
pub const MAGNETIC_RESIDUAL_TOL: f64 = 1e-4;
pub const TDSE_RESIDUAL_TOL: f64 = 1e-4;
pub const FROZEN_DRIFT_TOL: f64 = 1e-3;
pub const NORM_DRIFT_TOL: f64 = 1e-8;
/// Spacing of the `x` grid the freeze eigenrelation is checked on.
pub const FREEZE_CHECK_STEP: f64 = 5e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Below,
    Above,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: Relation::Below,
            pass: value < threshold,
        }
    }

    fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: Relation::Above,
            pass: value > threshold,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub config_sha256: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn chain_checks(scn: &Scenario) -> Result<Vec<Check>, CliError> {
    let chain = scn.chain();
    let mut checks = Vec::new();
    for (j, step) in chain.steps().iter().enumerate() {
        let r = step.seed().residual(step.potential_in())?;
        checks.push(Check::below(format!("seed_residual[{j}]"), r, EIGEN_RESIDUAL_TOL));
        let min_w = step.w().values().iter().copied().fold(f64::INFINITY, f64::min);
        checks.push(Check::above(format!("regularity_min_w[{j}]"), min_w, 0.0));
    }
    // the first step acts on the free particle, where the bound-state norm
    // has a closed upper bound for unit amplitude
    let first = &scn.config().model.steps[0];
    let step = &chain.steps()[0];
    let bic = step.missing_state(Amplitude::Constant(1.0))?.value;
    let y_max = scn.y_grid().y_max();
    let norm = quadrature::l2_norm_sq(&bic) + 2.0 / (y_max + 2.0 * first.omega);
    let (k, w) = (first.k, first.omega);
    checks.push(Check::below(
        "norm_bound[0]",
        norm,
        1.0 / w + 8.0 * k / (8.0 * k * w + PI - 2.0),
    ));
    Ok(checks)
}

fn eigen_check(scn: &Scenario, state: &State) -> Result<Check, CliError> {
    let r = diff::stationary_residual(scn.chain().potential(), &state.jet.value, state.energy)?;
    Ok(Check::below(
        format!("eigen_residual[{},E={}]", state.label(), state.energy),
        r,
        EIGEN_RESIDUAL_TOL,
    ))
}

/// Grid in `x` whose nodes are the images of the chain nodes at time `t`.
fn image_grid(scn: &Scenario, t: f64, nodes: usize) -> Result<Grid, CliError> {
    let s = scn.constants().positive_scale(t)?;
    let y = scn.y_grid();
    let y_end = y.node(nodes - 1);
    Ok(Grid::new(scn.x0(), scn.x0() + s * y_end, nodes)?)
}

fn sample_complex(grid: &Grid, f: impl Fn(f64) -> Result<Complex64, bicfreeze::Error>) -> Result<ComplexField, CliError> {
    let values = grid.nodes().map(f).collect::<Result<Vec<_>, _>>()?;
    Ok(ComplexField::new(*grid, values)?)
}

fn bic_checks(scn: &Scenario, state: &State) -> Result<Vec<Check>, CliError> {
    let name = state.label();
    let t_f = scn.t_freeze();
    let mut checks = vec![eigen_check(scn, state)?];

    // point-map norm over the image of the chain grid
    let y_nodes = scn.y_grid().len();
    let reference = quadrature::l2_norm_sq(&state.jet.value);
    let mut spread = 0.0f64;
    for t in [0.0, 0.5 * t_f, t_f] {
        let g = image_grid(scn, t, y_nodes)?;
        let phi = sample_complex(&g, |x| scn.phi(state, x, t))?;
        spread = spread.max((quadrature::l2_norm_sq(&phi) / reference - 1.0).abs());
    }
    checks.push(Check::below(format!("point_map_norm[{name}]"), spread, NORM_INVARIANCE_TOL));

    // eigenrelation of the freeze slice over the export window
    let o = &scn.config().output;
    let nodes = (o.x_max / FREEZE_CHECK_STEP).round() as usize + 1;
    let g = Grid::new(scn.x0(), scn.x0() + o.x_max, nodes)?;
    let slice = sample_complex(&g, |x| scn.phi(state, x, t_f))?;
    let v = RealField::new(
        g,
        g.nodes().map(|x| scn.potential(x, t_f)).collect::<Result<Vec<_>, _>>()?,
    )?;
    let magnetic = freeze_gauge::magnetic_residual(&slice, &v, state.energy, scn.freeze())?;
    checks.push(Check::below(format!("magnetic_residual[{name}]"), magnetic, MAGNETIC_RESIDUAL_TOL));
    let plain = freeze_gauge::gauge_removed_residual(&slice, &v, state.energy, scn.freeze())?;
    checks.push(Check::below(format!("gauge_removed_residual[{name}]"), plain, MAGNETIC_RESIDUAL_TOL));

    // TDSE residual before the freeze and for the time-reversed pair
    let span = scn.config().output.x_max.min(10.0);
    let points: Vec<(f64, f64)> = (1..=50)
        .flat_map(|i| {
            let x = scn.x0() + span * i as f64 / 50.0;
            [0.25, 0.5, 0.75].map(|f| (x, f * t_f))
        })
        .collect();
    let phi = |x: f64, t: f64| scn.phi(state, x, t);
    let v = |x: f64, t: f64| scn.potential(x, t);
    let forward = tdse_residual(
        |x, t| phi(x, t).unwrap_or(Complex64::new(f64::NAN, 0.0)),
        |x, t| v(x, t).unwrap_or(f64::NAN),
        &points,
        ResidualSteps::default(),
    );
    checks.push(Check::below(format!("tdse_residual[{name}]"), nan_to_inf(forward), TDSE_RESIDUAL_TOL));
    let (phi_r, v_r) = freeze_gauge::time_reversal(phi, v);
    let backward_points: Vec<(f64, f64)> = points.iter().map(|&(x, t)| (x, -t)).collect();
    let backward = tdse_residual(
        |x, t| phi_r(x, t).unwrap_or(Complex64::new(f64::NAN, 0.0)),
        |x, t| v_r(x, t).unwrap_or(f64::NAN),
        &backward_points,
        ResidualSteps::default(),
    );
    checks.push(Check::below(
        format!("time_reversal_residual[{name}]"),
        nan_to_inf(backward),
        TDSE_RESIDUAL_TOL,
    ));

    // tails of the final potential and of the bound state
    let options = TailOptions::default();
    let report = tail_validator(scn.chain().potential(), &state.jet.value, 0.0, options)?;
    checks.push(Check::below(
        format!("tail_potential[{name}]"),
        report.potential_tail,
        options.potential_bound,
    ));
    // offset of the fitted a/(b+y) envelope relative to the decay limit
    let limit = options.decay_fraction * scn.y_grid().y_max();
    let mut envelope = Check::below(
        format!("tail_envelope_offset[{name}]"),
        report.envelope.map_or(f64::INFINITY, |e| e.b / limit),
        1.0,
    );
    envelope.pass &= report.envelope_ok;
    checks.push(envelope);
    Ok(checks)
}

fn nan_to_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn propagation_checks(scn: &Scenario, selection: StateSelection) -> Result<Vec<Check>, CliError> {
    let run = run_evolution(scn, selection)?;
    let name = run.state.label();
    let mut checks = vec![Check::below(
        format!("cn_norm_drift[{name}]"),
        run.norm_drift,
        NORM_DRIFT_TOL,
    )];
    if let Some(d) = run.frozen_density_drift {
        checks.push(Check::below(format!("frozen_density_drift[{name}]"), d, FROZEN_DRIFT_TOL));
    }
    Ok(checks)
}

fn reversal_signature(scn: &Scenario) -> Result<Check, CliError> {
    let o = &scn.config().output;
    let t_f = scn.t_freeze();
    scn.ensure_covered(o.x_max, 0.0)?;
    let n = (o.x_max / o.x_step).round() as usize + 1;
    let g = Grid::new(scn.x0(), scn.x0() + o.x_max, n)?;
    let at = |s: f64| -> Result<RealField, CliError> {
        let values = g
            .nodes()
            .map(|x| scn.reversed_potential(x, s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RealField::new(g, values)?)
    };
    let start = freeze_gauge::spatial_variance(&at(0.0)?);
    let end = freeze_gauge::spatial_variance(&at(t_f)?);
    Ok(Check::below("reversed_variance_ratio", start / end, 1.0))
}

pub fn run_checks(scn: &Scenario) -> Result<Vec<Check>, CliError> {
    let mut checks = chain_checks(scn)?;
    let selections = scn.config().selected_states();
    let states = selections
        .par_iter()
        .map(|&s| scn.state(s))
        .collect::<Result<Vec<_>, _>>()?;
    let per_state = states
        .par_iter()
        .map(|state| match state.selection {
            StateSelection::Bic { .. } => bic_checks(scn, state),
            StateSelection::Scattering { .. } => Ok(vec![eigen_check(scn, state)?]),
        })
        .collect::<Result<Vec<_>, _>>()?;
    checks.extend(per_state.into_iter().flatten());
    // one scattering energy above every bound state, unless already covered
    let mut probe = scn.config().model.steps.iter().map(|s| s.epsilon()).fold(0.0, f64::max) + 1.0;
    while scn.config().step_with_energy(probe).is_some() {
        probe += 0.5;
    }
    let probe = StateSelection::Scattering { energy: probe };
    if !selections.contains(&probe) {
        checks.push(eigen_check(scn, &scn.state(probe)?)?);
    }
    checks.extend(propagation_checks(scn, crate::commands::default_evolve_state(scn))?);
    checks.push(reversal_signature(scn)?);
    Ok(checks)
}

/// Runs every check and writes `verify.json` into `out`.
pub fn cmd_verify(scn: &Scenario, out: &Path) -> Result<Report, CliError> {
    let checks = run_checks(scn)?;
    let report = Report {
        tool: "bicfreeze",
        config_sha256: output::config_hash(scn.config()),
        passed: checks.iter().all(|c| c.pass),
        checks,
    };
    output::ensure_dir(out)?;
    output::write_json(&out.join("verify.json"), &report)?;
    Ok(report)
}
