//! The `potential`, `states` and `evolve` commands.

use std::path::{Path, PathBuf};

use bicfreeze::freeze_gauge;
use bicfreeze::tdse::{self, Laplacian, LeakPolicy, PotentialFn, PropagatorConfig, Trajectory};
use bicfreeze::{ComplexField, Grid, RealField};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{LaplacianChoice, LeakChoice, StateSelection};
use crate::error::CliError;
use crate::output::{self, Table};
use crate::scenario::{Scenario, State};

/// Export abscissae `x0, x0 + step, ..., x0 + x_max`.
pub fn export_grid(scn: &Scenario) -> Vec<f64> {
    let o = &scn.config().output;
    let n = (o.x_max / o.x_step).round() as usize;
    (0..=n).map(|i| scn.x0() + i as f64 * o.x_step).collect()
}

/// Original-time value of a requested time, validated.
fn resolve_time(scn: &Scenario, t: f64, reversed: bool) -> Result<f64, CliError> {
    let (field, orig) = if reversed {
        ("--times (reversed)", scn.reversed_time(t))
    } else {
        ("--times", t)
    };
    scn.config().check_time(field, orig)?;
    scn.ensure_covered(scn.config().output.x_max, orig)?;
    Ok(orig)
}

fn time_label(reversed: bool) -> &'static str {
    if reversed {
        "s"
    } else {
        "t"
    }
}

#[derive(Serialize)]
struct CurveMeta<'a> {
    times: &'a [f64],
    reversed: bool,
    t_freeze: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    energies: Vec<f64>,
}

pub fn cmd_potential(
    scn: &Scenario,
    times: &[f64],
    reversed: bool,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    for &t in times {
        resolve_time(scn, t, reversed)?;
    }
    let xs = export_grid(scn);
    let columns = times
        .par_iter()
        .map(|&t| {
            let values = xs
                .iter()
                .map(|&x| {
                    if reversed {
                        scn.reversed_potential(x, t)
                    } else {
                        scn.frozen_potential(x, t)
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((format!("V({}={t})", time_label(reversed)), values))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let table = Table { x: xs, columns };
    let meta = CurveMeta {
        times,
        reversed,
        t_freeze: scn.t_freeze(),
        energies: Vec::new(),
    };
    let stem = if reversed { "potential_reversed" } else { "potential" };
    output::export(out, stem, "potential", scn.config(), &table, meta)
}

pub fn cmd_states(
    scn: &Scenario,
    selections: &[StateSelection],
    times: &[f64],
    reversed: bool,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    for &t in times {
        resolve_time(scn, t, reversed)?;
    }
    let states = selections
        .par_iter()
        .map(|&sel| scn.state(sel))
        .collect::<Result<Vec<State>, _>>()?;
    let xs = export_grid(scn);
    let pairs: Vec<(&State, f64)> = states
        .iter()
        .flat_map(|s| times.iter().map(move |&t| (s, t)))
        .collect();
    let columns = pairs
        .par_iter()
        .map(|&(state, t)| {
            let values = xs
                .iter()
                .map(|&x| {
                    let p = if reversed {
                        scn.reversed_phi(state, x, t)
                    } else {
                        scn.frozen_phi(state, x, t)
                    };
                    p.map(|p| p.norm_sqr())
                })
                .collect::<Result<Vec<_>, _>>()?;
            let name = format!(
                "density({},E={},{}={t})",
                state.label(),
                state.energy,
                time_label(reversed)
            );
            Ok((name, values))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let table = Table { x: xs, columns };
    let meta = CurveMeta {
        times,
        reversed,
        t_freeze: scn.t_freeze(),
        energies: states.iter().map(|s| s.energy).collect(),
    };
    let stem = if reversed { "states_reversed" } else { "states" };
    output::export(out, stem, "states", scn.config(), &table, meta)
}

/// Result of a propagation run through the freeze.
pub struct EvolveRun {
    pub state: State,
    pub times: Vec<f64>,
    pub snapshots: Vec<ComplexField>,
    pub norm_drift: f64,
    pub max_leak: f64,
    pub truncated_at: Option<f64>,
    /// Density drift over the export window after the freeze, when reached.
    pub frozen_density_drift: Option<f64>,
    /// Largest deviation from the analytic density over the export window,
    /// taken over snapshots where the analytic state is known.
    pub density_deviation: Option<f64>,
}

fn propagation_grid(scn: &Scenario) -> Result<Grid, CliError> {
    let p = &scn.config().propagator;
    let n = (p.x_max / p.h).round() as usize + 1;
    Ok(Grid::new(scn.x0(), scn.x0() + p.x_max, n)?)
}

fn propagator_config(
    scn: &Scenario,
    grid: &Grid,
    t_start: f64,
    t_end: f64,
) -> Result<PropagatorConfig, CliError> {
    let p = &scn.config().propagator;
    let mut cfg = PropagatorConfig::new(*grid, p.dt, t_start, t_end)?;
    cfg.frozen_gauge_removed = p.gauge_removed;
    cfg.laplacian = match p.laplacian {
        LaplacianChoice::ThreePoint => Laplacian::ThreePoint,
        LaplacianChoice::Numerov => Laplacian::Numerov,
    };
    cfg.leak_threshold = p.leak_threshold;
    cfg.leak_policy = match p.leak_policy {
        LeakChoice::Abort => LeakPolicy::Abort,
        LeakChoice::Truncate => LeakPolicy::Truncate,
    };
    cfg.output_every = p.output_every;
    Ok(cfg)
}

fn append(into: &mut Option<Trajectory>, part: Trajectory) {
    match into {
        None => *into = Some(part),
        Some(t) => {
            // the first state of a continuation repeats the last one
            t.times.extend(part.times.into_iter().skip(1));
            t.states.extend(part.states.into_iter().skip(1));
            t.norms.extend(part.norms.into_iter().skip(1));
            t.leaks.extend(part.leaks.into_iter().skip(1));
            t.truncated_at = part.truncated_at;
        }
    }
}

/// Propagates the configured state from `t_start` to `t_end`, switching to
/// the frozen potential at `t_F`.
pub fn run_evolution(scn: &Scenario, selection: StateSelection) -> Result<EvolveRun, CliError> {
    let p = &scn.config().propagator;
    let t_f = scn.t_freeze();
    scn.ensure_covered(p.x_max, p.t_start)?;
    let grid = propagation_grid(scn)?;
    let state = scn.state(selection)?;
    let gauge = |x: f64| Complex64::from_polar(1.0, freeze_gauge::gauge_phase(x, state.energy, scn.freeze()));

    let mut traj: Option<Trajectory> = None;
    if p.t_start < t_f {
        let start: ComplexField = sample(&grid, |x| scn.phi(&state, x, p.t_start))?;
        let end = p.t_end.min(t_f);
        let v = PotentialFn(|x, t| scn.potential(x, t));
        append(&mut traj, tdse::evolve(&start, &v, &propagator_config(scn, &grid, p.t_start, end)?)?);
    }
    let truncated = traj.as_ref().is_some_and(|t| t.truncated_at.is_some());
    if p.t_end > t_f && !truncated {
        let t0 = p.t_start.max(t_f);
        let slice = match &traj {
            Some(t) => t.states.last().expect("trajectory is never empty").clone(),
            // starting after the freeze: raw slice is the frozen branch times e^{ig}
            None => sample(&grid, |x| {
                Ok(scn.frozen_phi(&state, x, t0)? * gauge(x))
            })?,
        };
        let v_frozen: RealField = sample(&grid, |x| scn.potential(x, t_f))?;
        let cfg = propagator_config(scn, &grid, t0, p.t_end)?;
        let part = tdse::evolve_frozen(&slice, &v_frozen, state.energy, scn.freeze(), &cfg)?;
        append(&mut traj, part);
    }
    let traj = traj.expect("t_end > t_start guarantees at least one stage");

    let window = scn.x0() + scn.config().output.x_max;
    let frozen_density_drift = if traj.times.iter().any(|&t| t > t_f + 0.5 * p.dt) {
        let reference = traj
            .times
            .iter()
            .copied()
            .find(|&t| t >= t_f - 0.5 * p.dt)
            .expect("a time after the freeze exists");
        Some(tdse::density_drift_within(&traj, reference, window)?)
    } else {
        None
    };

    let mut deviation: Option<f64> = None;
    for (&t, snap) in traj.times.iter().zip(&traj.states) {
        let known = t <= t_f + 0.5 * p.dt || p.gauge_removed;
        if !known {
            continue;
        }
        let mut worst = 0.0f64;
        for (j, x) in grid.nodes().enumerate() {
            if x > window {
                break;
            }
            let exact = if t <= t_f + 0.5 * p.dt {
                scn.phi(&state, x, t.min(t_f))?
            } else {
                scn.frozen_phi(&state, x, t)?
            };
            worst = worst.max((snap.values()[j].norm_sqr() - exact.norm_sqr()).abs());
        }
        deviation = Some(deviation.map_or(worst, |d: f64| d.max(worst)));
    }

    Ok(EvolveRun {
        norm_drift: traj.norm_drift(),
        max_leak: traj.leaks.iter().copied().fold(0.0, f64::max),
        truncated_at: traj.truncated_at,
        frozen_density_drift,
        density_deviation: deviation,
        state,
        times: traj.times,
        snapshots: traj.states,
    })
}

fn sample<T: bicfreeze::Sample>(
    grid: &Grid,
    f: impl Fn(f64) -> Result<T, bicfreeze::Error>,
) -> Result<bicfreeze::Field<T>, CliError> {
    let values = grid.nodes().map(f).collect::<Result<Vec<_>, _>>()?;
    Ok(bicfreeze::Field::new(*grid, values)?)
}

#[derive(Serialize)]
struct EvolveMeta {
    state: StateSelection,
    energy: f64,
    t_freeze: f64,
    times: Vec<f64>,
    norm_drift: f64,
    max_leak: f64,
    truncated_at: Option<f64>,
    frozen_density_drift: Option<f64>,
    density_deviation: Option<f64>,
}

pub fn cmd_evolve(scn: &Scenario, selection: StateSelection, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let run = run_evolution(scn, selection)?;
    let o = &scn.config().output;
    let grid = *run.snapshots[0].grid();
    let stride = ((o.x_step / grid.spacing()).round() as usize).max(1);
    let rows: Vec<usize> = (0..grid.len())
        .step_by(stride)
        .take_while(|&j| grid.node(j) <= scn.x0() + o.x_max + 1e-9)
        .collect();
    let columns = run
        .times
        .iter()
        .zip(&run.snapshots)
        .map(|(t, s)| {
            (
                format!("density(t={})", time_label_value(*t)),
                rows.iter().map(|&j| s.values()[j].norm_sqr()).collect(),
            )
        })
        .collect();
    let table = Table {
        x: rows.iter().map(|&j| grid.node(j)).collect(),
        columns,
    };
    let meta = EvolveMeta {
        state: run.state.selection,
        energy: run.state.energy,
        t_freeze: scn.t_freeze(),
        times: run.times.clone(),
        norm_drift: run.norm_drift,
        max_leak: run.max_leak,
        truncated_at: run.truncated_at,
        frozen_density_drift: run.frozen_density_drift,
        density_deviation: run.density_deviation,
    };
    output::export(out, "evolve", "evolve", scn.config(), &table, meta)
}

/// Recorded times are `t_start + n dt`; drop the rounding noise from labels.
fn time_label_value(t: f64) -> f64 {
    format!("{t:.12e}").parse().unwrap_or(t)
}

/// State to propagate when none is configured.
pub fn default_evolve_state(scn: &Scenario) -> StateSelection {
    scn.config()
        .propagator
        .state
        .unwrap_or(StateSelection::Bic { step: 0 })
}
