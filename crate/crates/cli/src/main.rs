use std::path::PathBuf;
use std::process::ExitCode;

use bicfreeze_cli::commands;
use bicfreeze_cli::verify;
use bicfreeze_cli::{CliError, Scenario, ScenarioConfig, StateSelection};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(version, about = "Freezable bound states in the continuum: export and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Potential V_F(x, t) at the requested times
    Potential {
        #[command(flatten)]
        common: Common,
        /// Comma-separated times; defaults to output.times
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        times: Option<Vec<f64>>,
        /// Time-reversed scenario, starting from the frozen slice
        #[arg(long)]
        reversed: bool,
    },
    /// Probability densities |phi(x, t)|²
    States {
        #[command(flatten)]
        common: Common,
        /// Comma-separated energies; an energy equal to some k² selects that bound state
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        energies: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        times: Option<Vec<f64>>,
        #[arg(long)]
        reversed: bool,
    },
    /// Crank-Nicolson propagation through the freeze
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Energy of the state to propagate; defaults to propagator.state or the first bound state
        #[arg(long, allow_hyphen_values = true)]
        energy: Option<f64>,
    },
    /// Run every check and write verify.json; exits 1 if any fails
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

fn scenario(common: &Common) -> Result<Scenario, CliError> {
    Scenario::build(ScenarioConfig::load(&common.config)?)
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Potential {
            common,
            times,
            reversed,
        } => {
            let scn = scenario(&common)?;
            let times = times.unwrap_or_else(|| scn.config().output.times.clone());
            report(commands::cmd_potential(&scn, &times, reversed, &common.out)?);
        }
        Command::States {
            common,
            energies,
            times,
            reversed,
        } => {
            let scn = scenario(&common)?;
            let states: Vec<StateSelection> = match energies {
                Some(es) => es
                    .iter()
                    .map(|&e| scn.config().classify_energy(e))
                    .collect::<Result<_, _>>()?,
                None => scn.config().selected_states(),
            };
            let times = times.unwrap_or_else(|| scn.config().output.times.clone());
            report(commands::cmd_states(&scn, &states, &times, reversed, &common.out)?);
        }
        Command::Evolve { common, energy } => {
            let scn = scenario(&common)?;
            let state = match energy {
                Some(e) => scn.config().classify_energy(e)?,
                None => commands::default_evolve_state(&scn),
            };
            report(commands::cmd_evolve(&scn, state, &common.out)?);
        }
        Command::Verify { common } => {
            let scn = scenario(&common)?;
            let result = verify::cmd_verify(&scn, &common.out)?;
            for c in &result.checks {
                let verdict = if c.pass { "PASS" } else { "FAIL" };
                println!("{verdict} {} = {:.3e} (threshold {:.1e})", c.name, c.value, c.threshold);
            }
            if !result.passed {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn report(paths: Vec<PathBuf>) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
