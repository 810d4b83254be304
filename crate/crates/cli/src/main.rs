//! Command-line front end: scenario runs, bundled figure datasets, parameter
//! sweeps, and the exact-oracle identity battery.
//!
//! Exit codes: 0 success, 2 configuration error, 3 integration/oracle
//! failure, 1 file I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nudecay::figures::{self, FigureName};
use nudecay::oracle;
use nudecay::scenario::{exit_code, ConfigError, RunError, ScenarioConfig};
use nudecay::sweep::{self, SweepAxis};

#[derive(Parser)]
#[command(
    name = "nudecay",
    version,
    about = "Collective condensate-decay models: mean-field runs, figure data, sweeps, exact-oracle checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario from a config file; writes CSV + JSON sidecar.
    Run {
        /// Flat key = value scenario file (see README for the schema).
        #[arg(long)]
        config: PathBuf,
        /// Directory the output paths are rooted under (default: cwd).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit a bundled figure dataset: fig1, fig2, fig3 or figfb.
    Figure {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one scenario once per value of a swept numeric parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted path of the swept field, e.g. params.n_total.
        #[arg(long)]
        param: String,
        /// Comma-separated numeric values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Concurrent runs (outputs are identical regardless).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Verify the exact equations of motion on random density matrices and
    /// print the residuals.
    OracleCheck {
        /// Seed for the random test states.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// States per identity.
        #[arg(long, default_value_t = 20)]
        states: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), RunError> {
    match command {
        Command::Run { config, out } => {
            let text = std::fs::read_to_string(&config).map_err(|e| {
                ConfigError::new("--config", format!("cannot read {}: {e}", config.display()))
            })?;
            let scenario = ScenarioConfig::from_text(&text)?;
            let (traj, csv_path) = scenario.run(out.as_deref())?;
            println!(
                "wrote {} ({} samples, columns: {})",
                csv_path.display(),
                traj.times.len(),
                traj.column_names().join(", ")
            );
            if let Some(drift) = traj.metadata.conservation_drift {
                println!("conservation drift: {drift:.3e}");
            }
            Ok(())
        }
        Command::Figure { name, out } => {
            let figure = FigureName::parse(&name)?;
            let out_dir = out.unwrap_or_else(|| PathBuf::from("."));
            let files = figures::reproduce_figure(figure, &out_dir)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
            jobs,
        } => {
            let text = std::fs::read_to_string(&config).map_err(|e| {
                ConfigError::new("--config", format!("cannot read {}: {e}", config.display()))
            })?;
            let scenario = ScenarioConfig::from_text(&text)?;
            let axis = SweepAxis {
                param_path: param,
                values,
            };
            let output = sweep::sweep(&scenario, &axis, out.as_deref(), jobs)?;
            for f in &output.files {
                println!("wrote {}", f.display());
            }
            println!("wrote {}", output.summary_path.display());
            for row in &output.rows {
                println!(
                    "{} = {:>12.6e}: t_50 {:>12.6e}  sharpness {:>12.6e}  residual {:>12.6e}",
                    axis.param_path, row.value, row.t_50, row.sharpness, row.residual
                );
            }
            Ok(())
        }
        Command::OracleCheck { seed, states } => {
            let reports = oracle::identity_battery(seed, states).map_err(|e| {
                RunError::Sim(nudecay::trajectory::SimError::InvalidParams(e.to_string()))
            })?;
            let mut ok = true;
            for r in &reports {
                let pass = r.max_residual < 1e-8;
                ok &= pass;
                println!(
                    "identity {:<16} max residual {:.3e} over {} states (seed {seed})  {}",
                    r.name,
                    r.max_residual,
                    r.states_checked,
                    if pass { "PASS" } else { "FAIL" }
                );
            }
            let commutator =
                oracle::collision_commutator_residual(4, 0.37, 0.81, 0.13).map_err(|e| {
                    RunError::Sim(nudecay::trajectory::SimError::InvalidParams(e.to_string()))
                })?;
            let pass = commutator <= 1e-12;
            ok &= pass;
            println!(
                "collision commutator (unequal couplings) residual {:.3e}  {}",
                commutator,
                if pass { "PASS" } else { "FAIL" }
            );
            if ok {
                Ok(())
            } else {
                Err(RunError::Sim(nudecay::trajectory::SimError::InvalidParams(
                    "oracle identity residuals exceeded tolerance".into(),
                )))
            }
        }
    }
}
