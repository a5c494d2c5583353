use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dqpt::output::write_rates;
use dqpt::sweep::{parse_values, run_sweep, worker_count};
use dqpt::validate::{run_suite, SuiteOptions};
use dqpt::{simulate, CliError, ExperimentConfig};
use dqpt_core::bathrates::BathRates;

#[derive(Parser)]
#[command(name = "dqpt", version, about = "Quench dynamics of a current-coupled Ising ring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one quench and write trajectory.csv and manifest.json.
    Simulate {
        /// TOML config, or a manifest.json to re-run.
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides output.path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one quench per value of a numeric config key.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted key, e.g. bath.gamma0.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Output directory; overrides output.path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite.
    Validate {
        /// Remove the ring closure bond everywhere (negative control).
        #[arg(long)]
        drop_closure_bond: bool,
    },
    /// Dump γ(t), λ(t), γ₁(t), Γ(t) and Λ(t) on the configured time grid.
    Rates {
        #[arg(long)]
        config: PathBuf,
        /// Write rates.csv here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(cmd: Command) -> Result<bool, CliError> {
    match cmd {
        Command::Simulate { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (result, dir) = simulate(&cfg, out.as_deref())?;
            let m = &result.manifest;
            println!("wrote {} samples to {}", m.samples, dir.display());
            for c in &m.cusps {
                println!("cusp at t/T = {:.6} ± {:.6} ({} -> {})", c.t_over_period, c.uncertainty, c.from, c.to);
            }
            if let Some(d) = m.cross_check_distance {
                println!("engine cross-check trace distance {d:.3e}");
            }
            Ok(true)
        }
        Command::Sweep { config, axis, values, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let values = parse_values(&values)?;
            let dir = out.unwrap_or_else(|| cfg.output.path.clone());
            let points = run_sweep(&cfg, &axis, &values, &dir, worker_count()?)?;
            let mut all_ok = true;
            for p in &points {
                match &p.outcome {
                    Ok(s) => {
                        let times: Vec<String> = s.cusp_times.iter().map(|t| format!("{t:.5}")).collect();
                        println!("{axis}={}: {} cusps at t/T = [{}]", p.label, s.cusp_times.len(), times.join(", "));
                    }
                    Err(e) => {
                        all_ok = false;
                        eprintln!("{axis}={}: failed: {e}", p.label);
                    }
                }
            }
            println!("summary written to {}", dir.join(dqpt::sweep::SUMMARY_FILE).display());
            Ok(all_ok)
        }
        Command::Validate { drop_closure_bond } => {
            let checks = run_suite(SuiteOptions { drop_closure_bond });
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} of {} checks passed", checks.len() - failed, checks.len());
            Ok(failed == 0)
        }
        Command::Rates { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let rates = BathRates::new(&cfg.bath_params())?;
            let times = cfg.sample_times();
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)
                        .map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
                    let path = dir.join("rates.csv");
                    let file = std::fs::File::create(&path)
                        .map_err(|e| CliError::io(format!("cannot create {}", path.display()), e))?;
                    write_rates(file, &rates, &times, cfg.output.precision)?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    write_rates(&mut lock, &rates, &times, cfg.output.precision)?;
                    lock.flush().map_err(|e| CliError::io("stdout", e))?;
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
