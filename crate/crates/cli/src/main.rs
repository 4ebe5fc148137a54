use std::path::PathBuf;
use std::process::ExitCode;

use battery_cli::config::{Config, Scenario};
use battery_cli::{output, presets, CliError, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "battery", version, about = "Gaussian quantum battery charging simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steady-state energies at a single point (or over the config axes)
    Steady(RunArgs),
    /// Covariance trajectory from the passive state
    Evolve(RunArgs),
    /// Energy, work, heat, entropy, free energy and efficiency
    Thermo(RunArgs),
    /// Thermodynamics plus the speed-limit charging power
    Power(RunArgs),
    /// Sweep the config axes with the config's scenario
    Sweep(RunArgs),
    /// Optimise the bath squeezing phase for the config's target
    Optimize(RunArgs),
    /// Closed-system energy trace against the closed form
    Closed(RunArgs),
    /// List presets, or print one
    Presets { name: Option<String> },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; defaults to the config's `output`, then stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Worker threads for sweeps (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> Result<Config> {
        match (&self.config, &self.preset) {
            (Some(path), None) => Config::from_path(path),
            (None, Some(name)) => presets::preset(name),
            (None, None) => Ok(Config::default()),
            (Some(_), Some(_)) => Err(CliError::Config("give either --config or --preset, not both".into())),
        }
    }

    fn emit(&self, cfg: &Config, text: &str) -> Result<()> {
        let target = self.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from));
        match target {
            Some(path) => std::fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

/// A single point (no axes) that is unstable is an error outside `sweep`.
fn point_or_sweep(args: &RunArgs, scenario: Scenario) -> Result<()> {
    let mut cfg = args.load()?;
    cfg.scenario = scenario;
    cfg.validate()?;
    let rows = battery_cli::run_sweep(&cfg, args.threads)?;
    if cfg.axes().is_empty() && !rows[0].stable {
        let (drive, bath) = battery_cli::scenario::drive_and_bath(&rows[0].point)?;
        return Err(CliError::Unstable(
            battery_core::stability_check(&drive, &bath).max_re_eig,
        ));
    }
    args.emit(&cfg, &output::rows_csv(&cfg, &rows))
}

fn closed(args: &RunArgs, cfg: &Config) -> Result<()> {
    let pts = battery_cli::closed_report(cfg.mu, cfg.lambda, cfg.n_a, cfg.t_max, cfg.steps)?;
    args.emit(cfg, &output::closed_csv(&pts))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Steady(a) => point_or_sweep(&a, Scenario::Steady),
        Command::Thermo(a) => point_or_sweep(&a, Scenario::Thermo),
        Command::Power(a) => point_or_sweep(&a, Scenario::Power),
        Command::Evolve(a) => {
            let cfg = a.load()?;
            a.emit(&cfg, &output::trace_csv(&battery_cli::trajectory(&cfg)?))
        }
        Command::Sweep(a) => {
            let cfg = a.load()?;
            if cfg.scenario == Scenario::Closed {
                return closed(&a, &cfg);
            }
            let rows = battery_cli::run_sweep(&cfg, a.threads)?;
            a.emit(&cfg, &output::rows_csv(&cfg, &rows))
        }
        Command::Optimize(a) => {
            let cfg = a.load()?;
            let (theta, value) = battery_cli::optimize_theta(&cfg, cfg.target, cfg.grid_steps, a.threads)?;
            a.emit(&cfg, &output::optimum_csv(cfg.target, theta, value))
        }
        Command::Closed(a) => {
            let cfg = a.load()?;
            closed(&a, &cfg)
        }
        Command::Presets { name: None } => {
            for (name, text) in presets::PRESETS {
                println!("{name:<6} {}", presets::summary(text));
            }
            Ok(())
        }
        Command::Presets { name: Some(name) } => {
            let text =
                presets::preset_text(&name).ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("battery: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
