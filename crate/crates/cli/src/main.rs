use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use modint_cli::output::plot_script;
use modint_cli::{parse_config, run_scenario, write_outputs, CliError, Options, Scenario};

#[derive(Parser)]
#[command(name = "modint", version, about = "1D elastic waves across a time-modulated interface")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and dump snapshot, receiver and energy tables.
    Simulate(Common),
    /// Compare against the characteristics solution.
    Validate(Common),
    /// Grid-refinement study against the characteristics solution.
    Converge(Common),
    /// Energy history, balance residual and the energy-change sweep.
    Energy(Common),
    /// Harmonic-balance scattering coefficients.
    Hbm(Common),
    /// Simulated harmonic amplitudes against harmonic balance.
    Harmonics(Common),
    /// Reflection from an impedance-matched modulated interface.
    Impedance(Common),
    /// Source/receiver swap sweep over the modulation frequency.
    Nonreciprocity(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config (defaults to the built-in preset).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for CSV output.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override the number of cells.
    #[arg(long, value_name = "N")]
    nx: Option<usize>,
    /// Override the modulation frequency.
    #[arg(long, value_name = "HZ")]
    fm: Option<f64>,
    /// Fixed seed for randomised checks.
    #[arg(long)]
    seedless: bool,
    /// Also write a gnuplot script next to the CSVs.
    #[arg(long)]
    plot_script: bool,
}

fn split(cmd: Command) -> (Scenario, Common) {
    match cmd {
        Command::Simulate(c) => (Scenario::Simulate, c),
        Command::Validate(c) => (Scenario::Validate, c),
        Command::Converge(c) => (Scenario::Converge, c),
        Command::Energy(c) => (Scenario::Energy, c),
        Command::Hbm(c) => (Scenario::Hbm, c),
        Command::Harmonics(c) => (Scenario::Harmonics, c),
        Command::Impedance(c) => (Scenario::Impedance, c),
        Command::Nonreciprocity(c) => (Scenario::Nonreciprocity, c),
    }
}

fn execute(scenario: Scenario, args: Common) -> Result<bool, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => scenario.preset_config(),
    };
    if let Some(nx) = args.nx {
        cfg = cfg.with_nx(nx);
    }
    if let Some(fm) = args.fm {
        cfg = cfg.with_fm(fm);
    }
    let report = run_scenario(&cfg, scenario, Options { seedless: args.seedless })?;
    for c in &report.checks {
        println!("{c}");
    }
    let out = args.out.or_else(|| cfg.output.clone().map(PathBuf::from));
    if let Some(dir) = out {
        for p in write_outputs(&dir, &report.tables)? {
            log::info!("wrote {}", p.display());
        }
        if args.plot_script {
            std::fs::write(dir.join("plot.gp"), plot_script(&report.tables))?;
        }
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (scenario, args) = split(cli.command);
    match execute(scenario, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
