use std::path::PathBuf;
use std::process::ExitCode;

use agelab_cli::{commands, load_config, write_outputs, CliError, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "agelab", version, about = "Age-structured renewal model laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the renewal equation; writes simulate.csv (t, b, U, V).
    Simulate(Common),
    /// Positive equilibrium profile; writes equilibrium.csv and equilibrium.json.
    Equilibrium(Common),
    /// Dominant real eigenvalue per multiplier; writes spectrum.csv.
    Spectrum(Common),
    /// Hopf locus for shifted Gamma kernels; writes hopf.json and hopf.csv.
    Hopf(Common),
    /// Sweep alpha; writes sweep.csv.
    Sweep(Common),
    /// Run the diagnostic battery; writes verify.json, exit 4 on any failure.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Time step (overrides `dt`).
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon (overrides `T`).
    #[arg(long = "T")]
    horizon: Option<f64>,
}

fn prepare(c: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = load_config(&c.config)?;
    if let Some(dt) = c.dt {
        cfg.dt = dt;
    }
    if let Some(t) = c.horizon {
        cfg.horizon = t;
    }
    if let Some(out) = &c.out {
        cfg.out = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(command: &Command) -> Result<commands::Output, CliError> {
    let (common, driver): (&Common, fn(&RunConfig) -> agelab_cli::Result<commands::Output>) = match command {
        Command::Simulate(c) => (c, commands::simulate),
        Command::Equilibrium(c) => (c, commands::equilibrium),
        Command::Spectrum(c) => (c, commands::spectrum),
        Command::Hopf(c) => (c, commands::hopf),
        Command::Sweep(c) => (c, commands::sweep),
        Command::Verify(c) => (c, commands::verify),
    };
    let cfg = prepare(common)?;
    let out = driver(&cfg)?;
    write_outputs(&cfg.out, &out)?;
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(&cli.command) {
        Ok(out) => {
            print!("{}", out.summary);
            if out.failed_checks > 0 {
                eprintln!("error: {}", CliError::Verification(out.failed_checks));
                return ExitCode::from(4);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
