use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hybrid_attitude::runner::{
    cmd_gains_check, cmd_iss_study, cmd_simulate, iss_verdict, ObserverKind, RunnerError, ScenarioConfig,
};

#[derive(Parser)]
#[command(version, about = "Velocity-aided attitude observer simulator")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Scenario file (TOML); omitted sections use the reference scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated observers: continuous, continuous_zoh, reduced, hybrid.
    #[arg(long, global = true)]
    observers: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Generate sensor streams, run the observers and write traces, reports and a plot.
    Simulate,
    /// Check gain feasibility for the selected observers.
    GainsCheck,
    /// Ultimate-bound study of the attitude error under bounded inputs.
    IssStudy,
}

fn run(cli: &Cli) -> Result<(), RunnerError> {
    let mut config = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(list) = &cli.observers {
        config.observers = ObserverKind::parse_list(list)?;
    }
    match cli.verb {
        Verb::Simulate => {
            let (manifest, sim) = cmd_simulate(&config, &cli.out)?;
            for run in &sim.runs {
                let c = &run.report.convergence;
                println!(
                    "{:<15} steady-state |R̃|_I mean {:.3e}, max {:.3e}, jumps {}",
                    run.report.observer, c.steady_state_error, c.steady_state_max, run.report.jumps
                );
            }
            println!("wrote {} in {:.2} s", cli.out.display(), manifest.wall_clock_s);
        }
        Verb::GainsCheck => {
            let (_, report) = cmd_gains_check(&config, &cli.out)?;
            print!("{}", report.to_text());
            if !report.passed {
                return Err(RunnerError::CheckFailed("gain feasibility".into()));
            }
        }
        Verb::IssStudy => {
            let (_, result) = cmd_iss_study(&config, &cli.out)?;
            for (a, b) in result.amplitudes.iter().zip(&result.ultimate_bounds) {
                println!("amplitude {a:<8} ultimate bound {b:.3e}");
            }
            println!("derivative bound checked at {} points, {} violations", result.checks, result.violations);
            let problems = iss_verdict(&result);
            if !problems.is_empty() {
                return Err(RunnerError::CheckFailed(problems.join("; ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
