use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use medrule::{io, load_dgp, oracle_report, plot_file, run_pipeline, CliError, RayonExecutor, RunConfig};

#[derive(Parser)]
#[command(name = "medrule", version, about = "Find subgroups harmed through a mediator and estimate effects of treating the rest")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis described by a TOML config.
    Run { config: PathBuf },
    /// Draw a dataset from a discrete model.
    Simulate {
        dgp: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print exact blips and effects of a discrete model as JSON.
    Oracle { dgp: PathBuf },
    /// Render an effect table as an SVG forest plot.
    Plot {
        effects: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::load(&config)?;
            let exec = RayonExecutor::new(cli.threads);
            let (analysis, out) = run_pipeline(&cfg, &exec)?;
            for w in &analysis.report.diagnostics.warnings {
                eprintln!("warning: {w}");
            }
            for e in &analysis.report.effects {
                println!(
                    "{:<9} {:<22} {:>9.4}  ({:.4}, {:.4})",
                    e.contrast.label(),
                    e.rule,
                    e.estimate,
                    e.ci_low,
                    e.ci_high
                );
            }
            eprintln!("wrote {}", out.report.display());
        }
        Command::Simulate { dgp, n, seed, out } => {
            let d = load_dgp(&dgp)?;
            let ds = d.simulate(n, seed)?;
            io::write_table(&out, &ds.to_raw_table())?;
        }
        Command::Oracle { dgp } => {
            let d = load_dgp(&dgp)?;
            let report = oracle_report(&d)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
        }
        Command::Plot { effects, out } => plot_file(&effects, &out)?,
    }
    Ok(())
}
