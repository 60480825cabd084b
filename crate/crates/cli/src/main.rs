use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use mmfe_cli::compare::compare;
use mmfe_cli::format::{num, opt};
use mmfe_cli::plotdata::{plotdata, PlotKind};
use mmfe_cli::{run, CliError, RunConfig, BUNDLED};
use mmfe_core::envs::REGISTRY;
use mmfe_core::Status;

#[derive(Parser)]
#[command(name = "mmfe", version, about = "Stationary multi-type mean-field equilibria: exact and learned")]
struct Cli {
    /// Worker threads; 1 runs everything on the calling thread.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a solver from a TOML config (a path or a bundled config name).
    Run {
        #[arg(long)]
        config: String,
        /// Output directory; defaults to the config's `out` or runs/<config name>.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare the artifacts of two runs on the same environment.
    Compare {
        first: PathBuf,
        second: PathBuf,
        /// Also write compare.json and residuals.csv into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit tidy (x, series, value) plot data from a run.
    Plotdata {
        /// A run directory or its trace.csv.
        #[arg(long)]
        trace: PathBuf,
        /// policy, residual or mean_state.
        #[arg(long)]
        kind: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Registered environments.
    Envs {
        #[command(subcommand)]
        action: EnvsAction,
    },
}

#[derive(Subcommand)]
enum EnvsAction {
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = e.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            eprintln!("error: {e:#}");
            ExitCode::from(code as u8)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Run { config, out, seed } => {
            let (mut cfg, _) = RunConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg = cfg.with_seed(seed);
            }
            let stem = PathBuf::from(&config).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or(config);
            let dir = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("runs").join(stem));
            let outcome = run(&cfg, &dir)?;
            let r = &outcome.report;
            println!(
                "{} after {} iterations, residual {}, wrote {}",
                r["status"].as_str().unwrap_or(""),
                r["iterations"],
                num(r["residual"].as_f64().unwrap_or(f64::NAN)),
                outcome.out_dir.display()
            );
            Ok(if outcome.status == Status::Converged { 0 } else { 3 })
        }
        Command::Compare { first, second, out } => {
            let cmp = compare(&first, &second)?;
            let text = serde_json::to_string_pretty(&cmp)?;
            println!("{text}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).with_context(|| dir.display().to_string())?;
                std::fs::write(dir.join("compare.json"), text + "\n")?;
                let mut w = csv::Writer::from_path(dir.join("residuals.csv"))?;
                w.write_record(["m", "first_residual", "second_residual"])?;
                for r in &cmp.residuals {
                    w.write_record([r.m.to_string(), opt(r.first), opt(r.second)])?;
                }
                w.flush()?;
            }
            Ok(0)
        }
        Command::Plotdata { trace, kind, out } => {
            let kind: PlotKind = kind.parse()?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path).with_context(|| path.display().to_string())?;
                    plotdata(&trace, kind, file)?;
                }
                None => plotdata(&trace, kind, std::io::stdout().lock())?,
            }
            Ok(0)
        }
        Command::Envs { action: EnvsAction::List } => {
            for (name, description) in REGISTRY {
                println!("{name:<12} {description}");
            }
            println!("{:<12} custom table environment given inline as [env.table]", "table");
            println!();
            println!("bundled configs: {}", BUNDLED.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "));
            Ok(0)
        }
    }
}
