use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rmtlab::harness::{prepare_config, ExperimentConfig, ExperimentKind, Format, HarnessError};

#[derive(Parser)]
#[command(
    name = "rmtlab",
    version,
    about = "Random-matrix universality experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; results do not depend on this.
        #[arg(long, env = "RMTLAB_THREADS", default_value_t = 1)]
        threads: usize,
        /// Report destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
    },
    /// Print the experiment names.
    ListExperiments,
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn load(path: &Path) -> Result<(ExperimentConfig, String), HarnessError> {
    let text = std::fs::read_to_string(path)?;
    Ok((ExperimentConfig::parse(&text)?, text))
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<12} {}", k.name(), k.about());
            }
            Ok(true)
        }
        Command::Validate { config } => {
            let (cfg, text) = load(&config)?;
            let p = prepare_config(cfg, &text)?;
            println!("ok: {} ({})", p.kind.name(), p.config_hash());
            Ok(true)
        }
        Command::Run {
            config,
            seed,
            threads,
            out,
            format,
        } => {
            let (mut cfg, text) = load(&config)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(f) = format {
                cfg.format = f;
            }
            let out = out.or_else(|| cfg.output.clone());
            let format = cfg.format;
            let report = prepare_config(cfg, &text)?.run(threads)?;
            let body = report.render(format);
            match out {
                Some(path) => std::fs::write(path, body)?,
                None => print!("{body}"),
            }
            for r in report.failures() {
                eprintln!(
                    "FAIL {} n={} value={} bounds=[{}, {}]",
                    r.statistic,
                    r.n.map_or("-".into(), |n| n.to_string()),
                    r.value,
                    r.lo.map_or("-".into(), |v| v.to_string()),
                    r.hi.map_or("-".into(), |v| v.to_string()),
                );
            }
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("rmtlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
