//! `nasep`: sweeps, reports and the verification suite from the command line.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nasep::experiments::{
    instance_report, kdq_for, run_sweep, verify, write_kdq_csv, Figure, InstanceConfig, KdqKind, SweepConfig,
};
use nasep::{Error, Result};

#[derive(Parser)]
#[command(name = "nasep", version, about = "Entropy production with noncommuting charges")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Forward,
    Reverse,
    Symmetrized,
}

#[derive(Subcommand)]
enum Command {
    /// Run every invariant check and write a JSON report; exit status 0 iff all pass.
    Verify {
        /// Extra instance (JSON instance config) added to the checked set.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of random seeded instances.
        #[arg(long, default_value_t = 25)]
        seeds: u64,
        /// Report path; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sweep one figure's parameters and write CSV.
    Sweep {
        #[arg(long, value_parser = ["3", "4", "5"])]
        figure: String,
        /// JSON sweep config overriding the figure defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV; falls back to the config's `out_path`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump one quasiprobability distribution as CSV.
    Kdq {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "forward")]
        kind: KindArg,
    },
    /// Write every SEP average and fluctuation theorem for one instance as JSON.
    Instance {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => serde_json::to_writer_pretty(create(p)?, value)?,
        None => {
            serde_json::to_writer_pretty(std::io::stdout().lock(), value)?;
            println!();
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Verify { config, seeds, report } => {
            let cfg = config.as_deref().map(InstanceConfig::from_file).transpose()?;
            let result = verify(cfg.as_ref(), seeds);
            write_json(&result, report.as_deref())?;
            for p in result.properties.iter().filter(|p| !p.pass) {
                eprintln!("FAIL {}: {}", p.name, p.failures.join("; "));
            }
            Ok(result.pass)
        }
        Command::Sweep { figure, config, out } => {
            let figure: Figure = figure.parse()?;
            let cfg = match config {
                Some(p) => SweepConfig::from_file(&p)?,
                None => SweepConfig::default(),
            };
            let out = out
                .or_else(|| cfg.out_path.clone())
                .ok_or_else(|| Error::Config("no output path: pass --out or set out_path".into()))?;
            let table = run_sweep(figure, &cfg)?;
            table.write_csv(create(&out)?)?;
            Ok(true)
        }
        Command::Kdq { config, out, kind } => {
            let inst = InstanceConfig::from_file(&config)?.build()?;
            let kind = match kind {
                KindArg::Forward => KdqKind::Forward,
                KindArg::Reverse => KdqKind::Reverse,
                KindArg::Symmetrized => KdqKind::Symmetrized,
            };
            write_kdq_csv(kdq_for(&inst, kind)?, create(&out)?)?;
            Ok(true)
        }
        Command::Instance { config, report } => {
            let cfg = InstanceConfig::from_file(&config)?;
            write_json(&instance_report(&cfg)?, Some(&report))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
