use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rad_bench::acceptance;
use rad_bench::runner;
use rad_bench::{compare, BenchError, ExperimentConfig, Summary};

#[derive(Parser)]
#[command(name = "radbench", version, about = "Run optimizer experiments and the acceptance suite")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (optimizer, seed) pair of an experiment config.
    Run {
        config: PathBuf,
        /// Output root; overrides the config's `out` (default `runs`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated seeds replacing the config's list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Worker threads; runs are sequential by default.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Relative improvement of summary A over summary B.
    Compare { a: PathBuf, b: PathBuf },
    /// Run the acceptance criteria.
    Accept {
        /// Comma-separated criterion numbers; all by default.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u8>>,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
}

fn run(config: PathBuf, out: Option<PathBuf>, seeds: Option<Vec<u64>>, parallel: usize) -> Result<(), BenchError> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(seeds) = seeds {
        cfg = cfg.with_seeds(seeds)?;
    }
    let out = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("runs"));
    for (label, s) in runner::run(&cfg, &out, parallel)? {
        let agg = s.aggregate();
        println!(
            "{label}: {} = {} ± {} over {} finished seeds, {} DIV ({})",
            s.metric,
            agg.mean,
            agg.std,
            s.rows.len() - agg.div_count,
            agg.div_count,
            out.join(runner::summary_path(&cfg.name, &label)).display()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seeds, parallel } => run(config, out, seeds, parallel),
        Command::Compare { a, b } => {
            Summary::read(&a).and_then(|sa| Summary::read(&b).and_then(|sb| compare(&sa, &sb))).map(|c| print!("{c}"))
        }
        Command::Accept { only, parallel } => {
            let ids = only.unwrap_or_else(|| acceptance::IDS.to_vec());
            let mut failed = 0;
            for id in ids {
                let outcome = acceptance::run(id, parallel);
                println!("{outcome}");
                failed += usize::from(!outcome.passed);
            }
            if failed > 0 {
                eprintln!("{failed} criteria failed");
                return ExitCode::from(1);
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("radbench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
