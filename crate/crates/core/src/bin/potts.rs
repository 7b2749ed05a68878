use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use potts::cli::{run_file, RunOptions, Task};
use potts::Error;

/// Max κ-cut and multi-species Potts experiments from a JSON config.
#[derive(Parser, Debug)]
#[command(name = "potts", version)]
struct Args {
    task: Task,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's `out`, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Ok(v) = std::env::var("POTTS_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                // only fails if a pool already exists
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("POTTS_THREADS must be a positive integer, got `{v}`");
                return ExitCode::from(2);
            }
        }
    }
    match run_file(args.task, &args.config, &RunOptions { seed: args.seed, out: args.out }) {
        Ok(report) => {
            for l in &report.lines {
                println!("{l}");
            }
            println!("wrote {} and {}", report.csv.display(), report.summary.display());
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e @ (Error::ConfigInvalid(_) | Error::SuiteUnknown(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
