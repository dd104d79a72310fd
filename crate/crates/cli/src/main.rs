use std::process::ExitCode;

use clap::Parser;
use sphere_partition_cli::{execute, parse_config, Args, OUT_ENV};

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match parse_config(&args, std::env::var_os(OUT_ENV).map(Into::into)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match execute(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: writing to {}: {e}", cfg.output_dir.display());
            return ExitCode::from(3);
        }
    };
    let out = cfg.output_dir.join("report.json");
    match (&report.status.failed_stage, report.passed()) {
        (Some(stage), _) => {
            eprintln!(
                "stage {stage} failed: {}; report in {}",
                report.status.error.as_deref().unwrap_or(""),
                out.display()
            );
            ExitCode::FAILURE
        }
        (None, false) => {
            eprintln!("verification failed; report in {}", out.display());
            ExitCode::FAILURE
        }
        (None, true) => {
            println!("ok; report in {}", out.display());
            ExitCode::SUCCESS
        }
    }
}
