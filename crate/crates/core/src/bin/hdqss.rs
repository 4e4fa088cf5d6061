use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hdqss::harness::{emit_report, parse_scenario, run_scenario, HarnessConfig, ReportFormat};

/// Run a scenario script and print its transcript.
#[derive(Parser)]
#[command(name = "hdqss", version)]
struct Args {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = hdqss::harness::DEFAULT_KEY_BITS)]
    key_bits: usize,
    #[arg(long, default_value_t = hdqss::subprotocol::DEFAULT_QBER_THRESHOLD)]
    qber_threshold: f64,
    #[arg(long, default_value = "text", value_parser = |s: &str| s.parse::<ReportFormat>())]
    format: ReportFormat,
    /// Scenario file; standard input when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let text = match &args.scenario {
        Some(path) => std::fs::read_to_string(path),
        None => {
            let mut buf = String::new();
            std::io::stdin().read_to_string(&mut buf).map(|_| buf)
        }
    };
    let text = match text {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read scenario: {e}");
            return ExitCode::from(1);
        }
    };
    let scenario = match parse_scenario(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let config = HarnessConfig {
        key_bits: args.key_bits,
        qber_threshold: args.qber_threshold,
    };
    let transcript = match run_scenario(&scenario, args.seed, &config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    print!("{}", emit_report(&transcript, args.format));
    if transcript.is_clean() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
