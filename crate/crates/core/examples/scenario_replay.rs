//! Parse a scenario script, run it with a seed and print the transcript.
//!
//! cargo run --example scenario_replay [path] [seed]

use hdqss::harness::{emit_report, parse_scenario, run_scenario, HarnessConfig, ReportFormat};

const DEFAULT: &str = "\
join_primary Bob oracle
join_primary Charlie bb84
join_secondary Bob Elsa oracle
lock Charlie
recover Bob Charlie Elsa
disclose
recover Bob Charlie Elsa
broadcast 0000000000000000000000000000beef
recover_message
";

fn main() {
    let mut args = std::env::args().skip(1);
    let text = match args.next() {
        Some(path) => std::fs::read_to_string(path).expect("readable scenario"),
        None => DEFAULT.to_string(),
    };
    let seed = args
        .next()
        .map_or(1, |s| s.parse().expect("seed must be an integer"));
    let scenario = match parse_scenario(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    let transcript = run_scenario(&scenario, seed, &HarnessConfig::default()).unwrap();
    print!("{}", emit_report(&transcript, ReportFormat::Text));
    let replay = run_scenario(&scenario, seed, &HarnessConfig::default()).unwrap();
    assert_eq!(
        emit_report(&replay, ReportFormat::Csv),
        emit_report(&transcript, ReportFormat::Csv)
    );
}
