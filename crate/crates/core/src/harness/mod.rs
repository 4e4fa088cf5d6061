//! Scenario-driven runs of the protocol engine with deterministic transcripts.

mod report;
mod run;
mod scenario;

pub use report::{emit_report, ReportFormat, TRANSCRIPT_CSV_HEADER};
pub use run::{
    run_scenario, ConfigError, HarnessConfig, Outcome, Transcript, TranscriptEntry,
    DEFAULT_KEY_BITS,
};
pub use scenario::{
    parse_scenario, ParseError, Scenario, ScenarioEvent, ScenarioLine, SubprotocolSpec,
    DEFAULT_BOSS, DIRECTIVES,
};
