use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use hdqss::analysis::{comparison_table, render_table_csv, render_table_text};
use hdqss::harness::{
    emit_report, parse_scenario, run_scenario, HarnessConfig, ReportFormat, ScenarioEvent,
    DIRECTIVES,
};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn scenario_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(fixtures())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "scn"))
        .collect();
    files.sort();
    files
}

fn report(path: &Path, seed: u64, format: ReportFormat) -> String {
    let scenario = parse_scenario(&fs::read_to_string(path).unwrap()).unwrap();
    let transcript = run_scenario(&scenario, seed, &HarnessConfig::default()).unwrap();
    emit_report(&transcript, format)
}

#[test]
fn sample_has_nine_events() {
    let s = parse_scenario(&fs::read_to_string(fixtures().join("sample.scn")).unwrap()).unwrap();
    assert_eq!(s.events.len(), 9);
}

#[test]
fn at_least_five_fixtures_cover_core_paths() {
    let files = scenario_files();
    assert!(files.len() >= 5);
    let mut seen = std::collections::BTreeSet::new();
    for f in &files {
        for line in parse_scenario(&fs::read_to_string(f).unwrap())
            .unwrap()
            .events
        {
            seen.insert(line.event.directive());
        }
    }
    for d in ["join_primary", "revoke", "promote", "lock", "broadcast"] {
        assert!(seen.contains(d), "no fixture exercises {d}");
    }
}

#[test]
fn replays_are_byte_identical() {
    for f in scenario_files() {
        for format in [ReportFormat::Text, ReportFormat::Csv] {
            assert_eq!(
                report(&f, 42, format),
                report(&f, 42, format),
                "{}",
                f.display()
            );
        }
    }
}

#[test]
fn sample_matches_golden() {
    let golden = fixtures().join("golden");
    let sample = fixtures().join("sample.scn");
    assert_eq!(
        report(&sample, 1, ReportFormat::Text),
        fs::read_to_string(golden.join("sample_seed1.txt")).unwrap()
    );
    assert_eq!(
        report(&sample, 1, ReportFormat::Csv),
        fs::read_to_string(golden.join("sample_seed1.csv")).unwrap()
    );
    assert_eq!(
        report(&fixtures().join("efficiency.scn"), 7, ReportFormat::Csv),
        fs::read_to_string(golden.join("efficiency_seed7.csv")).unwrap()
    );
}

#[test]
fn table_matches_golden() {
    let rows = comparison_table(&[3, 50]).unwrap();
    let golden = fixtures().join("golden");
    assert_eq!(
        render_table_text(&rows),
        fs::read_to_string(golden.join("table_3_50.txt")).unwrap()
    );
    assert_eq!(
        render_table_csv(&rows),
        fs::read_to_string(golden.join("table_3_50.csv")).unwrap()
    );
}

#[test]
fn different_seeds_differ() {
    let f = fixtures().join("sample.scn");
    assert_ne!(
        report(&f, 1, ReportFormat::Csv),
        report(&f, 2, ReportFormat::Csv)
    );
}

/// Every public tree/sharing/analysis operation and the directive that reaches it.
#[test]
fn grammar_reaches_every_operation() {
    let ops = [
        ("HierarchyTree::join_primary", "join_primary"),
        ("HierarchyTree::join_secondary", "join_secondary"),
        ("HierarchyTree::revoke", "revoke"),
        ("HierarchyTree::promote", "promote"),
        ("HierarchyTree::set_inclusion", "set_inclusion"),
        ("HierarchyTree::residual_key", "recover"),
        ("sharing::recover_master", "recover"),
        ("sharing::collusion_xor", "audit_collusion"),
        ("sharing::broadcast_message", "broadcast"),
        ("sharing::recover_message", "recover_message"),
        ("sharing::lock_agent", "lock"),
        ("sharing::disclose", "disclose"),
        ("analysis::audit_collusion", "audit_collusion"),
        ("analysis::eta1", "emit_table"),
        ("analysis::eta2_proposed", "emit_table"),
        ("analysis::comparison_table", "emit_table"),
    ];
    for (op, directive) in ops {
        assert!(DIRECTIVES.contains(&directive), "{op} unreachable");
    }
    let used: std::collections::BTreeSet<&str> = ops.iter().map(|(_, d)| *d).collect();
    assert_eq!(
        used.len(),
        DIRECTIVES.len(),
        "a directive maps to no operation"
    );
    // Parsing one line per directive yields that directive back.
    let text = "join_primary A oracle\njoin_secondary A B oracle\nrevoke B\npromote B A oracle\n\
                set_inclusion A B on\nlock A\ndisclose\nbroadcast 0\nrecover A\nrecover_message\n\
                audit_collusion 1 2\nemit_table 3\n";
    let parsed: Vec<&str> = parse_scenario(text)
        .unwrap()
        .events
        .iter()
        .map(|l| l.event.directive())
        .collect();
    assert_eq!(parsed, DIRECTIVES);
    assert!(matches!(
        parse_scenario("recover_message").unwrap().events[0].event,
        ScenarioEvent::RecoverMessage
    ));
}

fn cli(args: &[&str], stdin: Option<&str>) -> (i32, String, String) {
    use std::io::Write;
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hdqss"));
    cmd.args(args)
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped());
    let mut child = cmd.spawn().unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.unwrap_or("").as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn cli_matches_library_output() {
    let path = fixtures().join("sample.scn");
    let (code, stdout, _) = cli(&["--seed", "1", "--scenario", path.to_str().unwrap()], None);
    assert_eq!(code, 0);
    assert_eq!(
        stdout,
        fs::read_to_string(fixtures().join("golden/sample_seed1.txt")).unwrap()
    );
}

#[test]
fn cli_reads_stdin_and_formats_csv() {
    let (code, stdout, _) = cli(
        &["--format", "csv", "--key-bits", "8"],
        Some("join_primary Bob oracle\n"),
    );
    assert_eq!(code, 0);
    assert!(stdout.starts_with(
        "index,line,event,outcome,km_fingerprint,public\n1,1,join_primary Bob oracle,ok,"
    ));
}

#[test]
fn cli_abort_exits_zero() {
    let path = fixtures().join("eavesdrop.scn");
    let scenario = "join_primary Bob bb84:eve\n";
    let (code, stdout, _) = cli(&["--seed", "3"], Some(scenario));
    assert_eq!(code, 0);
    assert!(stdout.contains("aborted: QberExceeded"));
    // The eavesdrop fixture also contains a rejected recover.
    let (code, _, _) = cli(&["--scenario", path.to_str().unwrap()], None);
    assert_eq!(code, 2);
}

#[test]
fn cli_parse_and_config_errors_exit_one() {
    let (code, _, stderr) = cli(&[], Some("revoke\n"));
    assert_eq!(code, 1);
    assert!(stderr.contains("line 1"));
    let (code, _, _) = cli(&["--key-bits", "0"], Some(""));
    assert_eq!(code, 1);
    let (code, _, _) = cli(&["--qber-threshold", "1.5"], Some(""));
    assert_eq!(code, 1);
    let (code, _, _) = cli(&["--format", "json"], Some(""));
    assert_eq!(code, 1);
    let (code, _, _) = cli(&["--scenario", "/nonexistent.scn"], None);
    assert_eq!(code, 1);
}
