use std::fmt::Write as _;
use std::str::FromStr;

use crate::analysis;

use super::run::Transcript;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown format {other:?} (expected text or csv)")),
        }
    }
}

pub const TRANSCRIPT_CSV_HEADER: [&str; 6] = [
    "index",
    "line",
    "event",
    "outcome",
    "km_fingerprint",
    "public",
];

fn public_field(pairs: &[(String, String)]) -> String {
    let parts: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
    parts.join(";")
}

pub fn emit_report(transcript: &Transcript, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(transcript),
        ReportFormat::Csv => render_csv(transcript),
    }
}

fn render_text(t: &Transcript) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# transcript seed={} key_bits={} qber_threshold={}",
        t.seed, t.key_length, t.qber_threshold
    );
    let rows: Vec<[String; 6]> = t
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            [
                (i + 1).to_string(),
                e.line.to_string(),
                e.event.clone(),
                e.outcome.to_string(),
                e.km_fingerprint.clone(),
                public_field(&e.public),
            ]
        })
        .collect();
    let header = TRANSCRIPT_CSV_HEADER.map(String::from);
    let mut widths = header.clone().map(|h| h.len());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    for row in std::iter::once(&header).chain(&rows) {
        let mut line = String::new();
        for (i, (cell, w)) in row.iter().zip(widths).enumerate() {
            if i + 1 == row.len() {
                line.push_str(cell);
            } else {
                let _ = write!(line, "{cell:<w$}  ");
            }
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
    if t.entries.is_empty() {
        return out;
    }
    for (i, e) in t.entries.iter().enumerate() {
        if let Some(table) = &e.table {
            let _ = writeln!(out, "\n## efficiency table (event {})", i + 1);
            out.push_str(&analysis::render_table_text(table));
        }
    }
    let _ = writeln!(out, "\n## final tree");
    out.push_str(&t.final_tree);
    out
}

fn render_csv(t: &Transcript) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRANSCRIPT_CSV_HEADER)
        .expect("in-memory write");
    for (i, e) in t.entries.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            e.line.to_string(),
            e.event.clone(),
            e.outcome.to_string(),
            e.km_fingerprint.clone(),
            public_field(&e.public),
        ])
        .expect("in-memory write");
    }
    let mut out = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
    for e in &t.entries {
        if let Some(table) = &e.table {
            out.push('\n');
            out.push_str(&analysis::render_table_csv(table));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{parse_scenario, run_scenario, HarnessConfig};

    fn transcript(text: &str) -> Transcript {
        run_scenario(&parse_scenario(text).unwrap(), 1, &HarnessConfig::default()).unwrap()
    }

    #[test]
    fn empty_transcript_is_header_only() {
        let t = transcript("# nothing\n");
        assert_eq!(
            emit_report(&t, ReportFormat::Csv),
            "index,line,event,outcome,km_fingerprint,public\n"
        );
        let text = emit_report(&t, ReportFormat::Text);
        assert_eq!(text.lines().count(), 2);
        assert!(text.ends_with("index  line  event  outcome  km_fingerprint  public\n"));
    }

    #[test]
    fn text_columns_align() {
        let text = emit_report(
            &transcript("join_primary Bob oracle\nrevoke Zed\n"),
            ReportFormat::Text,
        );
        let lines: Vec<&str> = text.lines().take(4).collect();
        let col = lines[1].find("km_fingerprint").unwrap();
        for row in &lines[2..] {
            let fp = &row[col..col + 16];
            assert!(fp.chars().all(|c| c.is_ascii_hexdigit()), "{row}");
        }
        assert!(lines[3].contains("rejected: unknown agent Zed"));
    }

    #[test]
    fn csv_appends_tables() {
        let csv = emit_report(&transcript("emit_table 3\n"), ReportFormat::Csv);
        let (_, table) = csv.split_once("\n\n").unwrap();
        assert!(table.starts_with("m,protocol,c,q,b,eta1,eta1_percent,eta2,eta2_percent\n"));
        assert!(table.contains("3,Proposed,1,4,1,1/4,25%,1/5,20%\n"));
    }

    #[test]
    fn format_parses() {
        assert_eq!("csv".parse(), Ok(ReportFormat::Csv));
        assert_eq!("text".parse(), Ok(ReportFormat::Text));
        assert!("json".parse::<ReportFormat>().is_err());
    }
}
