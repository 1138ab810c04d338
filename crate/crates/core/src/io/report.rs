use std::fmt::Write as _;
use std::str::FromStr;

use crate::analysis::AnalysisReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}` (expected text, csv or json)")),
        }
    }
}

const COLUMNS: [&str; 7] = ["transaction", "action", "priority", "deadline", "wcrt", "feasible", "instances"];

fn rows(report: &AnalysisReport) -> Vec<[String; 7]> {
    report
        .results
        .iter()
        .map(|r| {
            [
                r.transaction.to_string(),
                r.action.to_string(),
                r.priority.to_string(),
                r.deadline.to_string(),
                r.wcrt.map(|w| w.to_string()).unwrap_or_default(),
                r.feasible.to_string(),
                r.instances.to_string(),
            ]
        })
        .collect()
}

/// Renders a report. Output is a pure function of the report and always
/// ends with a newline.
pub fn render_report(report: &AnalysisReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(report),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(report).expect("reports serialize");
            out.push('\n');
            out
        }
    }
}

fn render_csv(report: &AnalysisReport) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(COLUMNS).expect("writing to memory");
    for row in rows(report) {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv of utf-8 fields")
}

fn render_text(report: &AnalysisReport) -> String {
    let mut table = rows(report);
    for row in &mut table {
        if row[4].is_empty() {
            row[4] = "-".into();
        }
        row[5] = if row[5] == "true" { "yes" } else { "NO" }.into();
    }
    let mut widths = COLUMNS.map(str::len);
    for row in &table {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let mut text = String::new();
        for (k, cell) in cells.iter().enumerate() {
            if k > 0 {
                text.push_str("  ");
            }
            // Text columns left-aligned, numbers right-aligned.
            if k < 2 || k == 5 {
                let _ = write!(text, "{cell:<w$}", w = widths[k]);
            } else {
                let _ = write!(text, "{cell:>w$}", w = widths[k]);
            }
        }
        out.push_str(text.trim_end());
        out.push('\n');
    };
    line(&COLUMNS);
    for row in &table {
        line(&row.each_ref().map(String::as_str));
    }
    for d in &report.diagnostics {
        let _ = writeln!(out, "note: {d}");
    }
    let verdict = if report.system_feasible { "feasible" } else { "INFEASIBLE" };
    let _ = writeln!(out, "system: {verdict}");
    out
}
