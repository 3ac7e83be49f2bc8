//! Text tables and figure data from aggregate reports.

use std::fmt::Write;

use super::AggregateReport;
use crate::task::FaultType;

fn rate(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

fn render(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate().take(cols) {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        for (i, cell) in cells.iter().enumerate() {
            if i == 0 {
                let _ = write!(out, "{cell:<w$}", w = widths[0]);
            } else {
                let _ = write!(out, "  {cell:>w$}", w = widths[i]);
            }
        }
        out.push('\n');
    };
    line(&mut out, header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&mut out, &rule);
    for row in rows {
        line(&mut out, row);
    }
    out
}

/// One row per agent: success, mean violations, recovery, mean calls.
pub fn overall_table(reports: &[AggregateReport]) -> String {
    let header = ["Agent", "Success", "Violations", "Recovery", "Calls"].map(String::from);
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.agent.clone(),
                format!("{:.3}", r.overall.success_rate),
                format!("{:.3}", r.overall.mean_policy_violations),
                format!("{:.3}", r.overall.recovery_rate.unwrap_or(0.0)),
                format!("{:.2}", r.overall.mean_tool_calls),
            ]
        })
        .collect();
    render(&header, &rows)
}

/// Fault-conditioned success and recovery, one column per agent.
pub fn fault_table(reports: &[AggregateReport]) -> String {
    let mut header = vec!["Setting".to_string()];
    header.extend(reports.iter().map(|r| r.agent.clone()));
    let settings: [(&str, FaultType, bool); 6] = [
        ("Timeout success", FaultType::Timeout, false),
        ("Timeout recovery", FaultType::Timeout, true),
        ("Schema drift success", FaultType::SchemaDrift, false),
        ("Schema drift recovery", FaultType::SchemaDrift, true),
        ("Authz success", FaultType::AuthFailure, false),
        ("Rate limit success", FaultType::RateLimit, false),
    ];
    let rows: Vec<Vec<String>> = settings
        .iter()
        .map(|(label, family, recovery)| {
            let mut row = vec![label.to_string()];
            row.extend(reports.iter().map(|r| {
                let s = r.by_fault.get(family.as_str());
                rate(s.and_then(|s| {
                    if *recovery {
                        s.recovery_rate.or(Some(0.0))
                    } else {
                        Some(s.success_rate)
                    }
                }))
            }));
            row
        })
        .collect();
    render(&header, &rows)
}

/// `cap,success` lines for one agent's budgeted-success curve.
pub fn budget_curve_csv(report: &AggregateReport) -> String {
    let mut out = String::from("k,success\n");
    for p in &report.budgeted_success {
        let _ = writeln!(out, "{},{}", p.cap, p.success);
    }
    out
}
