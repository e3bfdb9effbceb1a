//! Import of foreign coverage exports.
//!
//! The accepted format is a tab-separated listing, one target per line:
//!
//! ```text
//! # kind  file        start  end     status
//! stmt    listing1.v  3:3    3:10    hit
//! branch  listing1.v  5:3    5:10    miss
//! ```
//!
//! `kind` is `stmt`/`statement` or `branch`; status aliases are
//! `covered|hit|proven`, `uncovered|miss|open`, `unreachable|dead|excluded`.
//! Blank lines and `#` comments are skipped. Rows are matched to enumerated
//! targets by kind and span.

use super::report::{compute_coverage, CoverageReport, Status, TargetRecord};
use super::targets::{CoverageTarget, TargetKind};
use super::CoverageError;

fn bad(line: usize, reason: &str) -> CoverageError {
    CoverageError::Schema {
        pointer: format!("line {line}"),
        reason: reason.to_string(),
    }
}

fn coord(s: &str, line: usize) -> Result<(u32, u32), CoverageError> {
    let (l, c) = s
        .split_once(':')
        .ok_or_else(|| bad(line, "expected line:col"))?;
    let l = l.trim().parse().map_err(|_| bad(line, "bad line number"))?;
    let c = c.trim().parse().map_err(|_| bad(line, "bad column number"))?;
    Ok((l, c))
}

/// Convert a foreign export into a canonical report over `targets`.
/// Targets that the export does not mention are UNCOVERED.
pub fn import_tsv(
    text: &str,
    design: &str,
    iteration: u32,
    targets: &[CoverageTarget],
    exclude_unreachable: bool,
) -> Result<CoverageReport, CoverageError> {
    let mut statuses = vec![Status::Uncovered; targets.len()];
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = row.split('\t').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(bad(line, "expected 5 tab-separated columns"));
        }
        let kind = match cols[0].to_ascii_lowercase().as_str() {
            "stmt" | "statement" => TargetKind::Statement,
            "branch" => TargetKind::Branch,
            _ => return Err(bad(line, "unknown kind")),
        };
        let start = coord(cols[2], line)?;
        let end = coord(cols[3], line)?;
        let status = match cols[4].to_ascii_lowercase().as_str() {
            "covered" | "hit" | "proven" => Status::Covered,
            "uncovered" | "miss" | "open" => Status::Uncovered,
            "unreachable" | "dead" | "excluded" => Status::Unreachable,
            _ => return Err(bad(line, "unknown status")),
        };
        let idx = targets
            .iter()
            .position(|t| t.kind == kind && t.span.start() == start && t.span.end() == end)
            .ok_or_else(|| CoverageError::UnknownTarget {
                id: format!("{}:{}.{}-{}.{}", cols[1], start.0, start.1, end.0, end.1),
            })?;
        statuses[idx] = status;
    }
    let mut report = CoverageReport {
        design: design.to_string(),
        iteration,
        targets: targets
            .iter()
            .zip(&statuses)
            .map(|(t, s)| TargetRecord {
                id: t.id.clone(),
                kind: t.kind,
                start: [t.span.start_line, t.span.start_col],
                end: [t.span.end_line, t.span.end_col],
                status: *s,
            })
            .collect(),
        coverage_pct: 0.0,
    };
    report.coverage_pct = compute_coverage(&report, exclude_unreachable);
    Ok(report)
}
