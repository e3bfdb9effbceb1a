use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::targets::{CoverageTarget, TargetKind};
use super::CoverageError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Covered,
    Uncovered,
    Unreachable,
}

impl Status {
    pub fn parse(s: &str) -> Option<Status> {
        match s {
            "COVERED" => Some(Status::Covered),
            "UNCOVERED" => Some(Status::Uncovered),
            "UNREACHABLE" => Some(Status::Unreachable),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub id: String,
    pub kind: TargetKind,
    pub start: [u32; 2],
    pub end: [u32; 2],
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub design: String,
    pub iteration: u32,
    pub targets: Vec<TargetRecord>,
    pub coverage_pct: f64,
}

pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Covered share of the targets, in percent with two decimals. The empty
/// denominator counts as fully covered.
pub fn compute_coverage(report: &CoverageReport, exclude_unreachable: bool) -> f64 {
    let covered = report
        .targets
        .iter()
        .filter(|t| t.status == Status::Covered)
        .count();
    let unreachable = report
        .targets
        .iter()
        .filter(|t| t.status == Status::Unreachable)
        .count();
    let total = if exclude_unreachable {
        report.targets.len() - unreachable
    } else {
        report.targets.len()
    };
    if total == 0 {
        return 100.0;
    }
    round2(covered as f64 / total as f64 * 100.0)
}

impl CoverageReport {
    pub fn from_statuses(
        design: &str,
        iteration: u32,
        targets: &[CoverageTarget],
        statuses: &[Status],
        exclude_unreachable: bool,
    ) -> Self {
        let mut r = CoverageReport {
            design: design.to_string(),
            iteration,
            targets: targets
                .iter()
                .zip(statuses)
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
        r.coverage_pct = compute_coverage(&r, exclude_unreachable);
        r
    }

    pub fn status_of(&self, id: &str) -> Option<Status> {
        self.targets.iter().find(|t| t.id == id).map(|t| t.status)
    }

    pub fn with_status(&self, status: Status) -> impl Iterator<Item = &TargetRecord> {
        self.targets.iter().filter(move |t| t.status == status)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn write_report(report: &CoverageReport, path: &Path) -> Result<(), CoverageError> {
    std::fs::write(path, report.to_json() + "\n").map_err(|e| CoverageError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

pub fn read_report(path: &Path) -> Result<CoverageReport, CoverageError> {
    let text = std::fs::read_to_string(path).map_err(|e| CoverageError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_report(&text)
}

pub fn parse_report(text: &str) -> Result<CoverageReport, CoverageError> {
    let v: Value = serde_json::from_str(text).map_err(|e| schema("", &e.to_string()))?;
    report_from_value(&v, "")
}

fn schema(pointer: &str, reason: &str) -> CoverageError {
    CoverageError::Schema {
        pointer: pointer.to_string(),
        reason: reason.to_string(),
    }
}

fn field<'a>(v: &'a Value, base: &str, key: &str) -> Result<(&'a Value, String), CoverageError> {
    let ptr = format!("{base}/{key}");
    v.get(key)
        .map(|x| (x, ptr.clone()))
        .ok_or_else(|| schema(&ptr, "missing field"))
}

fn pair(v: &Value, ptr: &str) -> Result<[u32; 2], CoverageError> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| schema(ptr, "expected [line, col]"))?;
    let mut out = [0u32; 2];
    for (i, x) in arr.iter().enumerate() {
        out[i] = x
            .as_u64()
            .filter(|n| *n >= 1 && *n <= u32::MAX as u64)
            .ok_or_else(|| schema(&format!("{ptr}/{i}"), "expected a positive integer"))?
            as u32;
    }
    Ok(out)
}

/// Validate and convert one report object; `base` is its JSON pointer.
pub(crate) fn report_from_value(v: &Value, base: &str) -> Result<CoverageReport, CoverageError> {
    if !v.is_object() {
        return Err(schema(base, "expected an object"));
    }
    let (design, p) = field(v, base, "design")?;
    let design = design.as_str().ok_or_else(|| schema(&p, "expected a string"))?;
    let (iteration, p) = field(v, base, "iteration")?;
    let iteration = iteration
        .as_u64()
        .filter(|n| *n <= u32::MAX as u64)
        .ok_or_else(|| schema(&p, "expected a non-negative integer"))? as u32;
    let (pct, p) = field(v, base, "coverage_pct")?;
    let coverage_pct = pct
        .as_f64()
        .filter(|x| (0.0..=100.0).contains(x))
        .ok_or_else(|| schema(&p, "expected a number in [0, 100]"))?;
    let (targets, p) = field(v, base, "targets")?;
    let targets = targets
        .as_array()
        .ok_or_else(|| schema(&p, "expected an array"))?;
    let mut records = Vec::with_capacity(targets.len());
    for (i, t) in targets.iter().enumerate() {
        let tb = format!("{p}/{i}");
        let (id, ip) = field(t, &tb, "id")?;
        let id = id.as_str().ok_or_else(|| schema(&ip, "expected a string"))?;
        let (kind, kp) = field(t, &tb, "kind")?;
        let kind = match kind.as_str() {
            Some("STATEMENT") => TargetKind::Statement,
            Some("BRANCH") => TargetKind::Branch,
            _ => return Err(schema(&kp, "expected STATEMENT or BRANCH")),
        };
        let (start, sp) = field(t, &tb, "start")?;
        let (end, ep) = field(t, &tb, "end")?;
        let (status, stp) = field(t, &tb, "status")?;
        let status = status
            .as_str()
            .and_then(Status::parse)
            .ok_or_else(|| schema(&stp, "expected COVERED, UNCOVERED or UNREACHABLE"))?;
        let start = pair(start, &sp)?;
        let end = pair(end, &ep)?;
        if (start[0], start[1]) > (end[0], end[1]) {
            return Err(schema(&ep, "end precedes start"));
        }
        records.push(TargetRecord {
            id: id.to_string(),
            kind,
            start,
            end,
            status,
        });
    }
    Ok(CoverageReport {
        design: design.to_string(),
        iteration,
        targets: records,
        coverage_pct,
    })
}
