//! Coverage hole analysis: classification, slicing, context extraction and
//! consolidation of uncovered targets.

mod context;
mod signature;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::{CoverageReport, CoverageTarget, Status, TargetKind, Timing};
use crate::rtl::ast::{DesignUnit, SourceSpan};
use crate::rtl::{parse_expr_text, RtlError};

pub use context::derive_context;
pub use signature::{logic_signature, LogicSignature, SignalRelation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyzerError {
    #[error("unknown target `{id}`")]
    UnknownTarget { id: String },
    #[error("span {span} lies outside the source")]
    SpanOutOfRange { span: SourceSpan },
    #[error(transparent)]
    Rtl(#[from] RtlError),
    #[error("malformed context: {0}")]
    Context(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InputType {
    BranchStructure,
    IsolatedStructure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatementType {
    CaseStatement,
    IfStatement,
    Assignment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub start: [u32; 2],
    pub end: [u32; 2],
}

impl Location {
    pub fn span(&self) -> SourceSpan {
        SourceSpan::new((self.start[0], self.start[1]), (self.end[0], self.end[1]))
    }

    pub fn of(span: SourceSpan) -> Self {
        Location {
            start: [span.start_line, span.start_col],
            end: [span.end_line, span.end_col],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Signals {
    #[serde(rename = "in")]
    pub inputs: Vec<String>,
    pub out: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    High,
    Low,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResetInfo {
    pub signal: String,
    pub active: Level,
    /// The hole sits in the reset-asserted branch.
    pub asserted_branch: bool,
}

impl ResetInfo {
    /// Condition under which the reset is asserted, e.g. `!rst`.
    pub fn asserted_text(&self) -> String {
        match self.active {
            Level::High => self.signal.clone(),
            Level::Low => format!("!{}", self.signal),
        }
    }
}

/// What a property for the hole should check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    /// `lhs` takes the value of `rhs`.
    Assign {
        lhs: String,
        rhs: String,
        nonblocking: bool,
    },
    /// `signal` keeps its previous value.
    Hold { signal: String },
    /// Only reachability of the precondition can be stated.
    Reach,
}

/// Structural and semantic context of one coverage hole.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoleContext {
    pub module: String,
    pub input_type: InputType,
    pub locations: Vec<Location>,
    #[serde(rename = "type")]
    pub kind: TargetKind,
    pub code: String,
    pub behavior: String,
    pub statement_type: StatementType,
    pub signals: Signals,
    pub timing: Timing,
    #[serde(rename = "x_precondition")]
    pub precondition: String,
    #[serde(rename = "x_reset")]
    pub reset: Option<ResetInfo>,
    #[serde(rename = "x_logic_signature")]
    pub logic_signature: LogicSignature,
    /// Clocking event of the owning block, absent for combinational code.
    #[serde(rename = "x_clock")]
    pub clock: Option<String>,
    #[serde(rename = "x_action")]
    pub action: Action,
    #[serde(rename = "x_file")]
    pub file: String,
    #[serde(rename = "x_targets")]
    pub targets: Vec<String>,
}

/// Keys of the base context record; everything else uses the `x_` prefix.
pub const BASE_KEYS: [&str; 9] = [
    "module",
    "input_type",
    "locations",
    "type",
    "code",
    "behavior",
    "statement_type",
    "signals",
    "timing",
];

impl HoleContext {
    pub fn precondition_expr(&self) -> Result<crate::rtl::ast::Expr, AnalyzerError> {
        Ok(parse_expr_text(&self.precondition, "precondition")?)
    }

    pub fn is_clocked(&self) -> bool {
        self.clock.is_some()
    }
}

/// Uncovered targets split by structure.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct HolePartition {
    pub branch_or_statement: Vec<String>,
    pub isolated: Vec<String>,
}

/// A hole is isolated when it is a statement with no enclosing if/case other
/// than the reset conditional.
pub fn is_isolated(t: &CoverageTarget) -> bool {
    t.kind == TargetKind::Statement && t.is_isolated()
}

pub fn classify_holes(
    report: &CoverageReport,
    targets: &[CoverageTarget],
) -> Result<HolePartition, AnalyzerError> {
    let mut out = HolePartition::default();
    for rec in report.with_status(Status::Uncovered) {
        let t = targets
            .iter()
            .find(|t| t.id == rec.id)
            .ok_or_else(|| AnalyzerError::UnknownTarget { id: rec.id.clone() })?;
        if is_isolated(t) {
            out.isolated.push(t.id.clone());
        } else {
            out.branch_or_statement.push(t.id.clone());
        }
    }
    Ok(out)
}

/// Exact source text addressed by `span` (end exclusive).
pub fn extract_slice(span: SourceSpan, source: &str) -> Result<String, AnalyzerError> {
    let err = || AnalyzerError::SpanOutOfRange { span };
    if !span.is_well_formed() {
        return Err(err());
    }
    let offset = |(line, col): (u32, u32)| -> Option<usize> {
        let mut start = 0usize;
        for (i, l) in source.split_inclusive('\n').enumerate() {
            if i + 1 == line as usize {
                let body = l.strip_suffix('\n').unwrap_or(l);
                let c = col as usize - 1;
                return (c <= body.len()).then_some(start + c);
            }
            start += l.len();
        }
        // One past the last line is addressable only at column 1.
        (line as usize == source.split_inclusive('\n').count() + 1 && col == 1).then_some(start)
    };
    let a = offset(span.start()).ok_or_else(err)?;
    let b = offset(span.end()).ok_or_else(err)?;
    source.get(a..b).map(str::to_string).ok_or_else(err)
}

/// Context for every UNCOVERED target of `report`.
pub fn analyze_report(
    report: &CoverageReport,
    targets: &[CoverageTarget],
    unit: &DesignUnit,
    source: &str,
    file: &str,
) -> Result<Vec<HoleContext>, AnalyzerError> {
    let part = classify_holes(report, targets)?;
    let mut out = Vec::new();
    for t in targets {
        if part.isolated.contains(&t.id) || part.branch_or_statement.contains(&t.id) {
            out.push(derive_context(t, unit, source, file)?);
        }
    }
    Ok(out)
}

/// Merge contexts with equal logic signatures. Output is ordered by first
/// location.
pub fn consolidate(contexts: Vec<HoleContext>) -> Vec<HoleContext> {
    let mut sorted = contexts;
    // Branch records lead so a merged context keeps their structural fields.
    sorted.sort_by(|a, b| {
        (a.locations.first(), kind_rank(a.kind)).cmp(&(b.locations.first(), kind_rank(b.kind)))
    });
    let mut groups: Vec<Vec<HoleContext>> = Vec::new();
    for c in sorted {
        match groups
            .iter_mut()
            .find(|g| g[0].logic_signature == c.logic_signature && g[0].file == c.file)
        {
            Some(g) => g.push(c),
            None => groups.push(vec![c]),
        }
    }
    groups.into_iter().map(merge_group).collect()
}

fn kind_rank(k: TargetKind) -> u8 {
    match k {
        TargetKind::Branch => 0,
        TargetKind::Statement => 1,
    }
}

fn merge_group(group: Vec<HoleContext>) -> HoleContext {
    let mut iter = group.into_iter();
    let mut merged = iter.next().expect("non-empty group");
    let mut pres = vec![merged.precondition.clone()];
    for c in iter {
        merged.locations.extend(c.locations);
        if c.kind == TargetKind::Branch {
            merged.kind = TargetKind::Branch;
        }
        if c.input_type == InputType::BranchStructure {
            merged.input_type = InputType::BranchStructure;
        }
        for s in c.signals.inputs {
            if !merged.signals.inputs.contains(&s) {
                merged.signals.inputs.push(s);
            }
        }
        for s in c.signals.out {
            if !merged.signals.out.contains(&s) {
                merged.signals.out.push(s);
            }
        }
        for t in c.targets {
            if !merged.targets.contains(&t) {
                merged.targets.push(t);
            }
        }
        if !pres.contains(&c.precondition) {
            pres.push(c.precondition);
        }
    }
    merged.locations.sort();
    merged.locations.dedup();
    if pres.len() > 1 {
        merged.precondition = merge_preconditions(&pres);
    }
    merged
}

fn merge_preconditions(pres: &[String]) -> String {
    let exprs: Vec<_> = pres
        .iter()
        .filter_map(|p| parse_expr_text(p, "precondition").ok())
        .collect();
    let span = SourceSpan::default();
    crate::rtl::ast::Expr::disjunction(exprs, span).to_string()
}

/// JSON document for a design: an array of contexts.
pub fn contexts_to_json(contexts: &[HoleContext]) -> String {
    serde_json::to_string_pretty(contexts).expect("contexts serialize")
}

pub fn contexts_from_json(text: &str) -> Result<Vec<HoleContext>, AnalyzerError> {
    serde_json::from_str(text).map_err(|e| AnalyzerError::Context(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices() {
        let src = "ab\ncdef\n";
        let s = |a, b, c, d| extract_slice(SourceSpan::new((a, b), (c, d)), src);
        assert_eq!(s(2, 2, 2, 4).unwrap(), "de");
        assert_eq!(s(1, 2, 2, 2).unwrap(), "b\nc");
        assert_eq!(s(2, 3, 2, 3).unwrap(), "");
        assert_eq!(s(2, 1, 2, 5).unwrap(), "cdef");
        assert!(s(2, 1, 2, 6).is_err());
        assert!(s(4, 1, 4, 1).is_err());
        assert_eq!(s(3, 1, 3, 1).unwrap(), "");
    }
}
