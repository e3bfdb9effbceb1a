//! Proof backends: a built-in explicit-state checker and a replay adapter
//! for recorded results of an external tool.

pub mod check;
pub mod elab;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::coverage::report::report_from_value;
use crate::coverage::targets::Anchor;
use crate::coverage::{enumerate_targets, CoverageError, CoverageReport, Status, TargetKind};
use crate::rtl::ast::DesignUnit;
use crate::rtl::RtlError;
use crate::sva::parse::Macro;
use crate::sva::{PropKind, SvaError, SvaProperty};

pub use check::{check_property, explore, CheckConfig, CheckResult, Constraint, ProofStatus, StateGraph, TraceStep};
pub use elab::{elaborate, ElabConfig, Role, TransitionSystem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormalError {
    #[error("design needs {bits} state bits, budget is {budget}")]
    StateBudgetExceeded { bits: u32, budget: u32 },
    #[error("design has {bits} free input bits, budget is {budget}")]
    InputBudgetExceeded { bits: u32, budget: u32 },
    #[error("combinational loop through {}", .signals.join(", "))]
    CombinationalLoop { signals: Vec<String> },
    #[error("signal `{signal}` has more than one driver")]
    MultipleDrivers { signal: String },
    #[error("unknown signal `{name}`")]
    UnknownSignal { name: String },
    #[error("more than one clock: {}", .clocks.join(", "))]
    MultiClock { clocks: Vec<String> },
    #[error("unsupported: {what}")]
    Unsupported { what: String },
    #[error("replay recording exhausted after {used} runs")]
    RecordingExhausted { used: usize },
    #[error("schema error at `{pointer}`: {reason}")]
    Schema { pointer: String, reason: String },
    #[error("unknown target `{id}`")]
    UnknownTarget { id: String },
    #[error(transparent)]
    Rtl(#[from] RtlError),
    #[error(transparent)]
    Sva(#[from] SvaError),
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
}

impl From<CoverageError> for FormalError {
    fn from(e: CoverageError) -> Self {
        match e {
            CoverageError::Schema { pointer, reason } => FormalError::Schema { pointer, reason },
            CoverageError::UnknownTarget { id } => FormalError::UnknownTarget { id },
            CoverageError::Io { path, reason } => FormalError::Io { path, reason },
        }
    }
}

/// Fixed-size bit set over target indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TargetSet(Vec<u64>);

impl TargetSet {
    pub fn new(n: usize) -> Self {
        TargetSet(vec![0; n.div_ceil(64)])
    }

    pub fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.get(i / 64).is_some_and(|w| w >> (i % 64) & 1 == 1)
    }

    pub fn union_with(&mut self, other: &TargetSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// What a checked property contributes to coverage.
#[derive(Clone, Debug)]
pub struct Evidence {
    pub kind: PropKind,
    pub status: ProofStatus,
    pub non_vacuous: bool,
    pub attempt_targets: TargetSet,
    /// Static fan-in of the consequent, indexed by slot.
    pub cone: Vec<bool>,
}

impl Evidence {
    /// Proven assertions with a real attempt, and covers with a witness.
    pub fn witnessed(&self) -> bool {
        self.status.is_proven()
            && match self.kind {
                PropKind::Assert => self.non_vacuous,
                PropKind::Cover => true,
                PropKind::Assume => false,
            }
    }
}

/// Status of every target of `ts`.
///
/// A target is UNREACHABLE when a complete exploration never executes it. A
/// statement is COVERED when some witnessed property executes it on an
/// attempt cycle and its left-hand side lies in the property's cone of
/// influence. A branch is COVERED when some witnessed property executes it
/// on an attempt cycle and is either a cover or has a cone that meets a
/// signal assigned by the branch's construct.
pub fn attribute(ts: &TransitionSystem, graph: &StateGraph, evidence: &[Evidence]) -> Vec<Status> {
    ts.targets
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if graph.complete && !graph.executed.contains(i) {
                return Status::Unreachable;
            }
            let hit = evidence.iter().filter(|e| e.witnessed() && e.attempt_targets.contains(i)).any(|e| {
                let in_cone = |name: &str| ts.slot(name).is_some_and(|s| e.cone[s]);
                match (&t.kind, &t.anchor) {
                    (TargetKind::Statement, Anchor::Assign { lhs, .. }) => in_cone(&lhs.name),
                    (TargetKind::Branch, Anchor::Arm { construct_assigns, .. }) => {
                        e.kind == PropKind::Cover || construct_assigns.iter().any(|s| in_cone(s))
                    }
                    _ => false,
                }
            });
            if hit {
                Status::Covered
            } else {
                Status::Uncovered
            }
        })
        .collect()
}

/// Inputs of one proof run.
#[derive(Clone, Debug)]
pub struct ProofJob<'a> {
    pub unit: &'a DesignUnit,
    /// Short file name used in target ids.
    pub file: &'a str,
    pub properties: &'a [SvaProperty],
    pub macros: &'a [Macro],
    pub iteration: u32,
    pub exclude_unreachable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub kind: PropKind,
    #[serde(flatten)]
    pub status: ProofStatus,
    #[serde(default)]
    pub non_vacuous: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProofRun {
    pub results: Vec<PropertyResult>,
    pub report: CoverageReport,
}

pub trait FormalBackend {
    fn name(&self) -> String;

    /// Prove the job's properties and measure coverage in one pass.
    fn run(&mut self, job: &ProofJob) -> Result<ProofRun, FormalError>;

    fn prove(&mut self, job: &ProofJob) -> Result<Vec<PropertyResult>, FormalError> {
        Ok(self.run(job)?.results)
    }

    fn measure_coverage(&mut self, job: &ProofJob) -> Result<CoverageReport, FormalError> {
        Ok(self.run(job)?.report)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuiltinBackend {
    pub elab: ElabConfig,
    pub check: CheckConfig,
    /// Worker threads for property checks; 0 uses all cores.
    pub jobs: usize,
}

impl BuiltinBackend {
    pub fn new(jobs: usize) -> Self {
        BuiltinBackend {
            jobs,
            ..Default::default()
        }
    }
}

impl FormalBackend for BuiltinBackend {
    fn name(&self) -> String {
        "builtin".into()
    }

    fn run(&mut self, job: &ProofJob) -> Result<ProofRun, FormalError> {
        let ts = elaborate(job.unit, job.file, &self.elab)?;
        let constraints: Vec<Constraint> = job
            .properties
            .iter()
            .filter(|p| p.kind == PropKind::Assume)
            .map(|p| Constraint::new(&ts, p, job.macros))
            .collect::<Result<_, _>>()?;
        let graph = explore(&ts, &constraints, &self.check);
        let checked: Vec<&SvaProperty> = job.properties.iter().filter(|p| p.kind != PropKind::Assume).collect();
        let work = |p: &&SvaProperty| -> Result<Evidence, FormalError> {
            let compiled = check::compile_property(&ts, p, job.macros)?;
            let r = check_property(&ts, p, job.macros, &constraints, &self.check)?;
            Ok(Evidence {
                kind: p.kind,
                status: r.status,
                non_vacuous: r.non_vacuous,
                attempt_targets: r.attempt_targets,
                cone: ts.cone_of_influence(&compiled.consequent_slots),
            })
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| FormalError::Unsupported { what: e.to_string() })?;
        let evidence: Vec<Evidence> = pool.install(|| checked.par_iter().map(work).collect::<Result<_, _>>())?;
        let statuses = attribute(&ts, &graph, &evidence);
        let report = CoverageReport::from_statuses(&job.unit.name, job.iteration, &ts.targets, &statuses, job.exclude_unreachable);
        let results = checked
            .iter()
            .zip(evidence)
            .map(|(p, e)| PropertyResult {
                name: p.name.clone(),
                kind: p.kind,
                status: e.status,
                non_vacuous: e.non_vacuous,
            })
            .collect();
        Ok(ProofRun { results, report })
    }
}

/// One recorded run of an external tool.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordedRun {
    pub report: CoverageReport,
    /// Property name and status, in recording order.
    pub proofs: Vec<(String, ProofStatus)>,
}

/// Replays recorded runs in order.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayBackend {
    runs: Vec<RecordedRun>,
    next: usize,
}

fn parse_status(s: &str) -> Option<ProofStatus> {
    match s {
        "PROVEN" => Some(ProofStatus::Proven),
        "FALSIFIED" => Some(ProofStatus::Falsified { cex: Vec::new() }),
        "UNDETERMINED" => Some(ProofStatus::Undetermined { depth: 0 }),
        _ => None,
    }
}

impl ReplayBackend {
    pub fn new(runs: Vec<RecordedRun>) -> Self {
        ReplayBackend { runs, next: 0 }
    }

    /// Parse a recording: an array of report objects, each with a `proofs`
    /// table mapping property names to statuses.
    pub fn from_json(text: &str) -> Result<Self, FormalError> {
        let schema = |pointer: String, reason: &str| FormalError::Schema {
            pointer,
            reason: reason.to_string(),
        };
        let v: Value = serde_json::from_str(text).map_err(|e| schema(String::new(), &e.to_string()))?;
        let arr = v.as_array().ok_or_else(|| schema(String::new(), "expected an array of runs"))?;
        let mut runs = Vec::new();
        for (i, entry) in arr.iter().enumerate() {
            let base = format!("/{i}");
            let report = report_from_value(entry, &base)?;
            let mut proofs = Vec::new();
            if let Some(p) = entry.get("proofs") {
                let table = p.as_object().ok_or_else(|| schema(format!("{base}/proofs"), "expected an object"))?;
                for (name, st) in table {
                    let status = st
                        .as_str()
                        .and_then(parse_status)
                        .ok_or_else(|| schema(format!("{base}/proofs/{name}"), "expected PROVEN, FALSIFIED or UNDETERMINED"))?;
                    proofs.push((name.clone(), status));
                }
            }
            runs.push(RecordedRun { report, proofs });
        }
        Ok(ReplayBackend::new(runs))
    }

    pub fn load(path: &Path) -> Result<Self, FormalError> {
        let text = std::fs::read_to_string(path).map_err(|e| FormalError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn remaining(&self) -> usize {
        self.runs.len() - self.next
    }
}

impl FormalBackend for ReplayBackend {
    fn name(&self) -> String {
        "replay".into()
    }

    fn run(&mut self, job: &ProofJob) -> Result<ProofRun, FormalError> {
        let rec = self
            .runs
            .get(self.next)
            .cloned()
            .ok_or(FormalError::RecordingExhausted { used: self.next })?;
        self.next += 1;
        let targets = enumerate_targets(job.unit, job.file);
        for t in &rec.report.targets {
            if !targets.iter().any(|x| x.id == t.id) {
                return Err(FormalError::UnknownTarget { id: t.id.clone() });
            }
        }
        let results = rec
            .proofs
            .into_iter()
            .map(|(name, status)| PropertyResult {
                kind: job
                    .properties
                    .iter()
                    .find(|p| p.name == name)
                    .map(|p| p.kind)
                    .unwrap_or(PropKind::Assert),
                non_vacuous: status.is_proven(),
                name,
                status,
            })
            .collect();
        Ok(ProofRun {
            results,
            report: rec.report,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rtl::parse_source;
    use crate::sva::parse_sva;

    const LISTING_ONE: &str = "module listing1(input clk, input a, input b, input d1, input d2, output reg c); always @(posedge clk)\n  if (a && b)\n    c <= d1;\n  else\n    c <= d2;\nendmodule\n";
    const LISTING_TWO: &str = "property branch_captures_d1;\n  @(posedge clk) disable iff (!rst)\n  (a && b) |=> (c == $past(d1));\nendproperty\nassert property (branch_captures_d1);\n";

    fn run(sva: &str) -> ProofRun {
        let unit = &parse_source(LISTING_ONE, "listing1.v").unwrap()[0];
        let parsed = parse_sva(sva).unwrap();
        let mut props = parsed.properties;
        for p in &mut props {
            p.disable_expr = None;
        }
        let job = ProofJob {
            unit,
            file: "listing1.v",
            properties: &props,
            macros: &parsed.resources.macros,
            iteration: 0,
            exclude_unreachable: false,
        };
        BuiltinBackend::new(1).run(&job).unwrap()
    }

    #[test]
    fn listing_two_proves_and_covers_half() {
        let r = run(LISTING_TWO);
        assert_eq!(r.results[0].status, ProofStatus::Proven);
        assert_eq!(r.report.coverage_pct, 50.0);
        assert_eq!(r.report.status_of("listing1.v:listing1:stmt@3.5-3.12"), Some(Status::Covered));
        assert_eq!(r.report.status_of("listing1.v:listing1:stmt@5.5-5.12"), Some(Status::Uncovered));
    }

    #[test]
    fn wrong_capture_is_falsified_with_replayable_trace() {
        let r = run("assert property (@(posedge clk) !(a && b) |=> (c == $past(d1)));\n");
        match &r.results[0].status {
            ProofStatus::Falsified { cex } => assert_eq!(cex.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn no_properties_means_no_coverage() {
        assert_eq!(run("").report.coverage_pct, 0.0);
    }
}
