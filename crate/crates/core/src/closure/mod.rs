//! The closure loop: prove, measure, analyze, generate, review, merge.

pub mod bench;
pub mod hil;
mod kpi;

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzer::{analyze_report, consolidate, AnalyzerError, HoleContext};
use crate::coverage::{enumerate_targets, CoverageError, CoverageReport, Status};
use crate::formal::{BuiltinBackend, CheckConfig, ElabConfig, FormalBackend, FormalError, ProofJob, ProofRun, ReplayBackend};
use crate::rtl::ast::DesignUnit;
use crate::rtl::{resolve_signals, ParseOptions, RtlError, SignalTable, SourceFile};
use crate::sva::parse::Parameter;
use crate::sva::{
    generate_property, llm_generate, merge_into_file, name_and_dedup, parse_sva, ChatBackend, GenOptions,
    GenerationBackend, HttpChat, PropKind, SvaError, SvaProperty, SvaResources,
};

pub use bench::{benchmark, BenchRow, BenchTable};
pub use hil::{apply_edit, AutoApprove, Decision, DecisionsFile, HilMode, NamedDecision, PendingEntry, QueueReviewer, Reviewer, TerminalReviewer};
pub use kpi::{compute_kpis, KpiReport};

#[derive(Debug, Error)]
pub enum ClosureError {
    #[error("configuration error: {reason}")]
    Config { reason: String },
    #[error("edit of `{name}` rejected: {reason}")]
    InvalidEdit { name: String, reason: String },
    #[error("no decisions in {path} after {secs} s")]
    ReviewTimeout { path: String, secs: u64 },
    #[error("cannot access {path}: {reason}")]
    Io { path: String, reason: String },
    #[error(transparent)]
    Rtl(#[from] RtlError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Analyzer(#[from] AnalyzerError),
    #[error(transparent)]
    Sva(#[from] SvaError),
    #[error(transparent)]
    Formal(#[from] FormalError),
}

impl ClosureError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            ClosureError::Config { .. } => "config",
            ClosureError::InvalidEdit { .. } => "invalid_edit",
            ClosureError::ReviewTimeout { .. } => "review_timeout",
            ClosureError::Io { .. } => "io",
            ClosureError::Rtl(_) => "rtl",
            ClosureError::Coverage(_) => "coverage",
            ClosureError::Analyzer(_) => "analyzer",
            ClosureError::Sva(_) => "sva",
            ClosureError::Formal(_) => "formal",
        }
    }
}

/// Which formal backend proves and measures.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    #[default]
    Builtin,
    Replay(PathBuf),
}

impl std::str::FromStr for BackendChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "builtin" => Ok(BackendChoice::Builtin),
            Some(("replay", p)) if !p.is_empty() => Ok(BackendChoice::Replay(PathBuf::from(p))),
            _ => Err(format!("unknown backend `{s}` (builtin or replay:<path>)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClosureConfig {
    /// Percent, in (0, 100].
    pub coverage_threshold: f64,
    pub max_iterations: u32,
    pub hil_mode: HilMode,
    pub backend: BackendChoice,
    pub generation: GenerationBackend,
    /// Off runs a single prove and measure pass.
    pub generation_enabled: bool,
    pub seed: u64,
    /// Proof worker threads; 0 uses all cores.
    pub jobs: usize,
    pub exclude_unreachable: bool,
    /// Stop early when an iteration merges nothing and coverage did not move.
    pub stall_detection: bool,
    pub emit_covers: bool,
    pub delay_cycles: Option<u32>,
    /// Where queue-mode review files are exchanged.
    pub review_dir: PathBuf,
    pub review_timeout_secs: u64,
    /// Module to close; defaults to the first module of the first file.
    pub top: Option<String>,
    pub elab: ElabConfig,
    pub check: CheckConfig,
}

impl Default for ClosureConfig {
    fn default() -> Self {
        ClosureConfig {
            coverage_threshold: 100.0,
            max_iterations: 5,
            hil_mode: HilMode::AutoApprove,
            backend: BackendChoice::Builtin,
            generation: GenerationBackend::Template,
            generation_enabled: true,
            seed: 0,
            jobs: 0,
            exclude_unreachable: false,
            stall_detection: true,
            emit_covers: false,
            delay_cycles: None,
            review_dir: PathBuf::from("review"),
            review_timeout_secs: 3600,
            top: None,
            elab: ElabConfig::default(),
            check: CheckConfig::default(),
        }
    }
}

impl ClosureConfig {
    pub fn from_toml(text: &str) -> Result<Self, ClosureError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ClosureError::Config { reason: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ClosureError> {
        let text = std::fs::read_to_string(path).map_err(|e| ClosureError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ClosureError> {
        let bad = |reason: String| Err(ClosureError::Config { reason });
        if !(self.coverage_threshold > 0.0 && self.coverage_threshold <= 100.0) {
            return bad(format!("threshold {} outside (0, 100]", self.coverage_threshold));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1".into());
        }
        if let Some(n) = self.delay_cycles {
            if !(1..=16).contains(&n) {
                return bad(format!("delay_cycles {n} outside 1..16"));
            }
        }
        Ok(())
    }

    fn gen_options(&self, iteration: u32) -> GenOptions {
        GenOptions {
            emit_covers: self.emit_covers,
            delay_cycles: self.delay_cycles,
            iteration,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    SignedOff,
    ThresholdMet,
    Escalated,
    Stalled,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::SignedOff | Outcome::ThresholdMet => 0,
            Outcome::Escalated => 2,
            Outcome::Stalled => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofEntry {
    pub name: String,
    pub kind: String,
    pub status: String,
    pub non_vacuous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratedEntry {
    pub name: String,
    pub behavior: String,
    pub targets: Vec<String>,
    /// `template`, `llm` or `fallback`.
    pub origin: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HilRecord {
    pub name: String,
    /// APPROVE, REJECT, EDIT, INVALID_EDIT or PENDING.
    pub decision: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    pub coverage_pct: f64,
    pub covered: usize,
    pub uncovered: usize,
    pub unreachable: usize,
    pub proofs: Vec<ProofEntry>,
    pub holes: usize,
    pub generated: Vec<GeneratedEntry>,
    pub hil: Vec<HilRecord>,
    pub new_properties: Vec<String>,
    #[serde(default)]
    pub llm_calls: u32,
    #[serde(default)]
    pub llm_rejections: u32,
    /// Holes that produced no property and why.
    #[serde(default)]
    pub notes: Vec<String>,
}

impl IterationRecord {
    fn measured(iteration: u32, run: &ProofRun) -> Self {
        let count = |s: Status| run.report.with_status(s).count();
        IterationRecord {
            iteration,
            coverage_pct: run.report.coverage_pct,
            covered: count(Status::Covered),
            uncovered: count(Status::Uncovered),
            unreachable: count(Status::Unreachable),
            proofs: run
                .results
                .iter()
                .map(|r| ProofEntry {
                    name: r.name.clone(),
                    kind: r.kind.keyword().to_string(),
                    status: r.status.label().to_string(),
                    non_vacuous: r.non_vacuous,
                })
                .collect(),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosureState {
    pub iteration: u32,
    pub history: Vec<IterationRecord>,
    pub outcome: Outcome,
    /// Properties left undecided or with a rejected edit.
    pub pending: Vec<PendingEntry>,
    /// Holes still open when the loop gave up.
    pub escalation: Vec<HoleContext>,
    /// Ids of targets not COVERED at the end, unreachable ones included.
    pub open_targets: Vec<String>,
}

/// Design under closure: parsed files plus the chosen top module.
#[derive(Clone, Debug)]
pub struct Design {
    pub sources: Vec<SourceFile>,
    file: usize,
    unit: usize,
}

impl Design {
    pub fn new(sources: Vec<SourceFile>, top: Option<&str>) -> Result<Self, ClosureError> {
        let found = sources.iter().enumerate().find_map(|(fi, f)| {
            f.units
                .iter()
                .position(|u| top.is_none_or(|t| u.name == t))
                .map(|ui| (fi, ui))
        });
        let (file, unit) = found.ok_or_else(|| ClosureError::Config {
            reason: match top {
                Some(t) => format!("module `{t}` not found"),
                None => "no module in the design files".into(),
            },
        })?;
        Ok(Design { sources, file, unit })
    }

    pub fn load(paths: &[PathBuf], top: Option<&str>) -> Result<Self, ClosureError> {
        let opts = ParseOptions::default();
        let sources = paths
            .iter()
            .map(|p| SourceFile::load(p, &opts))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(sources, top)
    }

    pub fn parse(file_name: &str, text: &str) -> Result<Self, ClosureError> {
        Self::new(vec![SourceFile::parse(file_name, text.to_string(), &ParseOptions::default())?], None)
    }

    pub fn unit(&self) -> &DesignUnit {
        &self.sources[self.file].units[self.unit]
    }

    pub fn source(&self) -> &str {
        &self.sources[self.file].text
    }

    /// File name used in target ids.
    pub fn file_name(&self) -> String {
        self.sources[self.file].file_name()
    }
}

/// Make the design's signals and parameters visible to generated properties,
/// as a checker bound into the module would see them.
pub fn bind_design(res: &mut SvaResources, table: &SignalTable) {
    for s in &table.signals {
        res.add_signal(&s.name, Some(s.width));
    }
    for (name, value, width) in &table.params {
        if res.parameter(name).is_none() {
            res.parameters.push(Parameter {
                name: name.clone(),
                value: *value,
                width: *width,
            });
        }
    }
}

/// Result of a review round.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub approved: Vec<SvaProperty>,
    pub records: Vec<HilRecord>,
    pub pending: Vec<SvaProperty>,
}

/// Ask `reviewer` about `pending` and apply its decisions. Edits are
/// re-validated; a failing edit leaves the property pending.
pub fn hil_checkpoint(
    design: &str,
    iteration: u32,
    pending: Vec<SvaProperty>,
    res: &SvaResources,
    reviewer: &mut dyn Reviewer,
) -> Result<Checkpoint, ClosureError> {
    let mut out = Checkpoint::default();
    if pending.is_empty() {
        return Ok(out);
    }
    let decisions = reviewer.review(design, iteration, &pending, res)?;
    if decisions.len() != pending.len() {
        return Err(ClosureError::Config {
            reason: format!("reviewer returned {} decisions for {} properties", decisions.len(), pending.len()),
        });
    }
    for (p, d) in pending.into_iter().zip(decisions) {
        let record = |decision: &str, body: Option<String>, reason: Option<String>| HilRecord {
            name: p.name.clone(),
            decision: decision.to_string(),
            body,
            reason,
        };
        match d {
            Some(Decision::Approve) => {
                out.records.push(record("APPROVE", None, None));
                out.approved.push(p);
            }
            Some(Decision::Reject) => out.records.push(record("REJECT", None, None)),
            Some(Decision::Edit { body }) => match apply_edit(&p, &body, res) {
                Ok(edited) => {
                    out.records.push(record("EDIT", Some(body), None));
                    out.approved.push(edited);
                }
                Err(e) => {
                    out.records.push(record("INVALID_EDIT", Some(body), Some(e.to_string())));
                    out.pending.push(p);
                }
            },
            None => {
                out.records.push(record("PENDING", None, None));
                out.pending.push(p);
            }
        }
    }
    Ok(out)
}

/// Everything a closure run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosureRun {
    pub state: ClosureState,
    pub sva_text: String,
    pub report: CoverageReport,
    pub kpis: KpiReport,
}

/// Run manifest written by `covloop close`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub design: String,
    pub file: String,
    pub backend: String,
    pub config: ClosureConfig,
    pub outcome: Outcome,
    pub iterations: u32,
    pub history: Vec<IterationRecord>,
    pub kpis: KpiReport,
    pub pending: Vec<PendingEntry>,
    pub escalation: Vec<HoleContext>,
    pub open_targets: Vec<String>,
}

impl Manifest {
    pub fn new(design: &Design, backend: &str, cfg: &ClosureConfig, run: &ClosureRun) -> Self {
        Manifest {
            design: design.unit().name.clone(),
            file: design.file_name(),
            backend: backend.to_string(),
            config: cfg.clone(),
            outcome: run.state.outcome,
            iterations: run.state.iteration,
            history: run.state.history.clone(),
            kpis: run.kpis.clone(),
            pending: run.state.pending.clone(),
            escalation: run.state.escalation.clone(),
            open_targets: run.state.open_targets.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Collaborators of a run; tests substitute stubs.
pub struct ClosureEnv<'a> {
    pub backend: &'a mut dyn FormalBackend,
    pub reviewer: &'a mut dyn Reviewer,
    pub chat: Option<&'a mut dyn ChatBackend>,
}

/// Formal backend named by the configuration.
pub fn make_backend(cfg: &ClosureConfig) -> Result<Box<dyn FormalBackend>, ClosureError> {
    Ok(match &cfg.backend {
        BackendChoice::Builtin => Box::new(BuiltinBackend {
            elab: cfg.elab.clone(),
            check: cfg.check.clone(),
            jobs: cfg.jobs,
        }),
        BackendChoice::Replay(p) => Box::new(ReplayBackend::load(p)?),
    })
}

/// Reviewer for the configured mode; interactive mode talks on stdin/stderr.
pub fn make_reviewer(cfg: &ClosureConfig) -> Box<dyn Reviewer> {
    match cfg.hil_mode {
        HilMode::AutoApprove => Box::new(AutoApprove),
        HilMode::Interactive => Box::new(TerminalReviewer::new(std::io::stdin().lock(), std::io::stderr())),
        HilMode::QueueFile => Box::new(QueueReviewer::new(
            cfg.review_dir.clone(),
            Duration::from_secs(cfg.review_timeout_secs),
        )),
    }
}

/// Close `design` starting from `sva_text` with the configured backend and
/// reviewer.
pub fn run_closure(design: &Design, sva_text: &str, cfg: &ClosureConfig) -> Result<ClosureRun, ClosureError> {
    let mut backend = make_backend(cfg)?;
    let mut reviewer = make_reviewer(cfg);
    let mut env = ClosureEnv {
        backend: backend.as_mut(),
        reviewer: reviewer.as_mut(),
        chat: None,
    };
    run_closure_with(design, sva_text, cfg, &mut env)
}

struct Generated {
    /// Property, origin and the targets of its hole.
    props: Vec<(SvaProperty, &'static str, Vec<String>)>,
    calls: u32,
    rejections: u32,
    notes: Vec<String>,
}

fn generate_for(
    contexts: &[HoleContext],
    res: &SvaResources,
    cfg: &ClosureConfig,
    opts: &GenOptions,
    chat: &mut Option<&mut dyn ChatBackend>,
) -> Generated {
    let mut g = Generated {
        props: Vec::new(),
        calls: 0,
        rejections: 0,
        notes: Vec::new(),
    };
    for ctx in contexts {
        let template = |g: &mut Generated, origin: &'static str| match generate_property(ctx, res, opts) {
            Ok(v) => g.props.extend(v.into_iter().map(|p| (p, origin, ctx.targets.clone()))),
            Err(e) => g.notes.push(format!("{}: {e}", ctx.targets.join(", "))),
        };
        match (&cfg.generation, chat.as_deref_mut()) {
            (GenerationBackend::Llm(lc), Some(chat)) => match llm_generate(ctx, res, chat, lc, opts) {
                Ok(o) => {
                    g.calls += o.calls;
                    g.rejections += o.rejected.len() as u32;
                    let origin = if o.fell_back { "fallback" } else { "llm" };
                    g.props.extend(o.properties.into_iter().map(|p| (p, origin, ctx.targets.clone())));
                }
                Err(SvaError::BackendUnavailable { reason }) if lc.template_fallback => {
                    g.notes.push(format!("{}: backend unavailable ({reason}), template used", ctx.targets.join(", ")));
                    template(&mut g, "fallback");
                }
                Err(e) => {
                    if let SvaError::ValidationExhausted { rejected } = &e {
                        g.calls += rejected.len() as u32;
                        g.rejections += rejected.len() as u32;
                    }
                    g.notes.push(format!("{}: {e}", ctx.targets.join(", ")));
                }
            },
            _ => template(&mut g, "template"),
        }
    }
    g
}

pub fn run_closure_with(
    design: &Design,
    sva_text: &str,
    cfg: &ClosureConfig,
    env: &mut ClosureEnv,
) -> Result<ClosureRun, ClosureError> {
    cfg.validate()?;
    let unit = design.unit();
    let file = design.file_name();
    let table = resolve_signals(unit)?;
    let targets = enumerate_targets(unit, &file);
    let mut http;
    let mut chat: Option<&mut dyn ChatBackend> = match (&cfg.generation, env.chat.as_deref_mut()) {
        (_, Some(c)) => Some(c),
        (GenerationBackend::Llm(lc), None) => {
            http = HttpChat::new(lc.clone());
            Some(&mut http)
        }
        (GenerationBackend::Template, None) => None,
    };

    let mut sva = sva_text.to_string();
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut pending: Vec<PendingEntry> = Vec::new();
    let mut iteration = 0;
    let (outcome, escalation, report) = loop {
        iteration += 1;
        let parsed = parse_sva(&sva)?;
        let mut res = parsed.resources.clone();
        bind_design(&mut res, &table);
        let job = ProofJob {
            unit,
            file: &file,
            properties: &parsed.properties,
            macros: &res.macros,
            iteration,
            exclude_unreachable: cfg.exclude_unreachable,
        };
        let run = env.backend.run(&job)?;
        let mut rec = IterationRecord::measured(iteration, &run);
        let coverage = run.report.coverage_pct;
        if coverage >= cfg.coverage_threshold {
            let outcome = if iteration == 1 && rec.uncovered == 0 {
                Outcome::SignedOff
            } else {
                Outcome::ThresholdMet
            };
            history.push(rec);
            break (outcome, Vec::new(), run.report);
        }
        let contexts = consolidate(analyze_report(&run.report, &targets, unit, design.source(), &file)?);
        rec.holes = contexts.len();
        if !cfg.generation_enabled || iteration >= cfg.max_iterations {
            history.push(rec);
            break (Outcome::Escalated, contexts, run.report);
        }

        let g = generate_for(&contexts, &res, cfg, &cfg.gen_options(iteration), &mut chat);
        rec.llm_calls = g.calls;
        rec.llm_rejections = g.rejections;
        rec.notes = g.notes;
        let mut info: Vec<((String, PropKind), &str, Vec<String>)> = Vec::new();
        let mut candidates = Vec::new();
        for (p, origin, t) in g.props {
            info.push(((p.body(), p.kind), origin, t));
            candidates.push(p);
        }
        let named = name_and_dedup(candidates, &res, cfg.seed.wrapping_add(iteration as u64));
        rec.generated = named
            .iter()
            .map(|p| {
                let (_, origin, targets) = info
                    .iter()
                    .find(|(k, _, _)| k.0 == p.body() && k.1 == p.kind)
                    .expect("named property comes from the candidates");
                GeneratedEntry {
                    name: p.name.clone(),
                    behavior: p.behavior.clone(),
                    targets: targets.clone(),
                    origin: origin.to_string(),
                    text: p.render(),
                }
            })
            .collect();

        let cp = hil_checkpoint(&design.unit().name, iteration, named, &res, env.reviewer)?;
        rec.hil = cp.records;
        pending.extend(cp.pending.iter().map(PendingEntry::of));
        let merged = merge_into_file(&sva, &cp.approved)?;
        let before: Vec<String> = parsed.properties.iter().map(|p| p.name.clone()).collect();
        rec.new_properties = parse_sva(&merged)?
            .properties
            .into_iter()
            .map(|p| p.name)
            .filter(|n| !before.contains(n))
            .collect();
        let stalled = cfg.stall_detection
            && rec.new_properties.is_empty()
            && history.last().is_some_and(|prev| prev.coverage_pct == coverage);
        history.push(rec);
        sva = merged;
        if stalled {
            break (Outcome::Stalled, contexts, run.report);
        }
    };
    let state = ClosureState {
        iteration,
        history,
        outcome,
        pending,
        escalation,
        open_targets: report
            .targets
            .iter()
            .filter(|t| t.status != Status::Covered)
            .map(|t| t.id.clone())
            .collect(),
    };
    let kpis = compute_kpis(&state);
    Ok(ClosureRun {
        state,
        sva_text: sva,
        report,
        kpis,
    })
}
