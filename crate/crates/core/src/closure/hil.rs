//! Review checkpoints for generated properties.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::ClosureError;
use crate::sva::{parse_candidates, validate_property, SvaProperty, SvaResources};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HilMode {
    Interactive,
    #[serde(alias = "queue")]
    QueueFile,
    #[default]
    #[serde(alias = "auto")]
    AutoApprove,
}

impl std::str::FromStr for HilMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "interactive" => Ok(HilMode::Interactive),
            "queue" | "queue_file" => Ok(HilMode::QueueFile),
            "auto" | "auto_approve" => Ok(HilMode::AutoApprove),
            other => Err(format!("unknown review mode `{other}` (interactive, queue, auto)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "UPPERCASE")]
pub enum Decision {
    Approve,
    Reject,
    /// Replace the property body (`antecedent |-> consequent`).
    Edit { body: String },
}

/// A decision for one named property, as read from a decisions file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedDecision {
    pub name: String,
    #[serde(flatten)]
    pub decision: Decision,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionsFile {
    pub decisions: Vec<NamedDecision>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendingEntry {
    pub name: String,
    pub kind: String,
    pub behavior: String,
    pub body: String,
    pub text: String,
}

/// Document written for reviewers in queue mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PendingReview {
    pub design: String,
    pub iteration: u32,
    pub decisions_file: String,
    pub pending: Vec<PendingEntry>,
}

impl PendingEntry {
    pub fn of(p: &SvaProperty) -> Self {
        PendingEntry {
            name: p.name.clone(),
            kind: p.kind.keyword().to_string(),
            behavior: p.behavior.clone(),
            body: p.body(),
            text: p.render(),
        }
    }
}

/// Source of review decisions. Returns one entry per pending property in
/// order; `None` leaves the property pending.
pub trait Reviewer {
    fn review(
        &mut self,
        design: &str,
        iteration: u32,
        pending: &[SvaProperty],
        res: &SvaResources,
    ) -> Result<Vec<Option<Decision>>, ClosureError>;
}

pub struct AutoApprove;

impl Reviewer for AutoApprove {
    fn review(&mut self, _: &str, _: u32, pending: &[SvaProperty], _: &SvaResources) -> Result<Vec<Option<Decision>>, ClosureError> {
        Ok(vec![Some(Decision::Approve); pending.len()])
    }
}

/// Apply an edit and re-check it. The result keeps the name, kind, clock,
/// reset and trace of the original.
pub fn apply_edit(p: &SvaProperty, body: &str, res: &SvaResources) -> Result<SvaProperty, ClosureError> {
    let invalid = |reason: String| ClosureError::InvalidEdit {
        name: p.name.clone(),
        reason,
    };
    let disable = p
        .disable_expr
        .as_ref()
        .map(|d| format!(" disable iff ({d})"))
        .unwrap_or_default();
    let text = format!(
        "property {n};\n  {}{disable}\n  {};\nendproperty\n{} property ({n});\n",
        p.clock_expr,
        body.trim().trim_end_matches(';'),
        p.kind.keyword(),
        n = p.name,
    );
    let parsed = parse_candidates(&text, res).map_err(|e| invalid(e.to_string()))?;
    let [edited] = parsed.as_slice() else {
        return Err(invalid("the edit must describe exactly one property".into()));
    };
    validate_property(edited, res).map_err(|e| invalid(e.to_string()))?;
    let mut out = edited.clone();
    out.behavior = p.behavior.clone();
    out.trace = p.trace.clone();
    Ok(out)
}

/// Prompts on a terminal: `a` approve, `r` reject, `e` edit (next line is
/// the new body), `s` skip. Invalid edits are reported and asked again.
pub struct TerminalReviewer<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> TerminalReviewer<R, W> {
    pub fn new(input: R, output: W) -> Self {
        TerminalReviewer { input, output }
    }

    fn line(&mut self) -> Result<Option<String>, ClosureError> {
        let mut s = String::new();
        let n = self.input.read_line(&mut s).map_err(io_err("<stdin>"))?;
        Ok((n > 0).then(|| s.trim().to_string()))
    }
}

fn io_err(path: &str) -> impl Fn(std::io::Error) -> ClosureError + '_ {
    move |e| ClosureError::Io {
        path: path.to_string(),
        reason: e.to_string(),
    }
}

impl<R: BufRead, W: Write> Reviewer for TerminalReviewer<R, W> {
    fn review(
        &mut self,
        design: &str,
        iteration: u32,
        pending: &[SvaProperty],
        res: &SvaResources,
    ) -> Result<Vec<Option<Decision>>, ClosureError> {
        let mut out = Vec::new();
        for (i, p) in pending.iter().enumerate() {
            let w = &mut self.output;
            writeln!(w, "[{design} iter {iteration}] {}/{}: {}", i + 1, pending.len(), p.behavior)
                .and_then(|_| write!(w, "{}", p.render()))
                .map_err(io_err("<stderr>"))?;
            let decision = loop {
                write!(self.output, "[a]pprove [r]eject [e]dit [s]kip > ").map_err(io_err("<stderr>"))?;
                self.output.flush().map_err(io_err("<stderr>"))?;
                let Some(answer) = self.line()? else { break None };
                match answer.as_str() {
                    "a" => break Some(Decision::Approve),
                    "r" => break Some(Decision::Reject),
                    "s" => break None,
                    "e" => {
                        write!(self.output, "new body > ").map_err(io_err("<stderr>"))?;
                        self.output.flush().map_err(io_err("<stderr>"))?;
                        let Some(body) = self.line()? else { break None };
                        match apply_edit(p, &body, res) {
                            Ok(_) => break Some(Decision::Edit { body }),
                            Err(e) => writeln!(self.output, "{e}").map_err(io_err("<stderr>"))?,
                        }
                    }
                    _ => {}
                }
            };
            out.push(decision);
        }
        Ok(out)
    }
}

/// Writes `pending_<design>_iter<N>.json` into `dir` and waits for
/// `decisions_<design>_iter<N>.json`.
pub struct QueueReviewer {
    pub dir: PathBuf,
    pub timeout: Duration,
    pub poll: Duration,
}

impl QueueReviewer {
    pub fn new(dir: impl Into<PathBuf>, timeout: Duration) -> Self {
        QueueReviewer {
            dir: dir.into(),
            timeout,
            poll: Duration::from_millis(200),
        }
    }

    pub fn pending_path(&self, design: &str, iteration: u32) -> PathBuf {
        self.dir.join(format!("pending_{design}_iter{iteration}.json"))
    }

    pub fn decisions_path(&self, design: &str, iteration: u32) -> PathBuf {
        self.dir.join(format!("decisions_{design}_iter{iteration}.json"))
    }
}

fn read_decisions(path: &Path) -> Result<Option<DecisionsFile>, ClosureError> {
    let p = path.display().to_string();
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_err(&p)(e)),
    };
    // A writer may still be filling the file.
    match serde_json::from_str(&text) {
        Ok(d) => Ok(Some(d)),
        Err(e) if e.is_eof() => Ok(None),
        Err(e) => Err(ClosureError::Config {
            reason: format!("{p}: {e}"),
        }),
    }
}

impl Reviewer for QueueReviewer {
    fn review(
        &mut self,
        design: &str,
        iteration: u32,
        pending: &[SvaProperty],
        _: &SvaResources,
    ) -> Result<Vec<Option<Decision>>, ClosureError> {
        let decisions_path = self.decisions_path(design, iteration);
        let doc = PendingReview {
            design: design.to_string(),
            iteration,
            decisions_file: decisions_path.display().to_string(),
            pending: pending.iter().map(PendingEntry::of).collect(),
        };
        let pending_path = self.pending_path(design, iteration);
        std::fs::create_dir_all(&self.dir).map_err(io_err(&self.dir.display().to_string()))?;
        let json = serde_json::to_string_pretty(&doc).expect("review serializes");
        std::fs::write(&pending_path, json + "\n").map_err(io_err(&pending_path.display().to_string()))?;
        let start = Instant::now();
        let file = loop {
            if let Some(f) = read_decisions(&decisions_path)? {
                break f;
            }
            if start.elapsed() >= self.timeout {
                return Err(ClosureError::ReviewTimeout {
                    path: decisions_path.display().to_string(),
                    secs: self.timeout.as_secs(),
                });
            }
            std::thread::sleep(self.poll);
        };
        Ok(pending
            .iter()
            .map(|p| {
                file.decisions
                    .iter()
                    .find(|d| d.name == p.name)
                    .map(|d| d.decision.clone())
            })
            .collect())
    }
}
