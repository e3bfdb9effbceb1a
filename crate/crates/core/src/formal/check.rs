//! Explicit-state reachability and property checking.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::elab::TransitionSystem;
use super::{FormalError, TargetSet};
use crate::logic::{compile, Env, LogicError, Node, Operand, Resolve};
use crate::rtl::ast::SourceSpan;
use crate::sva::parse::{clock_event, parse_property_expr, Macro};
use crate::sva::{PropKind, SvaProperty};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckConfig {
    /// Cycles explored from the initial states.
    pub depth_bound: u32,
    /// Cap on distinct explored states per search.
    pub max_states: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            depth_bound: 64,
            max_states: 1 << 22,
        }
    }
}

/// One cycle of a counterexample: register values and the inputs applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub state: Vec<(String, u64)>,
    pub inputs: Vec<(String, u64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "UPPERCASE")]
pub enum ProofStatus {
    Proven,
    Falsified { cex: Vec<TraceStep> },
    Undetermined { depth: u32 },
}

impl ProofStatus {
    pub fn label(&self) -> &'static str {
        match self {
            ProofStatus::Proven => "PROVEN",
            ProofStatus::Falsified { .. } => "FALSIFIED",
            ProofStatus::Undetermined { .. } => "UNDETERMINED",
        }
    }

    pub fn is_proven(&self) -> bool {
        matches!(self, ProofStatus::Proven)
    }
}

#[derive(Clone, Debug)]
struct PastEntry {
    arg: Node,
    depth: u32,
    offset: usize,
}

/// A property compiled against a transition system.
#[derive(Clone, Debug)]
pub struct CompiledProperty {
    pub name: String,
    pub kind: PropKind,
    pub delay: u32,
    ante: Node,
    cons: Node,
    disable: Option<Node>,
    past: Vec<PastEntry>,
    hist_len: usize,
    /// Slots read by the consequent, `$past` arguments included.
    pub consequent_slots: Vec<usize>,
}

struct PropResolver<'a> {
    ts: &'a TransitionSystem,
    past: Vec<PastEntry>,
    hist_len: usize,
}

impl Resolve for PropResolver<'_> {
    fn ident(&self, name: &str, span: SourceSpan) -> Result<Operand, LogicError> {
        self.ts.resolver().ident(name, span)
    }

    fn past(&mut self, arg: &Node, depth: u32, _span: SourceSpan) -> Result<usize, LogicError> {
        self.past.push(PastEntry {
            arg: arg.clone(),
            depth,
            offset: self.hist_len,
        });
        self.hist_len += depth as usize;
        Ok(self.past.len() - 1)
    }
}

fn compile_in(r: &mut PropResolver, text: &str, macros: &[Macro]) -> Result<Node, FormalError> {
    let e = parse_property_expr(text, macros)?;
    for id in e.identifiers() {
        if r.ts.slot(&id).is_none() && !r.ts.params.iter().any(|(n, _, _)| *n == id) {
            return Err(FormalError::UnknownSignal { name: id });
        }
    }
    compile(&e, r).map_err(|e| FormalError::Unsupported { what: e.to_string() })
}

fn check_clock(ts: &TransitionSystem, clock_expr: &str, macros: &[Macro]) -> Result<(), FormalError> {
    if clock_expr.trim().is_empty() {
        return Ok(());
    }
    let (edge, sig) = clock_event(clock_expr, macros)?;
    match &ts.clock {
        Some(c) if c.signal != sig || c.edge != edge => Err(FormalError::MultiClock {
            clocks: vec![c.event_text(), format!("@({edge} {sig})")],
        }),
        Some(_) => Ok(()),
        None if ts.slot(&sig).is_none() => Err(FormalError::UnknownSignal { name: sig }),
        None => Ok(()),
    }
}

pub fn compile_property(ts: &TransitionSystem, p: &SvaProperty, macros: &[Macro]) -> Result<CompiledProperty, FormalError> {
    check_clock(ts, &p.clock_expr, macros)?;
    let mut r = PropResolver {
        ts,
        past: Vec::new(),
        hist_len: 0,
    };
    let ante = compile_in(&mut r, &p.antecedent, macros)?;
    let first_cons_past = r.past.len();
    let cons = compile_in(&mut r, &p.consequent, macros)?;
    let disable = match &p.disable_expr {
        Some(d) => Some(compile_in(&mut r, d, macros)?),
        None => None,
    };
    let mut consequent_slots = cons.slots();
    for e in &r.past[first_cons_past..] {
        consequent_slots.extend(e.arg.slots());
    }
    // Past entries from the disable expression are not part of the consequent.
    consequent_slots.sort_unstable();
    consequent_slots.dedup();
    Ok(CompiledProperty {
        name: p.name.clone(),
        kind: p.kind,
        delay: p.op.delay(),
        ante,
        cons,
        disable,
        past: r.past,
        hist_len: r.hist_len,
        consequent_slots,
    })
}

impl CompiledProperty {
    fn past_values(&self, hist: &[u64]) -> Vec<u64> {
        self.past.iter().map(|e| hist[e.offset + e.depth as usize - 1]).collect()
    }

    fn next_hist(&self, hist: &[u64], env: &Env) -> Vec<u64> {
        let mut h = hist.to_vec();
        for e in &self.past {
            for k in (1..e.depth as usize).rev() {
                h[e.offset + k] = h[e.offset + k - 1];
            }
            h[e.offset] = e.arg.value(env);
        }
        h
    }
}

/// An assumption restricting the inputs of every cycle.
#[derive(Clone, Debug)]
pub struct Constraint(CompiledProperty);

impl Constraint {
    pub fn new(ts: &TransitionSystem, p: &SvaProperty, macros: &[Macro]) -> Result<Self, FormalError> {
        let c = compile_property(ts, p, macros)?;
        if c.delay != 0 || c.hist_len != 0 {
            return Err(FormalError::Unsupported {
                what: format!("assumption `{}` must be a same-cycle implication without $past", p.name),
            });
        }
        Ok(Constraint(c))
    }

    pub fn holds(&self, values: &[u64]) -> bool {
        let env = Env::new(values);
        let c = &self.0;
        c.disable.as_ref().is_some_and(|d| d.truth(&env)) || !c.ante.truth(&env) || c.cons.truth(&env)
    }
}

fn allowed(cs: &[Constraint], values: &[u64]) -> bool {
    cs.iter().all(|c| c.holds(values))
}

/// Reachable register states and the targets executed along the way.
#[derive(Clone, Debug, PartialEq)]
pub struct StateGraph {
    pub states: Vec<u64>,
    pub executed: TargetSet,
    /// All successors of all reached states were explored.
    pub complete: bool,
    /// Longest shortest path from an initial state.
    pub depth: u32,
}

pub fn explore(ts: &TransitionSystem, constraints: &[Constraint], cfg: &CheckConfig) -> StateGraph {
    let mut index: HashMap<u64, u32> = HashMap::new();
    let mut states: Vec<u64> = Vec::new();
    let mut depth_of: Vec<u32> = Vec::new();
    for &s in &ts.init {
        if index.insert(s, states.len() as u32).is_none() {
            states.push(s);
            depth_of.push(0);
        }
    }
    let mut executed = TargetSet::new(ts.targets.len());
    let mut complete = true;
    let mut head = 0;
    while head < states.len() {
        let s = states[head];
        head += 1;
        for i in 0..ts.input_count() {
            let mut ex = TargetSet::new(ts.targets.len());
            let (values, next) = ts.step(s, i, &mut ex);
            if !allowed(constraints, &values) {
                continue;
            }
            executed.union_with(&ex);
            if let Entry::Vacant(slot) = index.entry(next) {
                if states.len() >= cfg.max_states {
                    complete = false;
                    continue;
                }
                slot.insert(states.len() as u32);
                states.push(next);
                depth_of.push(depth_of[head - 1] + 1);
            }
        }
    }
    let depth = depth_of.iter().copied().max().unwrap_or(0);
    StateGraph {
        states,
        executed,
        complete,
        depth,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub status: ProofStatus,
    /// Some attempt started with a true antecedent and no disable.
    pub non_vacuous: bool,
    /// Targets executed on cycles where an attempt started.
    pub attempt_targets: TargetSet,
    pub states: usize,
}

/// Product search over design state, `$past` history and pending
/// obligations. Violations are found in breadth-first order, so the returned
/// counterexample has minimal length.
pub fn check_property(
    ts: &TransitionSystem,
    prop: &SvaProperty,
    macros: &[Macro],
    constraints: &[Constraint],
    cfg: &CheckConfig,
) -> Result<CheckResult, FormalError> {
    let c = compile_property(ts, prop, macros)?;
    if c.delay > 32 {
        return Err(FormalError::Unsupported {
            what: format!("delay of {} cycles", c.delay),
        });
    }
    let key_len = 2 + c.hist_len;
    let mut index: HashMap<Vec<u64>, u32> = HashMap::new();
    let mut keys: Vec<u64> = Vec::new();
    let mut parent: Vec<(u32, u64)> = Vec::new();
    let mut depth_of: Vec<u32> = Vec::new();
    for &s in &ts.init {
        let mut k = vec![s, 0];
        k.resize(key_len, 0);
        if !index.contains_key(&k) {
            index.insert(k.clone(), depth_of.len() as u32);
            keys.extend(k);
            parent.push((u32::MAX, 0));
            depth_of.push(0);
        }
    }
    let mut attempt_targets = TargetSet::new(ts.targets.len());
    let mut non_vacuous = false;
    let mut witnessed = false;
    let mut truncated = false;
    let mut head = 0usize;
    let n_inputs = ts.input_count();
    while head < depth_of.len() {
        let id = head;
        head += 1;
        if depth_of[id] >= cfg.depth_bound {
            truncated = true;
            continue;
        }
        let key: Vec<u64> = keys[id * key_len..(id + 1) * key_len].to_vec();
        let (state, pending, hist) = (key[0], key[1], &key[2..]);
        let past = c.past_values(hist);
        for input in 0..n_inputs {
            let mut ex = TargetSet::new(ts.targets.len());
            let (values, next) = ts.step(state, input, &mut ex);
            if !allowed(constraints, &values) {
                continue;
            }
            let env = Env { cur: &values, past: &past };
            let mut mask = pending;
            let mut violated = false;
            if c.disable.as_ref().is_some_and(|d| d.truth(&env)) {
                mask = 0;
            } else {
                let due_now = mask & 1 == 1;
                let starts = c.ante.truth(&env);
                if starts {
                    non_vacuous = true;
                    attempt_targets.union_with(&ex);
                }
                let check_now = due_now || (starts && c.delay == 0);
                if check_now {
                    if c.cons.truth(&env) {
                        witnessed = true;
                    } else {
                        violated = true;
                    }
                }
                if starts && c.delay > 0 {
                    mask |= 1 << c.delay;
                }
            }
            if violated && c.kind != PropKind::Cover {
                let cex = trace_to(ts, &keys, key_len, &parent, id, input);
                return Ok(CheckResult {
                    status: ProofStatus::Falsified { cex },
                    non_vacuous,
                    attempt_targets,
                    states: depth_of.len(),
                });
            }
            let mut k = Vec::with_capacity(key_len);
            k.push(next);
            k.push(mask >> 1);
            k.extend(c.next_hist(hist, &env));
            if !index.contains_key(&k) {
                if depth_of.len() >= cfg.max_states {
                    truncated = true;
                    continue;
                }
                index.insert(k.clone(), depth_of.len() as u32);
                keys.extend(k);
                parent.push((id as u32, input));
                depth_of.push(depth_of[id] + 1);
            }
        }
    }
    let reached = depth_of.iter().copied().max().unwrap_or(0);
    let status = match c.kind {
        PropKind::Cover if witnessed => ProofStatus::Proven,
        PropKind::Cover => ProofStatus::Undetermined { depth: reached },
        _ if truncated => ProofStatus::Undetermined { depth: reached },
        _ => ProofStatus::Proven,
    };
    Ok(CheckResult {
        status,
        non_vacuous,
        attempt_targets,
        states: depth_of.len(),
    })
}

fn trace_to(ts: &TransitionSystem, keys: &[u64], key_len: usize, parent: &[(u32, u64)], last: usize, input: u64) -> Vec<TraceStep> {
    let mut steps = vec![(last, input)];
    let mut cur = last;
    while parent[cur].0 != u32::MAX {
        let (p, i) = parent[cur];
        steps.push((p as usize, i));
        cur = p as usize;
    }
    steps.reverse();
    steps
        .into_iter()
        .map(|(id, i)| TraceStep {
            state: ts.state_values(keys[id * key_len]),
            inputs: ts.input_values(i),
        })
        .collect()
}
