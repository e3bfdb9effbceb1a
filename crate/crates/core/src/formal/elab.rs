//! Cycle-level executable model of a design unit.

use serde::{Deserialize, Serialize};

use super::{FormalError, TargetSet};
use crate::coverage::targets::{label_match, ArmRef};
use crate::coverage::{CoverageTarget, TargetKind};
use crate::logic::{compile, Env, LogicError, Node, Operand, Resolve};
use crate::rtl::ast::*;
use crate::rtl::{resolve_signals, SignalTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElabConfig {
    /// Maximum register bits.
    pub state_budget: u32,
    /// Maximum free input bits per cycle.
    pub input_budget: u32,
}

impl Default for ElabConfig {
    fn default() -> Self {
        ElabConfig {
            state_budget: 24,
            input_budget: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Input,
    Register,
    Comb,
    /// Clock input; never sampled.
    Clock,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Slot {
    pub name: String,
    pub width: u32,
    pub lsb: u32,
    pub role: Role,
}

#[derive(Clone, Debug)]
enum Sel {
    Whole,
    Bit(Node),
    Part { offset: u32, width: u32 },
}

#[derive(Clone, Debug)]
enum Op {
    Assign {
        target: Option<usize>,
        slot: usize,
        sel: Sel,
        value: Node,
        nonblocking: bool,
    },
    If {
        cond: Node,
        then_ops: Vec<Op>,
        else_ops: Vec<Op>,
        then_target: Option<usize>,
        else_target: Option<usize>,
    },
    Case {
        arms: Vec<(Node, Vec<Op>, Option<usize>)>,
        default_ops: Vec<Op>,
        default_target: Option<usize>,
    },
}

#[derive(Clone, Debug)]
struct Process {
    ops: Vec<Op>,
    writes: Vec<usize>,
    reads: Vec<usize>,
}

/// Registers as state, free inputs, and a deterministic step that records
/// the coverage targets each transition executes.
#[derive(Clone, Debug)]
pub struct TransitionSystem {
    pub module: String,
    pub clock: Option<ClockSpec>,
    pub slots: Vec<Slot>,
    pub params: Vec<(String, u64, u32)>,
    /// Slot indices of registers, in packing order.
    pub state_vars: Vec<usize>,
    /// Slot indices of free inputs, in packing order.
    pub input_vars: Vec<usize>,
    /// Initial register valuations after reset; unreset registers are free.
    pub init: Vec<u64>,
    pub targets: Vec<CoverageTarget>,
    comb: Vec<Process>,
    seq: Vec<Process>,
    /// Static fan-in per slot, including control dependencies.
    deps: Vec<Vec<usize>>,
}

struct SlotResolver<'a> {
    slots: &'a [Slot],
    params: &'a [(String, u64, u32)],
}

impl Resolve for SlotResolver<'_> {
    fn ident(&self, name: &str, span: SourceSpan) -> Result<Operand, LogicError> {
        if let Some(i) = self.slots.iter().position(|s| s.name == name) {
            let s = &self.slots[i];
            return Ok(Operand::Slot {
                index: i,
                width: s.width,
                lsb: s.lsb,
            });
        }
        if let Some((_, v, w)) = self.params.iter().find(|(n, _, _)| n == name) {
            return Ok(Operand::Const { value: *v, width: *w });
        }
        Err(LogicError::UnknownIdentifier {
            name: name.to_string(),
            span,
        })
    }
}

fn logic_err(e: LogicError) -> FormalError {
    FormalError::Unsupported { what: e.to_string() }
}

impl TransitionSystem {
    pub fn slot(&self, name: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.name == name)
    }

    pub fn state_bits(&self) -> u32 {
        self.state_vars.iter().map(|&i| self.slots[i].width).sum()
    }

    pub fn input_bits(&self) -> u32 {
        self.input_vars.iter().map(|&i| self.slots[i].width).sum()
    }

    pub fn input_count(&self) -> u64 {
        1u64 << self.input_bits()
    }

    pub(crate) fn resolver(&self) -> impl Resolve + '_ {
        SlotResolver {
            slots: &self.slots,
            params: &self.params,
        }
    }

    fn unpack(&self, vars: &[usize], packed: u64, out: &mut [u64]) {
        let mut shift = 0;
        for &i in vars {
            let w = self.slots[i].width;
            out[i] = (packed >> shift) & mask(w);
            shift += w;
        }
    }

    fn pack(&self, vars: &[usize], values: &[u64]) -> u64 {
        let mut shift = 0;
        let mut packed = 0;
        for &i in vars {
            let w = self.slots[i].width;
            packed |= (values[i] & mask(w)) << shift;
            shift += w;
        }
        packed
    }

    /// Named register values of a packed state.
    pub fn state_values(&self, state: u64) -> Vec<(String, u64)> {
        self.named(&self.state_vars, state)
    }

    /// Named input values of a packed input vector.
    pub fn input_values(&self, input: u64) -> Vec<(String, u64)> {
        self.named(&self.input_vars, input)
    }

    fn named(&self, vars: &[usize], packed: u64) -> Vec<(String, u64)> {
        let mut v = vec![0; self.slots.len()];
        self.unpack(vars, packed, &mut v);
        vars.iter().map(|&i| (self.slots[i].name.clone(), v[i])).collect()
    }

    /// Pack named input values; unnamed inputs are zero.
    pub fn pack_inputs(&self, named: &[(String, u64)]) -> u64 {
        let mut v = vec![0; self.slots.len()];
        for (n, x) in named {
            if let Some(i) = self.slot(n) {
                v[i] = *x;
            }
        }
        self.pack(&self.input_vars, &v)
    }

    pub fn pack_state(&self, named: &[(String, u64)]) -> u64 {
        let mut v = vec![0; self.slots.len()];
        for (n, x) in named {
            if let Some(i) = self.slot(n) {
                v[i] = *x;
            }
        }
        self.pack(&self.state_vars, &v)
    }

    /// One clock cycle: the sampled values of every slot and the next state.
    /// Targets executed by the cycle are added to `executed`.
    pub fn step(&self, state: u64, input: u64, executed: &mut TargetSet) -> (Vec<u64>, u64) {
        let mut cur = vec![0u64; self.slots.len()];
        self.unpack(&self.state_vars, state, &mut cur);
        self.unpack(&self.input_vars, input, &mut cur);
        for p in &self.comb {
            // Unassigned paths of a combinational process read as zero.
            for &w in &p.writes {
                cur[w] = 0;
            }
            self.exec(&p.ops, &mut cur, None, executed);
        }
        let mut next = cur.clone();
        for p in &self.seq {
            let mut view = cur.clone();
            self.exec(&p.ops, &mut view, Some(&mut next), executed);
        }
        let next_state = self.pack(&self.state_vars, &next);
        (cur, next_state)
    }

    fn exec(&self, ops: &[Op], view: &mut Vec<u64>, mut next: Option<&mut Vec<u64>>, executed: &mut TargetSet) {
        for op in ops {
            match op {
                Op::Assign {
                    target,
                    slot,
                    sel,
                    value,
                    nonblocking,
                } => {
                    if let Some(t) = target {
                        executed.insert(*t);
                    }
                    let s = &self.slots[*slot];
                    let env = Env::new(view);
                    let (offset, width) = match sel {
                        Sel::Whole => (0, s.width),
                        Sel::Part { offset, width } => (*offset, *width),
                        Sel::Bit(ix) => {
                            let i = ix.value(&env);
                            if i < s.lsb as u64 || i >= (s.lsb + s.width) as u64 {
                                continue;
                            }
                            ((i - s.lsb as u64) as u32, 1)
                        }
                    };
                    let v = value.eval(&env, width.max(value.width())) & mask(width);
                    let write = |dst: &mut Vec<u64>| {
                        let m = mask(width) << offset;
                        dst[*slot] = (dst[*slot] & !m) | (v << offset);
                    };
                    match next.as_deref_mut() {
                        Some(n) if *nonblocking => write(n),
                        Some(n) => {
                            write(n);
                            write(view);
                        }
                        None => write(view),
                    }
                }
                Op::If {
                    cond,
                    then_ops,
                    else_ops,
                    then_target,
                    else_target,
                } => {
                    let taken = cond.truth(&Env::new(view));
                    let (ops, t) = if taken {
                        (then_ops, then_target)
                    } else {
                        (else_ops, else_target)
                    };
                    if let Some(t) = t {
                        executed.insert(*t);
                    }
                    self.exec(ops, view, next.as_deref_mut(), executed);
                }
                Op::Case {
                    arms,
                    default_ops,
                    default_target,
                } => {
                    let env = Env::new(view);
                    let hit = arms.iter().find(|(m, _, _)| m.truth(&env));
                    let (ops, t) = match hit {
                        Some((_, ops, t)) => (ops, t),
                        None => (default_ops, default_target),
                    };
                    if let Some(t) = t {
                        executed.insert(*t);
                    }
                    self.exec(ops, view, next.as_deref_mut(), executed);
                }
            }
        }
    }

    /// Transitive static fan-in of `roots`, roots included.
    pub fn cone_of_influence(&self, roots: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.slots.len()];
        let mut stack: Vec<usize> = roots.to_vec();
        while let Some(s) = stack.pop() {
            if std::mem::replace(&mut seen[s], true) {
                continue;
            }
            stack.extend(self.deps[s].iter().copied().filter(|d| !seen[*d]));
        }
        seen
    }
}

struct Builder<'a> {
    slots: &'a [Slot],
    params: &'a [(String, u64, u32)],
    targets: &'a [CoverageTarget],
    deps: Vec<Vec<usize>>,
}

impl Builder<'_> {
    fn node(&self, e: &Expr) -> Result<Node, FormalError> {
        let mut r = SlotResolver {
            slots: self.slots,
            params: self.params,
        };
        compile(e, &mut r).map_err(logic_err)
    }

    fn slot_of(&self, name: &str) -> Result<usize, FormalError> {
        self.slots
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| FormalError::UnknownSignal { name: name.to_string() })
    }

    fn stmt_target(&self, span: SourceSpan) -> Option<usize> {
        self.targets
            .iter()
            .position(|t| t.kind == TargetKind::Statement && t.span == span)
    }

    fn arm_target(&self, construct: SourceSpan, arm: ArmRef) -> Option<usize> {
        self.targets.iter().position(|t| {
            matches!(&t.anchor, crate::coverage::targets::Anchor::Arm { construct: c, arm: a, .. } if *c == construct && *a == arm)
        })
    }

    fn slot_ids(&self, e: &Expr) -> Vec<usize> {
        e.identifiers().iter().filter_map(|n| self.slot_of(n).ok()).collect()
    }

    fn add_deps(&mut self, lhs: usize, from: &[usize]) {
        for &f in from {
            if !self.deps[lhs].contains(&f) {
                self.deps[lhs].push(f);
            }
        }
    }

    fn lvalue(&mut self, lv: &LValue) -> Result<(usize, Sel, Vec<usize>), FormalError> {
        let slot = self.slot_of(&lv.name)?;
        let s = &self.slots[slot];
        let known = self.params.to_vec();
        let mut reads = Vec::new();
        let sel = match &lv.select {
            None => Sel::Whole,
            Some(Select::Bit(ix)) => match crate::rtl::eval_constant(ix, &known) {
                Ok((i, _)) if i >= s.lsb as u64 && i < (s.lsb + s.width) as u64 => Sel::Part {
                    offset: (i - s.lsb as u64) as u32,
                    width: 1,
                },
                Ok(_) => return Err(FormalError::Unsupported { what: format!("out-of-range select on `{}`", lv.name) }),
                Err(_) => {
                    reads = self.slot_ids(ix);
                    Sel::Bit(self.node(ix)?)
                }
            },
            Some(Select::Part { msb, lsb }) => {
                let m = crate::rtl::eval_constant(msb, &known).map_err(|e| FormalError::Unsupported { what: e.to_string() })?.0;
                let l = crate::rtl::eval_constant(lsb, &known).map_err(|e| FormalError::Unsupported { what: e.to_string() })?.0;
                if l < s.lsb as u64 || m < l || m >= (s.lsb + s.width) as u64 {
                    return Err(FormalError::Unsupported { what: format!("out-of-range select on `{}`", lv.name) });
                }
                Sel::Part {
                    offset: (l - s.lsb as u64) as u32,
                    width: (m - l + 1) as u32,
                }
            }
        };
        Ok((slot, sel, reads))
    }

    /// Compile `s`; `ctrl` holds the slots of enclosing conditions.
    fn ops(&mut self, s: &Stmt, ctrl: &mut Vec<usize>, reads: &mut Vec<usize>) -> Result<Vec<Op>, FormalError> {
        match &s.kind {
            StmtKind::Block { stmts, .. } => {
                let mut out = Vec::new();
                for st in stmts {
                    out.extend(self.ops(st, ctrl, reads)?);
                }
                Ok(out)
            }
            StmtKind::Assign { lhs, rhs, nonblocking } => {
                let (slot, sel, sel_reads) = self.lvalue(lhs)?;
                let rhs_reads = self.slot_ids(rhs);
                let mut all = rhs_reads.clone();
                all.extend(sel_reads);
                all.extend(ctrl.iter().copied());
                self.add_deps(slot, &all);
                reads.extend(all);
                Ok(vec![Op::Assign {
                    target: self.stmt_target(s.span),
                    slot,
                    sel,
                    value: self.node(rhs)?,
                    nonblocking: *nonblocking,
                }])
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let c = self.slot_ids(cond);
                let n = ctrl.len();
                ctrl.extend(c.iter().copied());
                reads.extend(c);
                let then_ops = self.ops(then_branch, ctrl, reads)?;
                let else_ops = match else_branch {
                    Some(e) => self.ops(e, ctrl, reads)?,
                    None => Vec::new(),
                };
                ctrl.truncate(n);
                let else_ref = if else_branch.is_some() { ArmRef::Else } else { ArmRef::ImplicitElse };
                Ok(vec![Op::If {
                    cond: self.node(cond)?,
                    then_ops,
                    else_ops,
                    then_target: self.arm_target(s.span, ArmRef::Then),
                    else_target: self.arm_target(s.span, else_ref),
                }])
            }
            StmtKind::Case { kind, subject, arms, default } => {
                let mut c = self.slot_ids(subject);
                for a in arms {
                    for l in &a.labels {
                        c.extend(self.slot_ids(l));
                    }
                }
                let n = ctrl.len();
                ctrl.extend(c.iter().copied());
                reads.extend(c);
                let mut compiled = Vec::new();
                for (i, a) in arms.iter().enumerate() {
                    let m = Expr::disjunction(a.labels.iter().map(|l| label_match(*kind, subject, l)).collect(), a.span);
                    let body = self.ops(&a.body, ctrl, reads)?;
                    compiled.push((self.node(&m)?, body, self.arm_target(s.span, ArmRef::Item(i))));
                }
                let default_ops = match default {
                    Some(d) => self.ops(d, ctrl, reads)?,
                    None => Vec::new(),
                };
                ctrl.truncate(n);
                let dref = if default.is_some() { ArmRef::Default } else { ArmRef::ImplicitDefault };
                Ok(vec![Op::Case {
                    arms: compiled,
                    default_ops,
                    default_target: self.arm_target(s.span, dref),
                }])
            }
        }
    }
}

/// Registers assigned a constant in the reset-asserted arm of `block`.
fn reset_values(block: &ProcBlock, params: &[(String, u64, u32)]) -> Vec<(String, Option<LValue>, u64)> {
    let mut out = Vec::new();
    if block.reset.is_none() {
        return out;
    }
    let first = match &block.body.kind {
        StmtKind::Block { stmts, .. } if stmts.len() == 1 => &stmts[0],
        _ => &block.body,
    };
    if let StmtKind::If { then_branch, .. } = &first.kind {
        then_branch.walk(&mut |s| {
            if let StmtKind::Assign { lhs, rhs, .. } = &s.kind {
                if let Ok((v, _)) = crate::rtl::eval_constant(rhs, params) {
                    out.push((lhs.name.clone(), lhs.select.is_some().then(|| lhs.clone()), v));
                }
            }
        });
    }
    out
}

/// Build the cycle model of `unit`. `file` names the source in target ids.
pub fn elaborate(unit: &DesignUnit, file: &str, cfg: &ElabConfig) -> Result<TransitionSystem, FormalError> {
    let table: SignalTable = resolve_signals(unit)?;
    let clock = unit.primary_clock().cloned();
    for b in unit.blocks() {
        if let (Some(c), Some(p)) = (&b.clock, &clock) {
            if c != p {
                return Err(FormalError::MultiClock {
                    clocks: vec![p.event_text(), c.event_text()],
                });
            }
        }
    }

    let mut seq_writes: Vec<String> = Vec::new();
    let mut comb_writes: Vec<(String, usize)> = Vec::new();
    for (i, item) in unit.items.iter().enumerate() {
        match item {
            Item::Always(b) if b.is_clocked() => {
                for s in b.body.assigned_signals() {
                    if comb_writes.iter().any(|(n, _)| *n == s) {
                        return Err(FormalError::MultipleDrivers { signal: s });
                    }
                    if !seq_writes.contains(&s) {
                        seq_writes.push(s);
                    }
                }
            }
            Item::Always(b) => {
                for s in b.body.assigned_signals() {
                    if seq_writes.contains(&s) || comb_writes.iter().any(|(n, j)| *n == s && *j != i) {
                        return Err(FormalError::MultipleDrivers { signal: s });
                    }
                    comb_writes.push((s, i));
                }
            }
            Item::Assign(a) => {
                let s = a.lhs.name.clone();
                if seq_writes.contains(&s) || comb_writes.iter().any(|(n, j)| *n == s && *j != i) {
                    return Err(FormalError::MultipleDrivers { signal: s });
                }
                comb_writes.push((s, i));
            }
        }
    }

    let clock_name = clock.as_ref().map(|c| c.signal.clone());
    let slots: Vec<Slot> = table
        .signals
        .iter()
        .map(|s| {
            let role = if Some(&s.name) == clock_name.as_ref() {
                Role::Clock
            } else if seq_writes.contains(&s.name) {
                Role::Register
            } else if comb_writes.iter().any(|(n, _)| *n == s.name) {
                Role::Comb
            } else {
                // Undriven locals behave like free inputs.
                Role::Input
            };
            Slot {
                name: s.name.clone(),
                width: s.width,
                lsb: s.lsb,
                role,
            }
        })
        .collect();
    let state_vars: Vec<usize> = (0..slots.len()).filter(|&i| slots[i].role == Role::Register).collect();
    let input_vars: Vec<usize> = (0..slots.len()).filter(|&i| slots[i].role == Role::Input).collect();
    let bits: u32 = state_vars.iter().map(|&i| slots[i].width).sum();
    if bits > cfg.state_budget {
        return Err(FormalError::StateBudgetExceeded {
            bits,
            budget: cfg.state_budget,
        });
    }
    let ibits: u32 = input_vars.iter().map(|&i| slots[i].width).sum();
    if ibits > cfg.input_budget {
        return Err(FormalError::InputBudgetExceeded {
            bits: ibits,
            budget: cfg.input_budget,
        });
    }

    let targets = crate::coverage::enumerate_targets(unit, file);
    let params = table.params.clone();
    let mut b = Builder {
        slots: &slots,
        params: &params,
        targets: &targets,
        deps: vec![Vec::new(); slots.len()],
    };
    let mut comb = Vec::new();
    let mut seq = Vec::new();
    let mut reset_inits: Vec<(String, Option<LValue>, u64)> = Vec::new();
    for item in &unit.items {
        let mut reads = Vec::new();
        let (ops, writes, clocked) = match item {
            Item::Assign(a) => {
                let (slot, sel, sel_reads) = b.lvalue(&a.lhs)?;
                let mut r = b.slot_ids(&a.rhs);
                r.extend(sel_reads);
                b.add_deps(slot, &r);
                reads.extend(r);
                let op = Op::Assign {
                    target: b.stmt_target(a.span),
                    slot,
                    sel,
                    value: b.node(&a.rhs)?,
                    nonblocking: false,
                };
                (vec![op], vec![slot], false)
            }
            Item::Always(blk) => {
                let ops = b.ops(&blk.body, &mut Vec::new(), &mut reads)?;
                let writes: Vec<usize> = blk
                    .body
                    .assigned_signals()
                    .iter()
                    .map(|n| b.slot_of(n))
                    .collect::<Result<_, _>>()?;
                if blk.is_clocked() {
                    reset_inits.extend(reset_values(blk, &params));
                }
                (ops, writes, blk.is_clocked())
            }
        };
        reads.sort_unstable();
        reads.dedup();
        let p = Process { ops, writes, reads };
        if clocked {
            seq.push(p);
        } else {
            comb.push(p);
        }
    }
    let deps = b.deps;
    let comb = order_comb(comb, &slots)?;

    let mut ts = TransitionSystem {
        module: unit.name.clone(),
        clock,
        slots,
        params,
        state_vars,
        input_vars,
        init: Vec::new(),
        targets,
        comb,
        seq,
        deps,
    };
    ts.init = initial_states(&ts, &reset_inits);
    Ok(ts)
}

/// Topological order of combinational processes; a cycle is an error.
fn order_comb(procs: Vec<Process>, slots: &[Slot]) -> Result<Vec<Process>, FormalError> {
    let n = procs.len();
    let depends = |a: usize, b: usize| a != b && procs[a].reads.iter().any(|r| procs[b].writes.contains(r));
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let ready = (0..n).find(|&a| !done[a] && (0..n).all(|b| done[b] || !depends(a, b)));
        match ready {
            Some(a) => {
                done[a] = true;
                order.push(a);
            }
            None => {
                let mut signals: Vec<String> = (0..n)
                    .filter(|&a| !done[a])
                    .flat_map(|a| procs[a].writes.iter().map(|&w| slots[w].name.clone()))
                    .collect();
                signals.sort();
                signals.dedup();
                return Err(FormalError::CombinationalLoop { signals });
            }
        }
    }
    let mut procs: Vec<Option<Process>> = procs.into_iter().map(Some).collect();
    Ok(order.into_iter().map(|i| procs[i].take().unwrap()).collect())
}

/// Every combination of unreset register bits, with reset values applied.
fn initial_states(ts: &TransitionSystem, resets: &[(String, Option<LValue>, u64)]) -> Vec<u64> {
    let mut fixed_mask = 0u64;
    let mut fixed_val = 0u64;
    let mut shift = 0;
    for &i in &ts.state_vars {
        let s = &ts.slots[i];
        for (name, sel, v) in resets {
            if *name != s.name {
                continue;
            }
            let (off, w) = match sel.as_ref().and_then(|l| l.select.as_ref()) {
                None => (0, s.width),
                Some(Select::Bit(ix)) => match crate::rtl::eval_constant(ix, &ts.params) {
                    Ok((b, _)) if b >= s.lsb as u64 => ((b - s.lsb as u64) as u32, 1),
                    _ => continue,
                },
                Some(Select::Part { msb, lsb }) => {
                    match (crate::rtl::eval_constant(msb, &ts.params), crate::rtl::eval_constant(lsb, &ts.params)) {
                        (Ok((m, _)), Ok((l, _))) if l >= s.lsb as u64 && m >= l => ((l - s.lsb as u64) as u32, (m - l + 1) as u32),
                        _ => continue,
                    }
                }
            };
            let m = mask(w) << (shift + off);
            fixed_mask |= m;
            fixed_val = (fixed_val & !m) | ((v & mask(w)) << (shift + off));
        }
        shift += s.width;
    }
    let total = shift;
    let free: Vec<u32> = (0..total).filter(|b| fixed_mask >> b & 1 == 0).collect();
    let mut out = Vec::with_capacity(1 << free.len());
    for combo in 0..(1u64 << free.len()) {
        let mut s = fixed_val;
        for (k, &bit) in free.iter().enumerate() {
            s |= (combo >> k & 1) << bit;
        }
        out.push(s);
    }
    out
}
