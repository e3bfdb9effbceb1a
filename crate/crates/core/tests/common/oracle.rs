//! Reference interpreter used to cross-check the formal engine. It walks the
//! AST directly, settles combinational logic by fixpoint iteration and finds
//! verdicts by plain enumeration, sharing no code with the elaborator or the
//! checker.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use covloop::rtl::ast::*;
use covloop::rtl::resolve_signals;
use covloop::sva::parse::{parse_property_expr, Macro};
use covloop::sva::{ImplOp, PropKind, SvaProperty};

pub type Vals = BTreeMap<String, u64>;

fn m(w: u32) -> u64 {
    if w >= 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

pub struct Sim {
    pub widths: BTreeMap<String, u32>,
    pub params: BTreeMap<String, (u64, u32)>,
    pub inputs: Vec<String>,
    pub regs: Vec<String>,
    comb: Vec<Item>,
    seq: Vec<ProcBlock>,
    clock: Option<String>,
}

/// Values of `$past` arguments keyed by the printed argument.
pub type PastVals = BTreeMap<String, u64>;

pub struct Ctx<'a> {
    pub sim: &'a Sim,
    pub vals: &'a Vals,
    pub past: Option<&'a PastVals>,
}

impl Ctx<'_> {
    fn self_width(&self, e: &Expr) -> u32 {
        match &e.kind {
            ExprKind::Ident(n) => self
                .sim
                .widths
                .get(n)
                .copied()
                .or_else(|| self.sim.params.get(n).map(|p| p.1))
                .unwrap_or_else(|| panic!("oracle: unknown `{n}`")),
            ExprKind::Number(l) => l.width.unwrap_or(32),
            ExprKind::Unary { op, arg } => match op {
                UnaryOp::BitNot | UnaryOp::Neg | UnaryOp::Plus => self.self_width(arg),
                _ => 1,
            },
            ExprKind::Binary { op, lhs, rhs } => {
                use BinaryOp::*;
                match op {
                    Add | Sub | Mul | Div | Mod | BitAnd | BitOr | BitXor | BitXnor => {
                        self.self_width(lhs).max(self.self_width(rhs))
                    }
                    Shl | Shr => self.self_width(lhs),
                    _ => 1,
                }
            }
            ExprKind::Ternary { then_expr, else_expr, .. } => self.self_width(then_expr).max(self.self_width(else_expr)),
            ExprKind::Concat(items) => items.iter().map(|i| self.self_width(i)).sum(),
            ExprKind::Replicate { count, items } => {
                let n = self.eval(count, 32) as u32;
                n * items.iter().map(|i| self.self_width(i)).sum::<u32>()
            }
            ExprKind::Index { .. } => 1,
            ExprKind::Slice { msb, lsb, .. } => (self.eval(msb, 32) - self.eval(lsb, 32) + 1) as u32,
            ExprKind::Cast { width, .. } => *width,
            ExprKind::SysCall { args, .. } => self.self_width(&args[0]),
        }
    }

    /// Evaluate with context width `cw` (the width the result is used at).
    pub fn eval(&self, e: &Expr, cw: u32) -> u64 {
        let w = self.self_width(e).max(cw);
        match &e.kind {
            ExprKind::Ident(n) => match self.vals.get(n) {
                Some(v) => *v,
                None => self.sim.params[n].0,
            },
            ExprKind::Number(l) => l.value,
            ExprKind::Unary { op, arg } => {
                let sw = self.self_width(arg);
                let v = self.eval(arg, sw);
                match op {
                    UnaryOp::LogNot => (v == 0) as u64,
                    UnaryOp::BitNot => !self.eval(arg, w) & m(w),
                    UnaryOp::Neg => self.eval(arg, w).wrapping_neg() & m(w),
                    UnaryOp::Plus => self.eval(arg, w),
                    UnaryOp::RedAnd => (v == m(sw)) as u64,
                    UnaryOp::RedOr => (v != 0) as u64,
                    UnaryOp::RedXor => (v.count_ones() & 1) as u64,
                    UnaryOp::RedNand => (v != m(sw)) as u64,
                    UnaryOp::RedNor => (v == 0) as u64,
                    UnaryOp::RedXnor => (v.count_ones() & 1 == 0) as u64,
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                use BinaryOp::*;
                match op {
                    LogAnd => (self.truth(lhs) && self.truth(rhs)) as u64,
                    LogOr => (self.truth(lhs) || self.truth(rhs)) as u64,
                    Eq | Ne | Lt | Le | Gt | Ge | CaseEq | CaseNe => {
                        let ow = self.self_width(lhs).max(self.self_width(rhs));
                        let (a, b) = (self.eval(lhs, ow), self.eval(rhs, ow));
                        (match op {
                            Eq | CaseEq => a == b,
                            Ne | CaseNe => a != b,
                            Lt => a < b,
                            Le => a <= b,
                            Gt => a > b,
                            _ => a >= b,
                        }) as u64
                    }
                    Shl | Shr => {
                        let a = self.eval(lhs, w);
                        let b = self.eval(rhs, self.self_width(rhs));
                        let r = if b >= 64 {
                            0
                        } else if *op == Shl {
                            a << b
                        } else {
                            a >> b
                        };
                        r & m(w)
                    }
                    _ => {
                        let (a, b) = (self.eval(lhs, w), self.eval(rhs, w));
                        let r = match op {
                            Add => a.wrapping_add(b),
                            Sub => a.wrapping_sub(b),
                            Mul => a.wrapping_mul(b),
                            Div => a.checked_div(b).unwrap_or(0),
                            Mod => a.checked_rem(b).unwrap_or(0),
                            BitAnd => a & b,
                            BitOr => a | b,
                            BitXor => a ^ b,
                            BitXnor => !(a ^ b),
                            _ => unreachable!("{op:?}"),
                        };
                        r & m(w)
                    }
                }
            }
            ExprKind::Ternary { cond, then_expr, else_expr } => {
                if self.truth(cond) {
                    self.eval(then_expr, w)
                } else {
                    self.eval(else_expr, w)
                }
            }
            ExprKind::Concat(items) => items.iter().fold(0, |acc, i| {
                let iw = self.self_width(i);
                (acc << iw) | self.eval(i, iw)
            }),
            ExprKind::Replicate { count, items } => {
                let n = self.eval(count, 32);
                let unit = ExprKind::Concat(items.clone());
                let one = self.eval(&Expr::new(unit.clone(), e.span), 0);
                let uw = self.self_width(&Expr::new(unit, e.span));
                (0..n).fold(0, |acc, _| (acc << uw) | one)
            }
            ExprKind::Index { base, index } => {
                let v = self.eval(base, self.self_width(base));
                (v >> self.eval(index, 32)) & 1
            }
            ExprKind::Slice { base, msb, lsb } => {
                let v = self.eval(base, self.self_width(base));
                let (hi, lo) = (self.eval(msb, 32), self.eval(lsb, 32));
                (v >> lo) & m((hi - lo + 1) as u32)
            }
            ExprKind::Cast { width, arg } => self.eval(arg, *width) & m(*width),
            ExprKind::SysCall { name, args } => {
                assert_eq!(name, "past", "oracle: only $past");
                assert!(args.len() == 1 || matches!(&args[1].kind, ExprKind::Number(l) if l.value == 1), "oracle: $past depth 1 only");
                let key = args[0].to_string();
                *self
                    .past
                    .expect("oracle: $past needs a previous cycle")
                    .get(&key)
                    .unwrap_or_else(|| panic!("oracle: no past value for {key}"))
            }
        }
    }

    pub fn truth(&self, e: &Expr) -> bool {
        self.eval(e, self.self_width(e)) != 0
    }
}

impl Sim {
    pub fn new(unit: &DesignUnit) -> Self {
        let table = resolve_signals(unit).expect("signals");
        let clock = unit.blocks().find_map(|b| b.clock.as_ref().map(|c| c.signal.clone()));
        let mut comb = Vec::new();
        let mut seq = Vec::new();
        for item in &unit.items {
            match item {
                Item::Always(b) if b.clock.is_some() => seq.push(b.clone()),
                other => comb.push(other.clone()),
            }
        }
        let mut assigned_seq = BTreeSet::new();
        for b in &seq {
            assigned_seq.extend(b.body.assigned_signals());
        }
        let mut assigned_comb = BTreeSet::new();
        for c in &comb {
            match c {
                Item::Assign(a) => {
                    assigned_comb.insert(a.lhs.name.clone());
                }
                Item::Always(b) => assigned_comb.extend(b.body.assigned_signals()),
            }
        }
        let mut widths = BTreeMap::new();
        let mut inputs = Vec::new();
        let mut regs = Vec::new();
        for s in &table.signals {
            assert_eq!(s.lsb, 0, "oracle: zero-based vectors only");
            widths.insert(s.name.clone(), s.width);
            if assigned_seq.contains(&s.name) {
                regs.push(s.name.clone());
            } else if !assigned_comb.contains(&s.name) && Some(&s.name) != clock.as_ref() {
                inputs.push(s.name.clone());
            }
        }
        let params = table.params.iter().map(|(n, v, w)| (n.clone(), (*v, *w))).collect();
        Sim {
            widths,
            params,
            inputs,
            regs,
            comb,
            seq,
            clock,
        }
    }

    pub fn input_bits(&self) -> u32 {
        self.inputs.iter().map(|n| self.widths[n]).sum()
    }

    fn unpack(&self, names: &[String], mut packed: u64, into: &mut Vals) {
        for n in names {
            let w = self.widths[n];
            into.insert(n.clone(), packed & m(w));
            packed >>= w;
        }
    }

    /// Every assignment of the input ports.
    pub fn all_inputs(&self) -> Vec<Vals> {
        (0..1u64 << self.input_bits())
            .map(|p| {
                let mut v = Vals::new();
                self.unpack(&self.inputs, p, &mut v);
                v
            })
            .collect()
    }

    fn exec(&self, s: &Stmt, view: &mut Vals, next: &mut Vals, executed: &mut Vec<SourceSpan>) {
        match &s.kind {
            StmtKind::Block { stmts, .. } => stmts.iter().for_each(|x| self.exec(x, view, next, executed)),
            StmtKind::If { cond, then_branch, else_branch } => {
                let c = Ctx { sim: self, vals: view, past: None }.truth(cond);
                if c {
                    self.exec(then_branch, view, next, executed);
                } else if let Some(e) = else_branch {
                    self.exec(e, view, next, executed);
                }
            }
            StmtKind::Case { kind, subject, arms, default } => {
                let ctx = Ctx { sim: self, vals: view, past: None };
                let sw = ctx.self_width(subject);
                let arm = arms.iter().find(|a| {
                    a.labels.iter().any(|l| {
                        let w = sw.max(ctx.self_width(l));
                        let (sv, lv) = (ctx.eval(subject, w), ctx.eval(l, w));
                        let care = match (&l.kind, kind) {
                            (ExprKind::Number(lit), CaseKind::Casez) => !lit.wildcard & m(w),
                            _ => m(w),
                        };
                        sv & care == lv & care
                    })
                });
                match (arm, default) {
                    (Some(a), _) => self.exec(&a.body, view, next, executed),
                    (None, Some(d)) => self.exec(d, view, next, executed),
                    (None, None) => {}
                }
            }
            StmtKind::Assign { lhs, rhs, nonblocking } => {
                executed.push(s.span);
                let lw = self.widths[&lhs.name];
                let ctx = Ctx { sim: self, vals: view, past: None };
                let (lo, sel_w) = match &lhs.select {
                    None => (0, lw),
                    Some(Select::Bit(i)) => (ctx.eval(i, 32), 1),
                    Some(Select::Part { msb, lsb }) => {
                        let (h, l) = (ctx.eval(msb, 32), ctx.eval(lsb, 32));
                        (l, (h - l + 1) as u32)
                    }
                };
                let v = ctx.eval(rhs, sel_w.max(ctx.self_width(rhs))) & m(sel_w);
                let write = |target: &mut Vals| {
                    let old = target.get(&lhs.name).copied().unwrap_or(0);
                    let field = m(sel_w) << lo;
                    target.insert(lhs.name.clone(), (old & !field) | (v << lo));
                };
                if !nonblocking {
                    write(view);
                }
                write(next);
            }
        }
    }

    /// Settle combinational signals: zero them, then re-run every process
    /// until nothing changes.
    pub fn settle(&self, vals: &mut Vals, executed: &mut Vec<SourceSpan>) {
        for c in &self.comb {
            let names = match c {
                Item::Assign(a) => vec![a.lhs.name.clone()],
                Item::Always(b) => b.body.assigned_signals(),
            };
            for n in names {
                vals.insert(n, 0);
            }
        }
        for _ in 0..64 {
            let before = vals.clone();
            let mut spans = Vec::new();
            for c in &self.comb {
                match c {
                    Item::Assign(a) => {
                        let ctx = Ctx { sim: self, vals, past: None };
                        let lw = self.widths[&a.lhs.name];
                        assert!(a.lhs.select.is_none(), "oracle: whole-signal continuous assigns only");
                        let v = ctx.eval(&a.rhs, lw.max(ctx.self_width(&a.rhs))) & m(lw);
                        vals.insert(a.lhs.name.clone(), v);
                        spans.push(a.span);
                    }
                    Item::Always(b) => {
                        let mut local = vals.clone();
                        for n in b.body.assigned_signals() {
                            local.insert(n, 0);
                        }
                        let mut next = local.clone();
                        self.exec(&b.body, &mut local, &mut next, &mut spans);
                        for n in b.body.assigned_signals() {
                            vals.insert(n.clone(), next[&n]);
                        }
                    }
                }
            }
            if *vals == before {
                executed.extend(spans);
                return;
            }
        }
        panic!("oracle: combinational logic does not settle");
    }

    /// Values of one cycle plus the next register state.
    pub fn cycle(&self, state: &Vals, input: &Vals, executed: &mut Vec<SourceSpan>) -> (Vals, Vals) {
        let mut vals = state.clone();
        vals.extend(input.iter().map(|(k, v)| (k.clone(), *v)));
        if let Some(c) = &self.clock {
            vals.insert(c.clone(), 0);
        }
        self.settle(&mut vals, executed);
        let mut next: Vals = self.regs.iter().map(|r| (r.clone(), state[r])).collect();
        for b in &self.seq {
            let mut view = vals.clone();
            self.exec(&b.body, &mut view, &mut next, executed);
        }
        (vals, next)
    }

    /// Register values the design may start in: constants from the reset arm
    /// of each clocked block, every value for the rest.
    pub fn initial_states(&self) -> Vec<Vals> {
        let mut fixed = Vals::new();
        for b in &self.seq {
            let Some(reset) = &b.reset else { continue };
            let mut body = &b.body;
            if let StmtKind::Block { stmts, .. } = &body.kind {
                if stmts.len() == 1 {
                    body = &stmts[0];
                }
            }
            let StmtKind::If { cond, then_branch, else_branch } = &body.kind else { continue };
            let mut probe = Vals::new();
            probe.insert(reset.signal.clone(), if reset.active == ActiveLevel::High { 1 } else { 0 });
            let ctx = Ctx { sim: self, vals: &probe, past: None };
            let arm = if ctx.truth(cond) { Some(then_branch) } else { else_branch.as_ref() };
            let Some(arm) = arm else { continue };
            arm.walk(&mut |s| {
                if let StmtKind::Assign { lhs, rhs, .. } = &s.kind {
                    if lhs.select.is_none() {
                        if let ExprKind::Number(l) = &rhs.kind {
                            fixed.insert(lhs.name.clone(), l.value & m(self.widths[&lhs.name]));
                        }
                    }
                }
            });
        }
        let free: Vec<String> = self.regs.iter().filter(|r| !fixed.contains_key(*r)).cloned().collect();
        let bits: u32 = free.iter().map(|n| self.widths[n]).sum();
        (0..1u64 << bits)
            .map(|p| {
                let mut v = fixed.clone();
                self.unpack(&free, p, &mut v);
                v
            })
            .collect()
    }

    pub fn reachable(&self) -> Vec<Vals> {
        let inputs = self.all_inputs();
        let mut seen: BTreeSet<Vals> = BTreeSet::new();
        let mut queue: VecDeque<Vals> = VecDeque::new();
        for s in self.initial_states() {
            if seen.insert(s.clone()) {
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for i in &inputs {
                let (_, n) = self.cycle(&s, i, &mut Vec::new());
                if seen.insert(n.clone()) {
                    queue.push_back(n);
                }
            }
        }
        seen.into_iter().collect()
    }
}

fn pasts(e: &Expr, out: &mut Vec<Expr>) {
    e.visit(&mut |x| {
        if let ExprKind::SysCall { args, .. } = &x.kind {
            out.push(args[0].clone());
        }
    });
}

/// Verdict label the engine should report for `p`: PROVEN, FALSIFIED or, for
/// unwitnessed covers, UNDETERMINED.
pub fn verdict(sim: &Sim, reachable: &[Vals], p: &SvaProperty, macros: &[Macro]) -> &'static str {
    let parse = |t: &str| parse_property_expr(t, macros).expect("property parses");
    let ante = parse(&p.antecedent);
    let cons = parse(&p.consequent);
    let dis = p.disable_expr.as_deref().map(parse);
    let inputs = sim.all_inputs();
    let disabled = |v: &Vals| dis.as_ref().is_some_and(|d| Ctx { sim, vals: v, past: None }.truth(d));
    let mut past_args = Vec::new();
    pasts(&cons, &mut past_args);
    let mut ante_pasts = Vec::new();
    pasts(&ante, &mut ante_pasts);
    assert!(ante_pasts.is_empty(), "oracle: $past in antecedent");
    match (p.kind, p.op) {
        (PropKind::Cover, ImplOp::Overlap) => {
            for s in reachable {
                for i in &inputs {
                    let (v, _) = sim.cycle(s, i, &mut Vec::new());
                    let c = Ctx { sim, vals: &v, past: None };
                    if !disabled(&v) && c.truth(&ante) && c.truth(&cons) {
                        return "PROVEN";
                    }
                }
            }
            "UNDETERMINED"
        }
        (PropKind::Assert, ImplOp::Overlap) => {
            assert!(past_args.is_empty(), "oracle: $past under |->");
            for s in reachable {
                for i in &inputs {
                    let (v, _) = sim.cycle(s, i, &mut Vec::new());
                    let c = Ctx { sim, vals: &v, past: None };
                    if !disabled(&v) && c.truth(&ante) && !c.truth(&cons) {
                        return "FALSIFIED";
                    }
                }
            }
            "PROVEN"
        }
        (PropKind::Assert, ImplOp::NonOverlap) => {
            let mut started: BTreeSet<(Vals, PastVals)> = BTreeSet::new();
            for s in reachable {
                for i in &inputs {
                    let (v, n) = sim.cycle(s, i, &mut Vec::new());
                    let c = Ctx { sim, vals: &v, past: None };
                    if !disabled(&v) && c.truth(&ante) {
                        let pv = past_args.iter().map(|a| (a.to_string(), c.eval(a, c.self_width(a)))).collect();
                        started.insert((n, pv));
                    }
                }
            }
            for (s, pv) in &started {
                for i in &inputs {
                    let (v, _) = sim.cycle(s, i, &mut Vec::new());
                    let c = Ctx { sim, vals: &v, past: Some(pv) };
                    if !disabled(&v) && !c.truth(&cons) {
                        return "FALSIFIED";
                    }
                }
            }
            "PROVEN"
        }
        other => panic!("oracle: unsupported form {other:?}"),
    }
}

/// Statement spans executed by some reachable cycle.
pub fn executed_spans(sim: &Sim, reachable: &[Vals]) -> BTreeSet<SourceSpan> {
    let mut out = BTreeSet::new();
    for s in reachable {
        for i in sim.all_inputs() {
            let mut ex = Vec::new();
            sim.cycle(s, &i, &mut ex);
            out.extend(ex);
        }
    }
    out
}

/// Replay a counterexample of named states and inputs through the
/// interpreter and check that it starts in an initial state, follows the
/// transition relation and ends in a real violation of `p`.
pub fn replay_violation(
    sim: &Sim,
    p: &SvaProperty,
    macros: &[Macro],
    cex: &[(Vals, Vals)],
) -> Result<(), String> {
    let (first, _) = cex.first().ok_or("empty trace")?;
    if !sim.initial_states().contains(first) {
        return Err(format!("trace starts outside the initial states: {first:?}"));
    }
    let mut cycles = Vec::new();
    let mut state = first.clone();
    for (k, (s, input)) in cex.iter().enumerate() {
        if *s != state {
            return Err(format!("trace diverges at step {k}"));
        }
        let (vals, next) = sim.cycle(&state, input, &mut Vec::new());
        cycles.push(vals);
        state = next;
    }
    let parse = |t: &str| parse_property_expr(t, macros).map_err(|e| e.to_string());
    let (ante, cons) = (parse(&p.antecedent)?, parse(&p.consequent)?);
    let dis = p.disable_expr.as_deref().map(parse).transpose()?;
    let on = |v: &Vals| dis.as_ref().is_none_or(|d| !Ctx { sim, vals: v, past: None }.truth(d));
    let last = &cycles[cycles.len() - 1];
    let ok = match p.op {
        ImplOp::Overlap => {
            let c = Ctx { sim, vals: last, past: None };
            on(last) && c.truth(&ante) && !c.truth(&cons)
        }
        ImplOp::NonOverlap => {
            let Some(prev) = cycles.len().checked_sub(2).map(|i| &cycles[i]) else {
                return Err("a |=> violation needs two cycles".into());
            };
            let pc = Ctx { sim, vals: prev, past: None };
            let mut args = Vec::new();
            pasts(&cons, &mut args);
            let pv: PastVals = args.iter().map(|a| (a.to_string(), pc.eval(a, 0))).collect();
            let c = Ctx { sim, vals: last, past: Some(&pv) };
            on(prev) && pc.truth(&ante) && on(last) && !c.truth(&cons)
        }
        ImplOp::OverlapDelay(_) => return Err("delayed consequents are not replayed".into()),
    };
    if p.kind == PropKind::Cover {
        return Err("covers have no counterexamples".into());
    }
    ok.then_some(()).ok_or_else(|| "trace does not violate the property".into())
}
