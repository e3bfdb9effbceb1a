use serde::{Deserialize, Serialize};

use crate::rtl::ast::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TargetKind {
    Statement,
    Branch,
}

/// Scheduling class of the code that owns a target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    AlwaysFf,
    AlwaysComb,
    Always,
    Assign,
}

impl Timing {
    pub fn as_str(self) -> &'static str {
        match self {
            Timing::AlwaysFf => "always_ff",
            Timing::AlwaysComb => "always_comb",
            Timing::Always => "always",
            Timing::Assign => "assign",
        }
    }
}

/// Innermost construct that owns the target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    If,
    Case,
    Always,
    Assign,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Enclosing {
    pub module: String,
    pub timing: Timing,
    pub block: BlockKind,
    /// Index into `DesignUnit::items`.
    pub item: usize,
    /// Whether the owning block is clocked.
    pub clocked: bool,
}

/// One guard on the path from the block root to a target.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Guard {
    pub cond: Expr,
    /// Comes from the top-level reset conditional of a clocked block.
    pub reset: bool,
    /// For reset guards: true on the reset-asserted arm.
    pub asserted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmRef {
    Then,
    Else,
    Item(usize),
    Default,
    ImplicitElse,
    ImplicitDefault,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "anchor", rename_all = "snake_case")]
pub enum Anchor {
    Assign {
        lhs: LValue,
        rhs: Expr,
        nonblocking: bool,
    },
    Arm {
        construct: SourceSpan,
        arm: ArmRef,
        /// Signals assigned anywhere in the construct, first-assignment order.
        construct_assigns: Vec<String>,
        /// Signals assigned inside this arm.
        arm_assigns: Vec<String>,
        /// Assignments of the arm in order; empty when the arm nests an
        /// if/case.
        arm_stmts: Vec<Stmt>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageTarget {
    pub id: String,
    pub kind: TargetKind,
    pub span: SourceSpan,
    pub enclosing: Enclosing,
    /// Conjunction of `guards`; `1'b1` when unguarded.
    pub path_condition: Expr,
    pub guards: Vec<Guard>,
    pub anchor: Anchor,
}

impl CoverageTarget {
    /// True when no non-reset if/case encloses the target.
    pub fn is_isolated(&self) -> bool {
        self.guards.iter().all(|g| g.reset)
    }

    pub fn in_reset_branch(&self) -> bool {
        self.guards.iter().any(|g| g.reset && g.asserted)
    }

    pub fn is_implicit(&self) -> bool {
        matches!(
            self.anchor,
            Anchor::Arm {
                arm: ArmRef::ImplicitElse | ArmRef::ImplicitDefault,
                ..
            }
        )
    }
}

pub fn statement_id(file: &str, module: &str, span: SourceSpan) -> String {
    format!("{file}:{module}:stmt@{span}")
}

pub fn branch_id(file: &str, module: &str, span: SourceSpan) -> String {
    format!("{file}:{module}:branch@{span}")
}

pub fn implicit_id(file: &str, module: &str, construct: SourceSpan) -> String {
    format!("{file}:{module}:implicit@{construct}")
}

/// Every statement and branch target of `unit`, in source walk order.
/// `file` is the short file name used in ids.
pub fn enumerate_targets(unit: &DesignUnit, file: &str) -> Vec<CoverageTarget> {
    let mut w = Walker {
        unit,
        file,
        out: Vec::new(),
    };
    for (index, item) in unit.items.iter().enumerate() {
        match item {
            Item::Assign(a) => {
                let enclosing = Enclosing {
                    module: unit.name.clone(),
                    timing: Timing::Assign,
                    block: BlockKind::Assign,
                    item: index,
                    clocked: false,
                };
                w.push(
                    TargetKind::Statement,
                    a.span,
                    enclosing,
                    &[],
                    Anchor::Assign {
                        lhs: a.lhs.clone(),
                        rhs: a.rhs.clone(),
                        nonblocking: false,
                    },
                );
            }
            Item::Always(b) => {
                let timing = match b.timing {
                    TimingClass::AlwaysFf => Timing::AlwaysFf,
                    TimingClass::AlwaysComb => Timing::AlwaysComb,
                    TimingClass::AlwaysPlain => Timing::Always,
                };
                let ctx = BlockCtx {
                    timing,
                    item: index,
                    clocked: b.is_clocked(),
                    reset: b.reset.as_ref().map(|r| r.signal.clone()),
                };
                let reset_if = top_if(&b.body);
                w.stmt(&b.body, &ctx, &mut Vec::new(), BlockKind::Always, reset_if);
            }
        }
    }
    w.out
}

struct BlockCtx {
    timing: Timing,
    item: usize,
    clocked: bool,
    reset: Option<String>,
}

fn top_if(body: &Stmt) -> Option<SourceSpan> {
    let first = match &body.kind {
        StmtKind::Block { stmts, .. } if stmts.len() == 1 => &stmts[0],
        _ => body,
    };
    matches!(first.kind, StmtKind::If { .. }).then_some(first.span)
}

struct Walker<'a> {
    unit: &'a DesignUnit,
    file: &'a str,
    out: Vec<CoverageTarget>,
}

impl Walker<'_> {
    fn push(
        &mut self,
        kind: TargetKind,
        span: SourceSpan,
        enclosing: Enclosing,
        guards: &[Guard],
        anchor: Anchor,
    ) {
        let module = &self.unit.name;
        let id = match (&kind, &anchor) {
            (TargetKind::Statement, _) => statement_id(self.file, module, span),
            (
                TargetKind::Branch,
                Anchor::Arm {
                    arm: ArmRef::ImplicitElse | ArmRef::ImplicitDefault,
                    ..
                },
            ) => implicit_id(self.file, module, span),
            (TargetKind::Branch, _) => branch_id(self.file, module, span),
        };
        let path_condition = Expr::conjunction(guards.iter().map(|g| g.cond.clone()).collect(), span);
        self.out.push(CoverageTarget {
            id,
            kind,
            span,
            enclosing,
            path_condition,
            guards: guards.to_vec(),
            anchor,
        });
    }

    fn enclosing(&self, ctx: &BlockCtx, block: BlockKind) -> Enclosing {
        Enclosing {
            module: self.unit.name.clone(),
            timing: ctx.timing,
            block,
            item: ctx.item,
            clocked: ctx.clocked,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn arm(
        &mut self,
        ctx: &BlockCtx,
        block: BlockKind,
        construct: &Stmt,
        arm: ArmRef,
        body: Option<&Stmt>,
        guards: &mut Vec<Guard>,
        guard: Guard,
        reset_if: Option<SourceSpan>,
    ) {
        guards.push(guard);
        let span = body.map(|b| b.span).unwrap_or(construct.span);
        let arm_stmts = body.and_then(flat_assigns).unwrap_or_default();
        let anchor = Anchor::Arm {
            construct: construct.span,
            arm,
            construct_assigns: construct.assigned_signals(),
            arm_assigns: body.map(|b| b.assigned_signals()).unwrap_or_default(),
            arm_stmts,
        };
        let enc = self.enclosing(ctx, block);
        self.push(TargetKind::Branch, span, enc, guards, anchor);
        if let Some(b) = body {
            self.stmt(b, ctx, guards, block, reset_if);
        }
        guards.pop();
    }

    fn stmt(
        &mut self,
        s: &Stmt,
        ctx: &BlockCtx,
        guards: &mut Vec<Guard>,
        block: BlockKind,
        reset_if: Option<SourceSpan>,
    ) {
        match &s.kind {
            StmtKind::Assign {
                lhs,
                rhs,
                nonblocking,
            } => {
                let enc = self.enclosing(ctx, block);
                self.push(
                    TargetKind::Statement,
                    s.span,
                    enc,
                    guards,
                    Anchor::Assign {
                        lhs: lhs.clone(),
                        rhs: rhs.clone(),
                        nonblocking: *nonblocking,
                    },
                );
            }
            StmtKind::Block { stmts, .. } => {
                for st in stmts {
                    self.stmt(st, ctx, guards, block, reset_if);
                }
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                // The parser classified the block's reset from this same
                // statement, so position alone identifies it.
                let is_reset = Some(s.span) == reset_if && ctx.clocked && ctx.reset.is_some();
                let then_guard = Guard {
                    cond: cond.clone(),
                    reset: is_reset,
                    asserted: true,
                };
                let else_guard = Guard {
                    cond: cond.clone().negate(),
                    reset: is_reset,
                    asserted: false,
                };
                self.arm(ctx, BlockKind::If, s, ArmRef::Then, Some(then_branch), guards, then_guard, None);
                match else_branch {
                    Some(e) => self.arm(ctx, BlockKind::If, s, ArmRef::Else, Some(e), guards, else_guard, None),
                    None => self.arm(ctx, BlockKind::If, s, ArmRef::ImplicitElse, None, guards, else_guard, None),
                }
            }
            StmtKind::Case {
                kind,
                subject,
                arms,
                default,
            } => {
                let matches: Vec<Vec<Expr>> = arms
                    .iter()
                    .map(|a| a.labels.iter().map(|l| label_match(*kind, subject, l)).collect())
                    .collect();
                for (i, arm) in arms.iter().enumerate() {
                    let mut terms = vec![Expr::disjunction(matches[i].clone(), arm.span)];
                    // First-match semantics: exclude earlier labels that may overlap.
                    for (j, earlier) in arms[..i].iter().enumerate() {
                        for (k, el) in earlier.labels.iter().enumerate() {
                            let overlaps = arm
                                .labels
                                .iter()
                                .any(|l| !labels_disjoint(self.unit, el, l));
                            if overlaps {
                                terms.push(matches[j][k].clone().negate());
                            }
                        }
                    }
                    let guard = Guard {
                        cond: Expr::conjunction(terms, arm.span),
                        reset: false,
                        asserted: false,
                    };
                    self.arm(ctx, BlockKind::Case, s, ArmRef::Item(i), Some(&arm.body), guards, guard, None);
                }
                let all: Vec<Expr> = matches.into_iter().flatten().collect();
                let guard = Guard {
                    cond: Expr::disjunction(all, s.span).negate(),
                    reset: false,
                    asserted: false,
                };
                match default {
                    Some(d) => self.arm(ctx, BlockKind::Case, s, ArmRef::Default, Some(d), guards, guard, None),
                    None => self.arm(ctx, BlockKind::Case, s, ArmRef::ImplicitDefault, None, guards, guard, None),
                }
            }
        }
    }
}

/// The assignments of `s` in order, or `None` when it nests an if/case.
fn flat_assigns(s: &Stmt) -> Option<Vec<Stmt>> {
    match &s.kind {
        StmtKind::Assign { .. } => Some(vec![s.clone()]),
        StmtKind::Block { stmts, .. } => {
            let mut out = Vec::new();
            for st in stmts {
                out.extend(flat_assigns(st)?);
            }
            Some(out)
        }
        _ => None,
    }
}

pub(crate) fn label_match(kind: CaseKind, subject: &Expr, label: &Expr) -> Expr {
    let wildcard = matches!(&label.kind, ExprKind::Number(l) if l.wildcard != 0);
    let op = if kind == CaseKind::Casez && wildcard {
        BinaryOp::WildEq
    } else {
        BinaryOp::Eq
    };
    let mut e = Expr::binary(op, subject.clone(), label.clone());
    e.span = label.span;
    e
}

/// Constant value and don't-care mask of a case label, if it is constant.
fn label_value(unit: &DesignUnit, label: &Expr) -> Option<(u64, u64)> {
    match &label.kind {
        ExprKind::Number(l) => Some((l.value, l.wildcard)),
        ExprKind::Ident(n) => unit.param(n).map(|p| (p.value, 0)),
        _ => {
            let known: Vec<(String, u64, u32)> = unit
                .params
                .iter()
                .map(|p| (p.name.clone(), p.value, p.width))
                .collect();
            crate::rtl::eval_constant(label, &known).ok().map(|(v, _)| (v, 0))
        }
    }
}

fn labels_disjoint(unit: &DesignUnit, a: &Expr, b: &Expr) -> bool {
    match (label_value(unit, a), label_value(unit, b)) {
        (Some((va, wa)), Some((vb, wb))) => (va ^ vb) & !wa & !wb != 0,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rtl::parse_source;

    pub const LISTING1: &str = "module listing1(input clk, input a, input b, input d1, input d2, output reg c); always @(posedge clk) begin\n if (a && b)\n  c <= d1;\n else\n  c <= d2;\nend\nendmodule\n";

    #[test]
    fn listing_one_targets() {
        let u = &parse_source(LISTING1, "listing1.v").unwrap()[0];
        let t = enumerate_targets(u, "listing1.v");
        let stmts: Vec<&CoverageTarget> = t.iter().filter(|t| t.kind == TargetKind::Statement).collect();
        assert_eq!(stmts.len(), 2);
        assert_eq!(stmts[0].span.start_line, 3);
        assert_eq!(stmts[1].span.start_line, 5);
        assert_eq!(stmts[0].path_condition.to_string(), "a && b");
        assert_eq!(stmts[1].path_condition.to_string(), "!(a && b)");
        assert_eq!(stmts[0].id, "listing1.v:listing1:stmt@3.3-3.10");
        assert_eq!(t.iter().filter(|t| t.kind == TargetKind::Branch).count(), 2);
    }

    #[test]
    fn unconditional_assign() {
        let u = &parse_source("module m(input x, output y); assign y = x; endmodule", "m.v").unwrap()[0];
        let t = enumerate_targets(u, "m.v");
        assert_eq!(t.len(), 1);
        assert!(t[0].path_condition.is_true_literal());
        assert!(t[0].is_isolated());
    }

    #[test]
    fn implicit_arms_attach_to_construct() {
        let src = "module m(input clk, input en, output reg q);\nalways @(posedge clk) if (en) q <= 1'b1;\nendmodule";
        let u = &parse_source(src, "m.v").unwrap()[0];
        let t = enumerate_targets(u, "m.v");
        let imp = t.iter().find(|t| t.is_implicit()).unwrap();
        assert_eq!(imp.path_condition.to_string(), "!en");
        assert!(imp.id.contains("implicit@2.23-2.40"));
    }

    #[test]
    fn reset_guards_are_marked() {
        let src = "module m(input clk, input rst, input [3:0] a, output reg [3:0] c);\nalways_ff @(posedge clk) if (!rst) c <= 4'd0; else c <= a;\nendmodule";
        let u = &parse_source(src, "m.v").unwrap()[0];
        let t = enumerate_targets(u, "m.v");
        let s: Vec<&CoverageTarget> = t.iter().filter(|t| t.kind == TargetKind::Statement).collect();
        assert!(s[0].in_reset_branch());
        assert!(!s[1].in_reset_branch());
        assert!(s[1].is_isolated());
        assert_eq!(s[1].path_condition.to_string(), "rst");
    }

    #[test]
    fn overlapping_casez_labels_exclude_earlier() {
        let src = "module m(input [1:0] s, output reg y);\nalways @(*) casez (s) 2'b1?: y = 1'b1; 2'b11: y = 1'b0; 2'b01: y = 1'b0; default: y = 1'b0; endcase\nendmodule";
        let u = &parse_source(src, "m.v").unwrap()[0];
        let t = enumerate_targets(u, "m.v");
        let arms: Vec<String> = t
            .iter()
            .filter(|t| t.kind == TargetKind::Branch)
            .map(|t| t.path_condition.to_string())
            .collect();
        assert_eq!(arms[0], "s ==? 2'b1?");
        assert_eq!(arms[1], "s == 2'b11 && !(s ==? 2'b1?)");
        assert_eq!(arms[2], "s == 2'b01");
        assert_eq!(arms[3], "!(s ==? 2'b1? || s == 2'b11 || s == 2'b01)");
    }
}
