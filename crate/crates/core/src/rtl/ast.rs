//! Source-spanned AST for the supported Verilog/SystemVerilog subset.

use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A region of source text. Lines and columns are 1-based; columns count
/// UTF-8 bytes. The end position is exclusive, so a zero-width span has
/// `start == end`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceSpan {
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl SourceSpan {
    pub fn new(start: (u32, u32), end: (u32, u32)) -> Self {
        SourceSpan {
            start_line: start.0,
            start_col: start.1,
            end_line: end.0,
            end_col: end.1,
        }
    }

    pub fn start(&self) -> (u32, u32) {
        (self.start_line, self.start_col)
    }

    pub fn end(&self) -> (u32, u32) {
        (self.end_line, self.end_col)
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(&self, other: SourceSpan) -> SourceSpan {
        SourceSpan::new(self.start().min(other.start()), self.end().max(other.end()))
    }

    pub fn contains(&self, other: &SourceSpan) -> bool {
        self.start() <= other.start() && other.end() <= self.end()
    }

    pub fn overlaps(&self, other: &SourceSpan) -> bool {
        self.start() < other.end() && other.start() < self.end()
    }

    pub fn is_well_formed(&self) -> bool {
        self.start_line >= 1 && self.start_col >= 1 && self.start() <= self.end()
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{}-{}.{}",
            self.start_line, self.start_col, self.end_line, self.end_col
        )
    }
}

impl Serialize for SourceSpan {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("SourceSpan", 2)?;
        s.serialize_field("start", &[self.start_line, self.start_col])?;
        s.serialize_field("end", &[self.end_line, self.end_col])?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for SourceSpan {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            start: [u32; 2],
            end: [u32; 2],
        }
        let raw = Raw::deserialize(deserializer)?;
        let span = SourceSpan::new((raw.start[0], raw.start[1]), (raw.end[0], raw.end[1]));
        if !span.is_well_formed() {
            return Err(serde::de::Error::custom(format!("malformed span {span}")));
        }
        Ok(span)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
    Inout,
}

/// Declared net/variable kind keyword.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    Wire,
    Reg,
    Logic,
    /// Port declared without a kind keyword.
    Implicit,
}

/// `[msb:lsb]` packed range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Range {
    pub msb: Expr,
    pub lsb: Expr,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PortDecl {
    pub name: String,
    pub direction: Direction,
    pub kind: NetKind,
    pub range: Option<Range>,
    /// Resolved width in bits.
    pub width: u32,
    /// Resolved least significant bit index of the range.
    pub lsb: u32,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamDecl {
    pub name: String,
    pub local: bool,
    pub range: Option<Range>,
    pub expr: Expr,
    pub value: u64,
    pub width: u32,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetDecl {
    pub name: String,
    pub kind: NetKind,
    pub range: Option<Range>,
    pub width: u32,
    pub lsb: u32,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DesignUnit {
    pub name: String,
    pub ports: Vec<PortDecl>,
    pub params: Vec<ParamDecl>,
    pub nets: Vec<NetDecl>,
    pub items: Vec<Item>,
    pub span: SourceSpan,
}

impl DesignUnit {
    pub fn port(&self, name: &str) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn param(&self, name: &str) -> Option<&ParamDecl> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn blocks(&self) -> impl Iterator<Item = &ProcBlock> {
        self.items.iter().filter_map(|i| match i {
            Item::Always(b) => Some(b),
            Item::Assign(_) => None,
        })
    }

    /// First clock found on a clocked process, used when a property needs a
    /// clocking event but the target itself is combinational.
    pub fn primary_clock(&self) -> Option<&ClockSpec> {
        self.blocks().find_map(|b| b.clock.as_ref())
    }

    pub fn primary_reset(&self) -> Option<&ResetSpec> {
        self.blocks().find_map(|b| b.reset.as_ref())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "item", rename_all = "snake_case")]
pub enum Item {
    Always(ProcBlock),
    Assign(ContinuousAssign),
}

impl Item {
    pub fn span(&self) -> SourceSpan {
        match self {
            Item::Always(b) => b.span,
            Item::Assign(a) => a.span,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TimingClass {
    AlwaysFf,
    AlwaysComb,
    /// `always @(...)`.
    AlwaysPlain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Posedge,
    Negedge,
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Edge::Posedge => "posedge",
            Edge::Negedge => "negedge",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventTerm {
    pub edge: Option<Edge>,
    pub signal: String,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "events", rename_all = "snake_case")]
pub enum Sensitivity {
    /// `always_comb`, no event control.
    Implicit,
    /// `@*` or `@(*)`.
    Star,
    List(Vec<EventTerm>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClockSpec {
    pub signal: String,
    pub edge: Edge,
}

impl ClockSpec {
    /// Clocking event in SVA syntax, e.g. `@(posedge clk)`.
    pub fn event_text(&self) -> String {
        format!("@({} {})", self.edge, self.signal)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActiveLevel {
    High,
    Low,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResetKind {
    Sync,
    Async,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResetSpec {
    pub signal: String,
    pub active: ActiveLevel,
    pub kind: ResetKind,
}

impl ResetSpec {
    /// Expression that is true while reset is asserted.
    pub fn asserted_text(&self) -> String {
        match self.active {
            ActiveLevel::High => self.signal.clone(),
            ActiveLevel::Low => format!("!{}", self.signal),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProcBlock {
    pub timing: TimingClass,
    pub sensitivity: Sensitivity,
    pub clock: Option<ClockSpec>,
    pub reset: Option<ResetSpec>,
    pub body: Stmt,
    pub span: SourceSpan,
}

impl ProcBlock {
    pub fn is_clocked(&self) -> bool {
        self.clock.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuousAssign {
    pub lhs: LValue,
    pub rhs: Expr,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LValue {
    pub name: String,
    pub select: Option<Select>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Select {
    Bit(Expr),
    Part { msb: Expr, lsb: Expr },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: SourceSpan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseKind {
    Case,
    Casez,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseArm {
    pub labels: Vec<Expr>,
    pub body: Stmt,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "stmt", rename_all = "snake_case")]
pub enum StmtKind {
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
    },
    Case {
        kind: CaseKind,
        subject: Expr,
        arms: Vec<CaseArm>,
        default: Option<Box<Stmt>>,
    },
    Assign {
        lhs: LValue,
        rhs: Expr,
        nonblocking: bool,
    },
    Block {
        label: Option<String>,
        stmts: Vec<Stmt>,
    },
}

impl Stmt {
    /// Pre-order walk over this statement and all nested statements.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                then_branch.walk(f);
                if let Some(e) = else_branch {
                    e.walk(f);
                }
            }
            StmtKind::Case { arms, default, .. } => {
                for arm in arms {
                    arm.body.walk(f);
                }
                if let Some(d) = default {
                    d.walk(f);
                }
            }
            StmtKind::Block { stmts, .. } => stmts.iter().for_each(|s| s.walk(f)),
            StmtKind::Assign { .. } => {}
        }
    }

    /// Names assigned anywhere inside this statement, in first-assignment order.
    pub fn assigned_signals(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.walk(&mut |s| {
            if let StmtKind::Assign { lhs, .. } = &s.kind {
                if !out.contains(&lhs.name) {
                    out.push(lhs.name.clone());
                }
            }
        });
        out
    }

    pub fn is_empty_block(&self) -> bool {
        matches!(&self.kind, StmtKind::Block { stmts, .. } if stmts.iter().all(Stmt::is_empty_block))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Base {
    Bin,
    Oct,
    Dec,
    Hex,
}

/// Integer literal. `wildcard` marks `?`/`z` bits (only meaningful in
/// `casez` labels).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Literal {
    pub width: Option<u32>,
    pub base: Base,
    pub value: u64,
    pub wildcard: u64,
}

impl Literal {
    pub fn sized(width: u32, value: u64) -> Self {
        Literal {
            width: Some(width),
            base: Base::Dec,
            value: value & mask(width),
            wildcard: 0,
        }
    }

    pub fn bit(value: bool) -> Self {
        Literal {
            width: Some(1),
            base: Base::Bin,
            value: value as u64,
            wildcard: 0,
        }
    }

    /// Width used for evaluation; unsized literals are 32 bits wide.
    pub fn eval_width(&self) -> u32 {
        self.width.unwrap_or(32)
    }
}

pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UnaryOp {
    LogNot,
    BitNot,
    Neg,
    Plus,
    RedAnd,
    RedOr,
    RedXor,
    RedNand,
    RedNor,
    RedXnor,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::LogNot => "!",
            UnaryOp::BitNot => "~",
            UnaryOp::Neg => "-",
            UnaryOp::Plus => "+",
            UnaryOp::RedAnd => "&",
            UnaryOp::RedOr => "|",
            UnaryOp::RedXor => "^",
            UnaryOp::RedNand => "~&",
            UnaryOp::RedNor => "~|",
            UnaryOp::RedXnor => "~^",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryOp {
    Mul,
    Div,
    Mod,
    Add,
    Sub,
    Shl,
    Shr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    CaseEq,
    CaseNe,
    WildEq,
    WildNe,
    BitAnd,
    BitXor,
    BitXnor,
    BitOr,
    LogAnd,
    LogOr,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        use BinaryOp::*;
        match self {
            Mul => "*",
            Div => "/",
            Mod => "%",
            Add => "+",
            Sub => "-",
            Shl => "<<",
            Shr => ">>",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            CaseEq => "===",
            CaseNe => "!==",
            WildEq => "==?",
            WildNe => "!=?",
            BitAnd => "&",
            BitXor => "^",
            BitXnor => "~^",
            BitOr => "|",
            LogAnd => "&&",
            LogOr => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        use BinaryOp::*;
        match self {
            LogOr => 1,
            LogAnd => 2,
            BitOr => 3,
            BitXor | BitXnor => 4,
            BitAnd => 5,
            Eq | Ne | CaseEq | CaseNe | WildEq | WildNe => 6,
            Lt | Le | Gt | Ge => 7,
            Shl | Shr => 8,
            Add | Sub => 9,
            Mul | Div | Mod => 10,
        }
    }

    pub fn from_symbol(sym: &str) -> Option<BinaryOp> {
        use BinaryOp::*;
        Some(match sym {
            "*" => Mul,
            "/" => Div,
            "%" => Mod,
            "+" => Add,
            "-" => Sub,
            "<<" => Shl,
            ">>" => Shr,
            "<" => Lt,
            "<=" => Le,
            ">" => Gt,
            ">=" => Ge,
            "==" => Eq,
            "!=" => Ne,
            "===" => CaseEq,
            "!==" => CaseNe,
            "==?" => WildEq,
            "!=?" => WildNe,
            "&" => BitAnd,
            "^" => BitXor,
            "~^" | "^~" => BitXnor,
            "|" => BitOr,
            "&&" => LogAnd,
            "||" => LogOr,
            _ => return None,
        })
    }

    pub fn is_relational(self) -> bool {
        self.precedence() == 6 || self.precedence() == 7
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "expr", content = "of", rename_all = "snake_case")]
pub enum ExprKind {
    Ident(String),
    Number(Literal),
    Unary {
        op: UnaryOp,
        arg: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Ternary {
        cond: Box<Expr>,
        then_expr: Box<Expr>,
        else_expr: Box<Expr>,
    },
    Concat(Vec<Expr>),
    Replicate {
        count: Box<Expr>,
        items: Vec<Expr>,
    },
    Index {
        base: Box<Expr>,
        index: Box<Expr>,
    },
    Slice {
        base: Box<Expr>,
        msb: Box<Expr>,
        lsb: Box<Expr>,
    },
    /// Size cast `N'(expr)`.
    Cast {
        width: u32,
        arg: Box<Expr>,
    },
    /// System function call such as `$past(x)`; only valid in properties.
    SysCall {
        name: String,
        args: Vec<Expr>,
    },
}

impl Expr {
    pub fn new(kind: ExprKind, span: SourceSpan) -> Self {
        Expr { kind, span }
    }

    pub fn ident(name: &str, span: SourceSpan) -> Self {
        Expr::new(ExprKind::Ident(name.to_string()), span)
    }

    pub fn literal(lit: Literal, span: SourceSpan) -> Self {
        Expr::new(ExprKind::Number(lit), span)
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Self {
        let span = arg.span;
        Expr::new(
            ExprKind::Unary {
                op,
                arg: Box::new(arg),
            },
            span,
        )
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        let span = lhs.span.to(rhs.span);
        Expr::new(
            ExprKind::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            span,
        )
    }

    /// Logical negation, folding double negation and constant truth.
    pub fn negate(self) -> Expr {
        match self.kind {
            ExprKind::Unary {
                op: UnaryOp::LogNot,
                arg,
            } => *arg,
            ExprKind::Number(lit) if lit.wildcard == 0 && lit.width == Some(1) => {
                Expr::literal(Literal::bit(lit.value == 0), self.span)
            }
            _ => Expr::unary(UnaryOp::LogNot, self),
        }
    }

    pub fn is_true_literal(&self) -> bool {
        matches!(&self.kind, ExprKind::Number(l) if l.wildcard == 0 && l.value != 0)
    }

    pub fn is_false_literal(&self) -> bool {
        matches!(&self.kind, ExprKind::Number(l) if l.wildcard == 0 && l.value == 0)
    }

    /// Conjunction of `terms`; the empty conjunction is `1'b1`.
    pub fn conjunction(terms: Vec<Expr>, span: SourceSpan) -> Expr {
        let mut iter = terms.into_iter().filter(|t| !t.is_true_literal());
        match iter.next() {
            None => Expr::literal(Literal::bit(true), span),
            Some(first) => iter.fold(first, |acc, t| Expr::binary(BinaryOp::LogAnd, acc, t)),
        }
    }

    /// Disjunction of `terms`; the empty disjunction is `1'b0`.
    pub fn disjunction(terms: Vec<Expr>, span: SourceSpan) -> Expr {
        if terms.iter().any(Expr::is_true_literal) {
            return Expr::literal(Literal::bit(true), span);
        }
        let mut iter = terms.into_iter().filter(|t| !t.is_false_literal());
        match iter.next() {
            None => Expr::literal(Literal::bit(false), span),
            Some(first) => iter.fold(first, |acc, t| Expr::binary(BinaryOp::LogOr, acc, t)),
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Ident(_) | ExprKind::Number(_) => vec![],
            ExprKind::Unary { arg, .. } | ExprKind::Cast { arg, .. } => vec![arg],
            ExprKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            ExprKind::Ternary {
                cond,
                then_expr,
                else_expr,
            } => vec![cond, then_expr, else_expr],
            ExprKind::Concat(items) => items.iter().collect(),
            ExprKind::Replicate { count, items } => {
                std::iter::once(&**count).chain(items.iter()).collect()
            }
            ExprKind::Index { base, index } => vec![base, index],
            ExprKind::Slice { base, msb, lsb } => vec![base, msb, lsb],
            ExprKind::SysCall { args, .. } => args.iter().collect(),
        }
    }

    /// Identifiers referenced by this expression, in first-occurrence order.
    pub fn identifiers(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_identifiers(&mut out);
        out
    }

    fn collect_identifiers(&self, out: &mut Vec<String>) {
        if let ExprKind::Ident(name) = &self.kind {
            if !out.contains(name) {
                out.push(name.clone());
            }
        }
        for c in self.children() {
            c.collect_identifiers(out);
        }
    }

    /// Visit every node, parents before children.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }
}
