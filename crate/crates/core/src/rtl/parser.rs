//! Recursive-descent parser for the synthesizable subset.

use regex::Regex;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{consteval, RtlError};

/// Parser knobs.
#[derive(Clone, Debug)]
pub struct ParseOptions {
    /// Signals whose names match are treated as resets when they guard the
    /// top of a clocked block.
    pub reset_pattern: Regex,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            reset_pattern: Regex::new(DEFAULT_RESET_PATTERN).expect("valid default pattern"),
        }
    }
}

pub const DEFAULT_RESET_PATTERN: &str = "^(rst|reset)";

/// Parse every module in `text`.
pub fn parse_source(text: &str, origin: &str) -> Result<Vec<DesignUnit>, RtlError> {
    parse_source_with(text, origin, &ParseOptions::default())
}

pub fn parse_source_with(
    text: &str,
    origin: &str,
    opts: &ParseOptions,
) -> Result<Vec<DesignUnit>, RtlError> {
    let tokens = lex(text, origin)?;
    let mut p = TokenParser::new(tokens, origin);
    let mut units = Vec::new();
    while !p.at_eof() {
        let mut unit = p.parse_module()?;
        finish_unit(&mut unit, origin, opts)?;
        units.push(unit);
    }
    Ok(units)
}

/// Parse a standalone expression; trailing input is an error.
pub fn parse_expr_text(text: &str, origin: &str) -> Result<Expr, RtlError> {
    let mut p = TokenParser::new(lex(text, origin)?, origin);
    let e = p.parse_expr()?;
    if !p.at_eof() {
        return Err(p.error(&["end of expression"]));
    }
    Ok(e)
}

const UNSUPPORTED_TOP: &[&str] = &[
    "interface", "class", "package", "program", "primitive", "config", "checker", "macromodule",
];

const UNSUPPORTED_ITEMS: &[&str] = &[
    "initial", "final", "always_latch", "generate", "genvar", "function", "task", "integer",
    "real", "time", "typedef", "enum", "struct", "specify", "defparam", "assert", "assume",
    "cover", "property", "sequence", "bind", "interface", "class", "modport", "import", "int",
    "bit", "byte", "for", "supply0", "supply1", "tri",
];

const UNSUPPORTED_STMTS: &[&str] = &[
    "for", "while", "repeat", "forever", "casex", "unique", "priority", "fork", "wait",
    "disable", "return", "assert", "assume", "cover", "do", "foreach",
];

/// Cursor over a token vector with the expression grammar.
pub(crate) struct TokenParser {
    toks: Vec<Token>,
    pos: usize,
    origin: String,
}

impl TokenParser {
    pub(crate) fn new(toks: Vec<Token>, origin: &str) -> Self {
        TokenParser {
            toks,
            pos: 0,
            origin: origin.to_string(),
        }
    }

    pub(crate) fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    pub(crate) fn peek_at(&self, off: usize) -> &Token {
        &self.toks[(self.pos + off).min(self.toks.len() - 1)]
    }

    pub(crate) fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    /// Span of the most recently consumed token.
    pub(crate) fn prev_span(&self) -> SourceSpan {
        self.toks[self.pos.saturating_sub(1)].span
    }

    pub(crate) fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek().tok, Tok::Sym(x) if x == s)
    }

    pub(crate) fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(x) if x == kw)
    }

    pub(crate) fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn error(&self, expected: &[&str]) -> RtlError {
        let t = self.peek();
        RtlError::Syntax {
            origin: self.origin.clone(),
            span: t.span,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.describe(),
        }
    }

    pub(crate) fn unsupported(&self, construct: &str) -> RtlError {
        RtlError::UnsupportedConstruct {
            origin: self.origin.clone(),
            span: self.peek().span,
            construct: construct.to_string(),
        }
    }

    pub(crate) fn expect_sym(&mut self, s: &str) -> Result<SourceSpan, RtlError> {
        if self.is_sym(s) {
            Ok(self.bump().span)
        } else {
            Err(self.error(&[s]))
        }
    }

    pub(crate) fn expect_kw(&mut self, kw: &str) -> Result<SourceSpan, RtlError> {
        if self.is_kw(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.error(&[kw]))
        }
    }

    pub(crate) fn expect_ident(&mut self) -> Result<(String, SourceSpan), RtlError> {
        match &self.peek().tok {
            Tok::Ident(name) if !is_reserved(name) => {
                let name = name.clone();
                Ok((name, self.bump().span))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    // ---- expressions ----

    pub(crate) fn parse_expr(&mut self) -> Result<Expr, RtlError> {
        let cond = self.parse_binary(1)?;
        if self.eat_sym("?") {
            let then_expr = self.parse_expr()?;
            self.expect_sym(":")?;
            let else_expr = self.parse_expr()?;
            let span = cond.span.to(else_expr.span);
            return Ok(Expr::new(
                ExprKind::Ternary {
                    cond: Box::new(cond),
                    then_expr: Box::new(then_expr),
                    else_expr: Box::new(else_expr),
                },
                span,
            ));
        }
        Ok(cond)
    }

    fn peek_binary(&self) -> Option<BinaryOp> {
        match self.peek().tok {
            Tok::Sym(s) => BinaryOp::from_symbol(s),
            _ => None,
        }
    }

    fn parse_binary(&mut self, min_prec: u8) -> Result<Expr, RtlError> {
        let mut lhs = self.parse_unary()?;
        while let Some(op) = self.peek_binary() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.parse_binary(prec + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, RtlError> {
        let op = match self.peek().tok {
            Tok::Sym("!") => Some(UnaryOp::LogNot),
            Tok::Sym("~") => Some(UnaryOp::BitNot),
            Tok::Sym("-") => Some(UnaryOp::Neg),
            Tok::Sym("+") => Some(UnaryOp::Plus),
            Tok::Sym("&") => Some(UnaryOp::RedAnd),
            Tok::Sym("|") => Some(UnaryOp::RedOr),
            Tok::Sym("^") => Some(UnaryOp::RedXor),
            Tok::Sym("~&") => Some(UnaryOp::RedNand),
            Tok::Sym("~|") => Some(UnaryOp::RedNor),
            Tok::Sym("~^") | Tok::Sym("^~") => Some(UnaryOp::RedXnor),
            _ => None,
        };
        match op {
            Some(op) => {
                let start = self.bump().span;
                let arg = self.parse_unary()?;
                let span = start.to(arg.span);
                Ok(Expr::new(
                    ExprKind::Unary {
                        op,
                        arg: Box::new(arg),
                    },
                    span,
                ))
            }
            None => self.parse_postfix(),
        }
    }

    fn parse_postfix(&mut self) -> Result<Expr, RtlError> {
        let base = self.parse_primary()?;
        if !matches!(base.kind, ExprKind::Ident(_)) || !self.is_sym("[") {
            return Ok(base);
        }
        self.bump();
        let first = self.parse_expr()?;
        if self.eat_sym(":") {
            let lsb = self.parse_expr()?;
            let end = self.expect_sym("]")?;
            let span = base.span.to(end);
            return Ok(Expr::new(
                ExprKind::Slice {
                    base: Box::new(base),
                    msb: Box::new(first),
                    lsb: Box::new(lsb),
                },
                span,
            ));
        }
        let end = self.expect_sym("]")?;
        if self.is_sym("[") {
            return Err(self.unsupported("multi-dimensional select"));
        }
        let span = base.span.to(end);
        Ok(Expr::new(
            ExprKind::Index {
                base: Box::new(base),
                index: Box::new(first),
            },
            span,
        ))
    }

    fn parse_primary(&mut self) -> Result<Expr, RtlError> {
        let tok = self.peek().clone();
        match tok.tok {
            Tok::Number(lit) => {
                self.bump();
                if self.is_sym("'") && matches!(self.peek_at(1).tok, Tok::Sym("(")) {
                    let width = match lit {
                        Literal {
                            width: None,
                            base: Base::Dec,
                            value,
                            ..
                        } if (1..=64).contains(&value) => value as u32,
                        _ => return Err(self.unsupported("size cast width")),
                    };
                    self.bump();
                    self.bump();
                    let arg = self.parse_expr()?;
                    let end = self.expect_sym(")")?;
                    return Ok(Expr::new(
                        ExprKind::Cast {
                            width,
                            arg: Box::new(arg),
                        },
                        tok.span.to(end),
                    ));
                }
                Ok(Expr::literal(lit, tok.span))
            }
            Tok::Ident(ref name) if !is_reserved(name) => {
                self.bump();
                Ok(Expr::ident(name, tok.span))
            }
            Tok::SysIdent(ref name) => {
                self.bump();
                let mut args = Vec::new();
                let mut end = tok.span;
                if self.eat_sym("(") {
                    if !self.is_sym(")") {
                        loop {
                            args.push(self.parse_expr()?);
                            if !self.eat_sym(",") {
                                break;
                            }
                        }
                    }
                    end = self.expect_sym(")")?;
                }
                Ok(Expr::new(
                    ExprKind::SysCall {
                        name: name.clone(),
                        args,
                    },
                    tok.span.to(end),
                ))
            }
            Tok::Sym("(") => {
                self.bump();
                let mut inner = self.parse_expr()?;
                let end = self.expect_sym(")")?;
                // Parentheses are not kept in the tree; widen the span so that
                // it covers the source text the expression came from.
                inner.span = tok.span.to(end);
                Ok(inner)
            }
            Tok::Sym("{") => {
                self.bump();
                let first = self.parse_expr()?;
                if self.is_sym("{") {
                    // replication {N{...}}
                    self.bump();
                    let mut items = vec![self.parse_expr()?];
                    while self.eat_sym(",") {
                        items.push(self.parse_expr()?);
                    }
                    self.expect_sym("}")?;
                    let end = self.expect_sym("}")?;
                    return Ok(Expr::new(
                        ExprKind::Replicate {
                            count: Box::new(first),
                            items,
                        },
                        tok.span.to(end),
                    ));
                }
                let mut items = vec![first];
                while self.eat_sym(",") {
                    items.push(self.parse_expr()?);
                }
                let end = self.expect_sym("}")?;
                Ok(Expr::new(ExprKind::Concat(items), tok.span.to(end)))
            }
            Tok::Macro(_) => Err(self.unsupported("macro usage")),
            _ => Err(self.error(&["expression"])),
        }
    }

    // ---- modules ----

    fn parse_module(&mut self) -> Result<DesignUnit, RtlError> {
        if let Tok::Ident(kw) = &self.peek().tok {
            if UNSUPPORTED_TOP.contains(&kw.as_str()) {
                return Err(self.unsupported(&kw.clone()));
            }
        }
        if let Tok::Macro(m) = &self.peek().tok {
            return Err(self.unsupported(&format!("`{m}")));
        }
        let start = self.expect_kw("module")?;
        let (name, _) = self.expect_ident()?;
        let mut unit = DesignUnit {
            name,
            ports: Vec::new(),
            params: Vec::new(),
            nets: Vec::new(),
            items: Vec::new(),
            span: start,
        };
        if self.eat_sym("#") {
            self.expect_sym("(")?;
            loop {
                self.eat_kw("parameter");
                self.parse_param_assignment(&mut unit, false)?;
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
        }
        let mut non_ansi: Vec<(String, SourceSpan)> = Vec::new();
        if self.eat_sym("(") {
            if !self.is_sym(")") {
                if self.peek_direction().is_some() {
                    self.parse_ansi_ports(&mut unit)?;
                } else {
                    loop {
                        non_ansi.push(self.expect_ident()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
            }
            self.expect_sym(")")?;
        }
        self.expect_sym(";")?;
        while !self.is_kw("endmodule") {
            if self.at_eof() {
                return Err(self.error(&["endmodule"]));
            }
            self.parse_item(&mut unit)?;
        }
        let end = self.bump().span;
        unit.span = start.to(end);
        // Non-ANSI ports must be declared in the body.
        for (name, span) in non_ansi {
            if unit.port(&name).is_none() {
                return Err(RtlError::UndeclaredSignal { name, span });
            }
        }
        Ok(unit)
    }

    fn peek_direction(&self) -> Option<Direction> {
        match &self.peek().tok {
            Tok::Ident(s) if s == "input" => Some(Direction::Input),
            Tok::Ident(s) if s == "output" => Some(Direction::Output),
            Tok::Ident(s) if s == "inout" => Some(Direction::Inout),
            _ => None,
        }
    }

    fn parse_net_kind(&mut self) -> Result<Option<NetKind>, RtlError> {
        let kind = if self.eat_kw("wire") {
            Some(NetKind::Wire)
        } else if self.eat_kw("reg") {
            Some(NetKind::Reg)
        } else if self.eat_kw("logic") {
            Some(NetKind::Logic)
        } else {
            None
        };
        if self.is_kw("signed") {
            return Err(self.unsupported("signed"));
        }
        Ok(kind)
    }

    pub(crate) fn parse_range(&mut self) -> Result<Option<Range>, RtlError> {
        if !self.eat_sym("[") {
            return Ok(None);
        }
        let msb = self.parse_expr()?;
        self.expect_sym(":")?;
        let lsb = self.parse_expr()?;
        self.expect_sym("]")?;
        Ok(Some(Range { msb, lsb }))
    }

    fn parse_ansi_ports(&mut self, unit: &mut DesignUnit) -> Result<(), RtlError> {
        let mut direction = Direction::Input;
        let mut kind = NetKind::Implicit;
        let mut range = None;
        loop {
            let start = self.peek().span;
            if let Some(d) = self.peek_direction() {
                self.bump();
                direction = d;
                kind = self.parse_net_kind()?.unwrap_or(NetKind::Implicit);
                range = self.parse_range()?;
            }
            let (name, span) = self.expect_ident()?;
            if self.is_sym("[") {
                return Err(self.unsupported("unpacked array"));
            }
            if unit.port(&name).is_some() {
                return Err(RtlError::DuplicateDeclaration { name, span });
            }
            unit.ports.push(PortDecl {
                name,
                direction,
                kind,
                range: range.clone(),
                width: 0,
                lsb: 0,
                span: start.to(span),
            });
            if !self.eat_sym(",") {
                return Ok(());
            }
        }
    }

    fn parse_param_assignment(&mut self, unit: &mut DesignUnit, local: bool) -> Result<(), RtlError> {
        let start = self.peek().span;
        if self.is_kw("signed") || self.is_kw("integer") {
            return Err(self.unsupported("typed parameter"));
        }
        let range = self.parse_range()?;
        let (name, _) = self.expect_ident()?;
        self.expect_sym("=")?;
        let expr = self.parse_expr()?;
        if unit.param(&name).is_some() {
            return Err(RtlError::DuplicateDeclaration { name, span: start });
        }
        let span = start.to(expr.span);
        unit.params.push(ParamDecl {
            name,
            local,
            range,
            expr,
            value: 0,
            width: 0,
            span,
        });
        Ok(())
    }

    fn parse_item(&mut self, unit: &mut DesignUnit) -> Result<(), RtlError> {
        let kw = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            Tok::Macro(m) => return Err(self.unsupported(&format!("`{m}"))),
            Tok::Sym(";") => {
                self.bump();
                return Ok(());
            }
            _ => return Err(self.error(&["module item"])),
        };
        match kw.as_str() {
            "input" | "output" | "inout" => self.parse_port_decl(unit),
            "wire" | "reg" | "logic" => self.parse_net_decl(unit),
            "parameter" | "localparam" => {
                self.bump();
                loop {
                    self.parse_param_assignment(unit, kw == "localparam")?;
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(";")?;
                Ok(())
            }
            "assign" => {
                self.bump();
                loop {
                    let lhs = self.parse_lvalue()?;
                    self.expect_sym("=")?;
                    let rhs = self.parse_expr()?;
                    let span = lhs.span.to(rhs.span);
                    unit.items.push(Item::Assign(ContinuousAssign { lhs, rhs, span }));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(";")?;
                Ok(())
            }
            "always" | "always_ff" | "always_comb" => {
                let block = self.parse_always()?;
                unit.items.push(Item::Always(block));
                Ok(())
            }
            other if UNSUPPORTED_ITEMS.contains(&other) => Err(self.unsupported(other)),
            _ if matches!(self.peek_at(1).tok, Tok::Ident(_) | Tok::Sym("#")) => {
                Err(self.unsupported("module instantiation"))
            }
            _ => Err(self.error(&["module item"])),
        }
    }

    fn parse_port_decl(&mut self, unit: &mut DesignUnit) -> Result<(), RtlError> {
        let start = self.peek().span;
        let direction = self.peek_direction().expect("caller checked");
        self.bump();
        let kind = self.parse_net_kind()?.unwrap_or(NetKind::Implicit);
        let range = self.parse_range()?;
        loop {
            let (name, span) = self.expect_ident()?;
            if unit.port(&name).is_some() {
                return Err(RtlError::DuplicateDeclaration { name, span });
            }
            unit.ports.push(PortDecl {
                name,
                direction,
                kind,
                range: range.clone(),
                width: 0,
                lsb: 0,
                span: start.to(span),
            });
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(";")?;
        Ok(())
    }

    fn parse_net_decl(&mut self, unit: &mut DesignUnit) -> Result<(), RtlError> {
        let start = self.peek().span;
        let kind = self.parse_net_kind()?.expect("caller checked");
        let range = self.parse_range()?;
        loop {
            let (name, span) = self.expect_ident()?;
            if self.is_sym("[") {
                return Err(self.unsupported("unpacked array"));
            }
            if self.is_sym("=") {
                if kind != NetKind::Wire {
                    return Err(self.unsupported("variable initializer"));
                }
                self.bump();
                let rhs = self.parse_expr()?;
                let lhs = LValue {
                    name: name.clone(),
                    select: None,
                    span,
                };
                let aspan = span.to(rhs.span);
                unit.items.push(Item::Assign(ContinuousAssign {
                    lhs,
                    rhs,
                    span: aspan,
                }));
            }
            // A body declaration of a non-ANSI port only refines its kind.
            if let Some(port) = unit.ports.iter_mut().find(|p| p.name == name) {
                port.kind = kind;
                if port.range.is_none() {
                    port.range = range.clone();
                }
            } else if unit.nets.iter().any(|n| n.name == name) {
                return Err(RtlError::DuplicateDeclaration { name, span });
            } else {
                unit.nets.push(NetDecl {
                    name,
                    kind,
                    range: range.clone(),
                    width: 0,
                    lsb: 0,
                    span: start.to(span),
                });
            }
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(";")?;
        Ok(())
    }

    fn parse_lvalue(&mut self) -> Result<LValue, RtlError> {
        if self.is_sym("{") {
            return Err(self.unsupported("concatenation on left-hand side"));
        }
        let (name, span) = self.expect_ident()?;
        let mut end = span;
        let select = if self.eat_sym("[") {
            let first = self.parse_expr()?;
            let sel = if self.eat_sym(":") {
                let lsb = self.parse_expr()?;
                Select::Part { msb: first, lsb }
            } else {
                Select::Bit(first)
            };
            end = self.expect_sym("]")?;
            Some(sel)
        } else {
            None
        };
        Ok(LValue {
            name,
            select,
            span: span.to(end),
        })
    }

    fn parse_always(&mut self) -> Result<ProcBlock, RtlError> {
        let kw = self.bump();
        let timing = match &kw.tok {
            Tok::Ident(s) if s == "always_ff" => TimingClass::AlwaysFf,
            Tok::Ident(s) if s == "always_comb" => TimingClass::AlwaysComb,
            _ => TimingClass::AlwaysPlain,
        };
        let sensitivity = if timing == TimingClass::AlwaysComb {
            Sensitivity::Implicit
        } else {
            self.expect_sym("@")?;
            if self.eat_sym("*") {
                Sensitivity::Star
            } else {
                self.expect_sym("(")?;
                let s = if self.eat_sym("*") {
                    Sensitivity::Star
                } else {
                    let mut events = Vec::new();
                    loop {
                        let start = self.peek().span;
                        let edge = if self.eat_kw("posedge") {
                            Some(Edge::Posedge)
                        } else if self.eat_kw("negedge") {
                            Some(Edge::Negedge)
                        } else {
                            None
                        };
                        let (signal, span) = self.expect_ident()?;
                        events.push(EventTerm {
                            edge,
                            signal,
                            span: start.to(span),
                        });
                        if !(self.eat_kw("or") || self.eat_sym(",")) {
                            break;
                        }
                    }
                    Sensitivity::List(events)
                };
                self.expect_sym(")")?;
                s
            }
        };
        if timing == TimingClass::AlwaysFf
            && !matches!(&sensitivity, Sensitivity::List(ev) if ev.iter().all(|e| e.edge.is_some()))
        {
            return Err(RtlError::UnsupportedConstruct {
                origin: self.origin.clone(),
                span: kw.span,
                construct: "always_ff without edge-only sensitivity".into(),
            });
        }
        if let Sensitivity::List(ev) = &sensitivity {
            let edges = ev.iter().filter(|e| e.edge.is_some()).count();
            if edges != 0 && edges != ev.len() {
                return Err(RtlError::UnsupportedConstruct {
                    origin: self.origin.clone(),
                    span: kw.span,
                    construct: "mixed edge and level sensitivity".into(),
                });
            }
        }
        let body = self.parse_stmt()?;
        let span = kw.span.to(body.span);
        Ok(ProcBlock {
            timing,
            sensitivity,
            clock: None,
            reset: None,
            body,
            span,
        })
    }

    fn parse_stmt(&mut self) -> Result<Stmt, RtlError> {
        let start = self.peek().span;
        let kw = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            Tok::Sym(";") => {
                let span = self.bump().span;
                return Ok(Stmt {
                    kind: StmtKind::Block {
                        label: None,
                        stmts: vec![],
                    },
                    span,
                });
            }
            Tok::SysIdent(s) => return Err(self.unsupported(&format!("${s}"))),
            Tok::Macro(m) => return Err(self.unsupported(&format!("`{m}"))),
            Tok::Sym("{") => return Err(self.unsupported("concatenation on left-hand side")),
            _ => return Err(self.error(&["statement"])),
        };
        match kw.as_str() {
            "begin" => {
                self.bump();
                let label = if self.eat_sym(":") {
                    Some(self.expect_ident()?.0)
                } else {
                    None
                };
                let mut stmts = Vec::new();
                while !self.is_kw("end") {
                    if self.at_eof() {
                        return Err(self.error(&["end"]));
                    }
                    stmts.push(self.parse_stmt()?);
                }
                let mut end = self.bump().span;
                if self.eat_sym(":") {
                    end = self.expect_ident()?.1;
                }
                Ok(Stmt {
                    kind: StmtKind::Block { label, stmts },
                    span: start.to(end),
                })
            }
            "if" => {
                self.bump();
                self.expect_sym("(")?;
                let cond = self.parse_expr()?;
                self.expect_sym(")")?;
                let then_branch = self.parse_stmt()?;
                let mut span = start.to(then_branch.span);
                let else_branch = if self.eat_kw("else") {
                    let e = self.parse_stmt()?;
                    span = span.to(e.span);
                    Some(Box::new(e))
                } else {
                    None
                };
                Ok(Stmt {
                    kind: StmtKind::If {
                        cond,
                        then_branch: Box::new(then_branch),
                        else_branch,
                    },
                    span,
                })
            }
            "case" | "casez" => {
                self.bump();
                let kind = if kw == "case" {
                    CaseKind::Case
                } else {
                    CaseKind::Casez
                };
                self.expect_sym("(")?;
                let subject = self.parse_expr()?;
                self.expect_sym(")")?;
                let mut arms = Vec::new();
                let mut default = None;
                while !self.is_kw("endcase") {
                    if self.at_eof() {
                        return Err(self.error(&["endcase"]));
                    }
                    if self.is_kw("default") {
                        let dspan = self.bump().span;
                        self.eat_sym(":");
                        let body = self.parse_stmt()?;
                        if default.is_some() {
                            return Err(RtlError::Syntax {
                                origin: self.origin.clone(),
                                span: dspan,
                                expected: vec!["case item".into()],
                                found: "second `default`".into(),
                            });
                        }
                        default = Some(Box::new(body));
                        continue;
                    }
                    let arm_start = self.peek().span;
                    let mut labels = vec![self.parse_expr()?];
                    while self.eat_sym(",") {
                        labels.push(self.parse_expr()?);
                    }
                    self.expect_sym(":")?;
                    let body = self.parse_stmt()?;
                    let span = arm_start.to(body.span);
                    arms.push(CaseArm { labels, body, span });
                }
                let end = self.bump().span;
                Ok(Stmt {
                    kind: StmtKind::Case {
                        kind,
                        subject,
                        arms,
                        default,
                    },
                    span: start.to(end),
                })
            }
            other if UNSUPPORTED_STMTS.contains(&other) => Err(self.unsupported(other)),
            _ => {
                let lhs = self.parse_lvalue()?;
                let nonblocking = if self.eat_sym("<=") {
                    true
                } else if self.eat_sym("=") {
                    false
                } else {
                    return Err(self.error(&["<=", "="]));
                };
                if self.is_sym("#") || self.is_sym("@") {
                    return Err(self.unsupported("intra-assignment delay"));
                }
                let rhs = self.parse_expr()?;
                self.expect_sym(";")?;
                let span = lhs.span.to(rhs.span);
                Ok(Stmt {
                    kind: StmtKind::Assign {
                        lhs,
                        rhs,
                        nonblocking,
                    },
                    span,
                })
            }
        }
    }
}

fn is_reserved(name: &str) -> bool {
    matches!(
        name,
        "module" | "endmodule" | "begin" | "end" | "if" | "else" | "case" | "casez" | "casex"
            | "endcase" | "default" | "assign" | "always" | "always_ff" | "always_comb"
            | "input" | "output" | "inout" | "wire" | "reg" | "logic" | "parameter"
            | "localparam" | "posedge" | "negedge" | "or" | "property" | "endproperty"
            | "assert" | "cover" | "assume" | "disable" | "iff"
    )
}

/// Post-parse resolution: parameter values, declared widths, clock and reset
/// classification of process blocks, and literal sanity checks.
fn finish_unit(unit: &mut DesignUnit, origin: &str, opts: &ParseOptions) -> Result<(), RtlError> {
    let mut known: Vec<(String, u64, u32)> = Vec::new();
    for i in 0..unit.params.len() {
        let (value, self_width) = consteval::eval_const(&unit.params[i].expr, &known, origin)?;
        let width = match &unit.params[i].range {
            Some(r) => range_width(r, &known, origin)?.0,
            None => self_width,
        };
        let p = &mut unit.params[i];
        p.value = value & mask(width);
        p.width = width;
        known.push((p.name.clone(), p.value, width));
    }
    for port in &mut unit.ports {
        if let Some(r) = &port.range {
            (port.width, port.lsb) = range_width(r, &known, origin)?;
        } else {
            port.width = 1;
        }
    }
    for net in &mut unit.nets {
        if let Some(r) = &net.range {
            (net.width, net.lsb) = range_width(r, &known, origin)?;
        } else {
            net.width = 1;
        }
    }
    for item in &mut unit.items {
        if let Item::Always(block) = item {
            classify_block(block, opts);
            check_wildcards(&block.body, origin)?;
        }
    }
    Ok(())
}

fn range_width(r: &Range, known: &[(String, u64, u32)], origin: &str) -> Result<(u32, u32), RtlError> {
    let (msb, _) = consteval::eval_const(&r.msb, known, origin)?;
    let (lsb, _) = consteval::eval_const(&r.lsb, known, origin)?;
    if msb < lsb {
        return Err(RtlError::UnsupportedConstruct {
            origin: origin.to_string(),
            span: r.msb.span.to(r.lsb.span),
            construct: "ascending range".into(),
        });
    }
    let width = msb - lsb + 1;
    if width > 64 {
        return Err(RtlError::UnsupportedConstruct {
            origin: origin.to_string(),
            span: r.msb.span.to(r.lsb.span),
            construct: "vector wider than 64 bits".into(),
        });
    }
    Ok((width as u32, lsb as u32))
}

fn classify_block(block: &mut ProcBlock, opts: &ParseOptions) {
    let edges: Vec<&EventTerm> = match &block.sensitivity {
        Sensitivity::List(ev) => ev.iter().filter(|e| e.edge.is_some()).collect(),
        _ => Vec::new(),
    };
    if edges.is_empty() {
        return;
    }
    let reset = top_level_reset(&block.body, opts);
    let clock_term = edges
        .iter()
        .find(|e| reset.as_ref().map(|r| r.0 != e.signal).unwrap_or(true))
        .or(edges.first())
        .expect("non-empty");
    block.clock = Some(ClockSpec {
        signal: clock_term.signal.clone(),
        edge: clock_term.edge.expect("edge term"),
    });
    if let Some((signal, active)) = reset {
        let kind = if edges.iter().any(|e| e.signal == signal) {
            ResetKind::Async
        } else {
            ResetKind::Sync
        };
        block.reset = Some(ResetSpec {
            signal,
            active,
            kind,
        });
    }
}

/// The first statement of the block body (looking through `begin`) is an `if`
/// whose guard tests a reset-named signal.
fn top_level_reset(body: &Stmt, opts: &ParseOptions) -> Option<(String, ActiveLevel)> {
    let first = match &body.kind {
        StmtKind::Block { stmts, .. } if stmts.len() == 1 => &stmts[0],
        _ => body,
    };
    match &first.kind {
        StmtKind::If { cond, .. } => reset_guard(cond, &opts.reset_pattern),
        _ => None,
    }
}

/// Recognizes `rst`, `!rst`, `~rst`, `rst == 0/1`, `rst != 0/1` guards.
pub fn reset_guard(cond: &Expr, pattern: &Regex) -> Option<(String, ActiveLevel)> {
    let named = |e: &Expr| match &e.kind {
        ExprKind::Ident(n) if pattern.is_match(n) => Some(n.clone()),
        _ => None,
    };
    match &cond.kind {
        ExprKind::Ident(_) => named(cond).map(|n| (n, ActiveLevel::High)),
        ExprKind::Unary {
            op: UnaryOp::LogNot | UnaryOp::BitNot,
            arg,
        } => named(arg).map(|n| (n, ActiveLevel::Low)),
        ExprKind::Binary { op, lhs, rhs } if matches!(op, BinaryOp::Eq | BinaryOp::Ne) => {
            let n = named(lhs)?;
            let ExprKind::Number(lit) = &rhs.kind else {
                return None;
            };
            let high = (lit.value != 0) == (*op == BinaryOp::Eq);
            Some((n, if high { ActiveLevel::High } else { ActiveLevel::Low }))
        }
        _ => None,
    }
}

fn check_wildcards(stmt: &Stmt, origin: &str) -> Result<(), RtlError> {
    let mut err = None;
    stmt.walk(&mut |s| {
        let mut check = |e: &Expr, allowed: bool| {
            e.visit(&mut |n| {
                if let ExprKind::Number(l) = &n.kind {
                    if l.wildcard != 0 && !allowed && err.is_none() {
                        err = Some(RtlError::UnsupportedConstruct {
                            origin: origin.to_string(),
                            span: n.span,
                            construct: "wildcard literal outside casez label".into(),
                        });
                    }
                }
                if let ExprKind::SysCall { name, .. } = &n.kind {
                    if err.is_none() {
                        err = Some(RtlError::UnsupportedConstruct {
                            origin: origin.to_string(),
                            span: n.span,
                            construct: format!("${name}"),
                        });
                    }
                }
            })
        };
        match &s.kind {
            StmtKind::If { cond, .. } => check(cond, false),
            StmtKind::Case {
                kind,
                subject,
                arms,
                ..
            } => {
                check(subject, false);
                for arm in arms {
                    for l in &arm.labels {
                        let is_literal = matches!(l.kind, ExprKind::Number(_));
                        check(l, *kind == CaseKind::Casez && is_literal);
                    }
                }
            }
            StmtKind::Assign { rhs, .. } => check(rhs, false),
            StmtKind::Block { .. } => {}
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
