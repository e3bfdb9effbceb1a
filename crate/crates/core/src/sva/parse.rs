//! Reader for SVA property files: macros, parameters, wrapper declarations,
//! property blocks, directives and trace comments.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::property::{ImplOp, PropKind, SvaProperty, Trace};
use super::SvaError;
use crate::analyzer::extract_slice;
use crate::rtl::ast::{Edge, Expr, SourceSpan};
use crate::rtl::lexer::{lex, Tok, Token};
use crate::rtl::parser::TokenParser;
use crate::rtl::{eval_constant, RtlError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Macro {
    pub name: String,
    pub body: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub value: u64,
    pub width: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceSignal {
    pub name: String,
    /// Unknown for signals only seen inside properties.
    pub width: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExistingProperty {
    pub name: String,
    /// Canonical body text, see [`normalize_body`].
    pub body: String,
}

/// Inventory of what a property file makes available.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SvaResources {
    pub signals: Vec<ResourceSignal>,
    pub macros: Vec<Macro>,
    pub parameters: Vec<Parameter>,
    pub existing_properties: Vec<ExistingProperty>,
    /// First clocking event written in the file.
    #[serde(default)]
    pub clock_expr: Option<String>,
}

impl SvaResources {
    pub fn signal(&self, name: &str) -> Option<&ResourceSignal> {
        self.signals.iter().find(|s| s.name == name)
    }

    pub fn has_signal(&self, name: &str) -> bool {
        self.signal(name).is_some()
    }

    pub fn parameter(&self, name: &str) -> Option<&Parameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn macro_body(&self, name: &str) -> Option<&str> {
        self.macros.iter().find(|m| m.name == name).map(|m| m.body.as_str())
    }

    /// An identifier a property may legally mention.
    pub fn is_available(&self, name: &str) -> bool {
        self.has_signal(name) || self.parameter(name).is_some() || self.macro_body(name).is_some()
    }

    /// Add a signal or fill in its width; used to bind design signals.
    pub fn add_signal(&mut self, name: &str, width: Option<u32>) {
        match self.signals.iter_mut().find(|s| s.name == name) {
            Some(s) => {
                if s.width.is_none() {
                    s.width = width;
                }
            }
            None => self.signals.push(ResourceSignal {
                name: name.to_string(),
                width,
            }),
        }
    }

    /// A macro whose body is a clocking event, such as `` `define CLK @(posedge clk) ``.
    pub fn clock_macro(&self) -> Option<&Macro> {
        self.macros.iter().find(|m| m.body.trim_start().starts_with('@'))
    }

    pub fn property_names(&self) -> impl Iterator<Item = &str> {
        self.existing_properties.iter().map(|p| p.name.as_str())
    }

    pub fn has_body(&self, body: &str) -> bool {
        self.existing_properties.iter().any(|p| p.body == body)
    }
}

/// Full parse of a property file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParsedSva {
    pub resources: SvaResources,
    /// Properties bound to an assert, cover or assume directive, in file order.
    pub properties: Vec<SvaProperty>,
    /// Byte offset of the wrapper module's `endmodule`, if any.
    pub wrapper_end: Option<usize>,
}

pub fn scan_resources(sva_text: &str) -> Result<SvaResources, SvaError> {
    parse_sva(sva_text).map(|p| p.resources)
}

struct CovLine {
    line: u32,
    file: String,
    span: SourceSpan,
    iteration: u32,
}

fn cov_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\s*//\s*COV\s+(.+):(\d+)\.(\d+)-(\d+)\.(\d+)\s+iter=(\d+)\s*$").unwrap()
    })
}

fn ident_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Za-z_][A-Za-z0-9_$]*").unwrap())
}

fn parse_err(line: u32, message: impl Into<String>) -> SvaError {
    SvaError::Parse {
        line,
        message: message.into(),
    }
}

pub(crate) fn rtl_to_sva(e: RtlError) -> SvaError {
    let line = match &e {
        RtlError::Syntax { span, .. }
        | RtlError::UnsupportedConstruct { span, .. }
        | RtlError::Invalid { span, .. }
        | RtlError::UndeclaredSignal { span, .. }
        | RtlError::DuplicateDeclaration { span, .. } => span.start_line,
        RtlError::Io { .. } => 0,
    };
    parse_err(line, e.to_string())
}

/// Strip `` `define `` lines (keeping line numbers) and collect trace comments.
fn preprocess(text: &str) -> Result<(String, Vec<Macro>, Vec<CovLine>), SvaError> {
    let mut cleaned = String::with_capacity(text.len());
    let mut macros: Vec<Macro> = Vec::new();
    let mut covs = Vec::new();
    let lines: Vec<&str> = text.split('\n').collect();
    let mut i = 0;
    while i < lines.len() {
        let raw = lines[i];
        let line_no = i as u32 + 1;
        let trimmed = raw.trim_start();
        if let Some(c) = cov_regex().captures(raw) {
            let n = |k: usize| c[k].parse::<u32>().map_err(|_| parse_err(line_no, "number out of range"));
            covs.push(CovLine {
                line: line_no,
                file: c[1].trim().to_string(),
                span: SourceSpan::new((n(2)?, n(3)?), (n(4)?, n(5)?)),
                iteration: n(6)?,
            });
        }
        if let Some(rest) = trimmed.strip_prefix("`define") {
            let mut body_lines = vec![rest.to_string()];
            let mut consumed = 1;
            while body_lines.last().is_some_and(|l| l.trim_end().ends_with('\\')) {
                let last = body_lines.pop().unwrap();
                body_lines.push(last.trim_end().trim_end_matches('\\').to_string());
                match lines.get(i + consumed) {
                    Some(next) => body_lines.push(next.to_string()),
                    None => return Err(parse_err(line_no, "unterminated macro continuation")),
                }
                consumed += 1;
            }
            let joined = body_lines.join(" ");
            let joined = joined.trim_start();
            let name = ident_regex()
                .find(joined)
                .ok_or_else(|| parse_err(line_no, "`define without a macro name"))?
                .as_str()
                .to_string();
            let after = &joined[name.len()..];
            if after.starts_with('(') {
                return Err(parse_err(line_no, format!("macro `{name}` with arguments is not supported")));
            }
            let body = strip_line_comment(after).trim().to_string();
            if macros.iter().any(|m| m.name == name) {
                return Err(parse_err(line_no, format!("macro `{name}` defined twice")));
            }
            macros.push(Macro { name, body });
            for _ in 0..consumed {
                cleaned.push('\n');
            }
            i += consumed;
            continue;
        }
        if trimmed.starts_with("`timescale") {
            cleaned.push('\n');
            i += 1;
            continue;
        }
        for d in ["`ifdef", "`ifndef", "`else", "`elsif", "`endif", "`include", "`undef"] {
            if trimmed.starts_with(d) {
                return Err(parse_err(line_no, format!("directive {d} is not supported")));
            }
        }
        cleaned.push_str(raw);
        if i + 1 < lines.len() {
            cleaned.push('\n');
        }
        i += 1;
    }
    Ok((cleaned, macros, covs))
}

fn strip_line_comment(s: &str) -> &str {
    match s.find("//") {
        Some(p) => &s[..p],
        None => s,
    }
}

/// Replace macro usages by their lexed bodies. Expanded tokens carry the
/// span of the usage so source slices still show the macro name.
pub(crate) fn expand_macros(toks: Vec<Token>, macros: &[Macro]) -> Result<Vec<Token>, SvaError> {
    fn go(toks: Vec<Token>, macros: &[Macro], depth: u32, out: &mut Vec<Token>) -> Result<(), SvaError> {
        for t in toks {
            match &t.tok {
                Tok::Macro(name) => {
                    let line = t.span.start_line;
                    let m = macros
                        .iter()
                        .find(|m| &m.name == name)
                        .ok_or_else(|| parse_err(line, format!("undefined macro `{name}`")))?;
                    if depth >= 16 {
                        return Err(parse_err(line, format!("macro `{name}` expands too deeply")));
                    }
                    let mut body = lex(&m.body, &format!("`{name}")).map_err(rtl_to_sva)?;
                    body.pop();
                    for b in &mut body {
                        b.span = t.span;
                    }
                    go(body, macros, depth + 1, out)?;
                }
                _ => out.push(t),
            }
        }
        Ok(())
    }
    let mut out = Vec::with_capacity(toks.len());
    go(toks, macros, 0, &mut out)?;
    Ok(out)
}

/// Parse an expression written in a property, expanding macros.
pub fn parse_property_expr(text: &str, macros: &[Macro]) -> Result<Expr, SvaError> {
    let toks = lex(text, "property").map_err(rtl_to_sva)?;
    let toks = expand_macros(toks, macros)?;
    let mut p = TokenParser::new(toks, "property");
    let e = p.parse_expr().map_err(rtl_to_sva)?;
    if !p.at_eof() {
        return Err(rtl_to_sva(p.error(&["end of expression"])));
    }
    Ok(e)
}

/// Canonical body text: macros expanded, minimal parentheses, single spaces.
pub fn normalize_body(antecedent: &str, op: ImplOp, consequent: &str, macros: &[Macro]) -> Result<String, SvaError> {
    let a = parse_property_expr(antecedent, macros)?;
    let c = parse_property_expr(consequent, macros)?;
    Ok(format!("{a} {op} {c}"))
}

pub fn normalized_body(p: &SvaProperty, macros: &[Macro]) -> Result<String, SvaError> {
    normalize_body(&p.antecedent, p.op, &p.consequent, macros)
}

/// Resolve a clocking event such as `@(posedge clk)` or a macro naming one.
pub fn clock_event(clock_expr: &str, macros: &[Macro]) -> Result<(Edge, String), SvaError> {
    let toks = lex(clock_expr, "clock").map_err(rtl_to_sva)?;
    let toks = expand_macros(toks, macros)?;
    let mut p = TokenParser::new(toks, "clock");
    let ev = parse_clock(&mut p).map_err(rtl_to_sva)?;
    if !p.at_eof() {
        return Err(rtl_to_sva(p.error(&["end of clocking event"])));
    }
    Ok(ev)
}

fn parse_clock(p: &mut TokenParser) -> Result<(Edge, String), RtlError> {
    p.expect_sym("@")?;
    p.expect_sym("(")?;
    let edge = if p.eat_kw("posedge") {
        Edge::Posedge
    } else if p.eat_kw("negedge") {
        Edge::Negedge
    } else {
        return Err(p.error(&["posedge", "negedge"]));
    };
    let (sig, _) = p.expect_ident()?;
    p.expect_sym(")")?;
    Ok((edge, sig))
}

struct SpecParts {
    clock_expr: String,
    disable_expr: Option<String>,
    antecedent: Expr,
    /// Body was a bare expression; the antecedent is synthesized.
    implicit: bool,
    op: ImplOp,
    consequent: Expr,
    line: u32,
}

struct Reader<'a> {
    p: TokenParser,
    text: &'a str,
    covs: Vec<CovLine>,
    next_cov: usize,
    out: ParsedSva,
    blocks: Vec<(SvaProperty, u32)>,
    directives: Vec<(PropKind, String, u32)>,
    in_module: bool,
}

pub fn parse_sva(text: &str) -> Result<ParsedSva, SvaError> {
    let (cleaned, macros, covs) = preprocess(text)?;
    let toks = lex(&cleaned, "sva").map_err(rtl_to_sva)?;
    let toks = expand_macros(toks, &macros)?;
    let mut r = Reader {
        p: TokenParser::new(toks, "sva"),
        text: &cleaned,
        covs,
        next_cov: 0,
        out: ParsedSva::default(),
        blocks: Vec::new(),
        directives: Vec::new(),
        in_module: false,
    };
    r.out.resources.macros = macros;
    r.run()?;
    r.finish()
}

impl Reader<'_> {
    fn line(&self) -> u32 {
        self.p.peek().span.start_line
    }

    fn run(&mut self) -> Result<(), SvaError> {
        while !self.p.at_eof() {
            self.item().map_err(|e| match e {
                ItemError::Rtl(e) => rtl_to_sva(e),
                ItemError::Sva(e) => e,
            })?;
        }
        if self.in_module {
            return Err(parse_err(self.line(), "missing endmodule"));
        }
        Ok(())
    }

    fn item(&mut self) -> Result<(), ItemError> {
        let kw = match &self.p.peek().tok {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.p.error(&["declaration", "property", "directive"]).into()),
        };
        match kw.as_str() {
            "module" => self.module_header(),
            "endmodule" => {
                if !self.in_module {
                    return Err(self.p.error(&["declaration"]).into());
                }
                let span = self.p.bump().span;
                self.out.wrapper_end = Some(byte_offset(self.text, span.start()));
                self.in_module = false;
                Ok(())
            }
            "input" | "output" | "inout" | "wire" | "logic" | "reg" | "bit" => self.declaration(),
            "parameter" | "localparam" => self.parameter(),
            "property" => self.property_block(),
            "assert" | "assume" | "cover" => self.directive(None),
            "bind" => {
                while !self.p.at_eof() && !self.p.is_sym(";") {
                    self.p.bump();
                }
                self.p.expect_sym(";")?;
                Ok(())
            }
            "sequence" | "default" | "always" | "always_ff" | "always_comb" | "assign" | "initial"
            | "function" | "task" | "generate" | "genvar" => Err(self.p.unsupported(&kw).into()),
            _ if matches!(self.p.peek_at(1).tok, Tok::Sym(":")) => {
                let (label, _) = self.p.expect_ident()?;
                self.p.expect_sym(":")?;
                self.directive(Some(label))
            }
            _ => Err(self.p.error(&["declaration", "property", "directive"]).into()),
        }
    }

    fn module_header(&mut self) -> Result<(), ItemError> {
        if self.in_module || self.out.wrapper_end.is_some() {
            return Err(self.p.unsupported("second wrapper module").into());
        }
        self.p.expect_kw("module")?;
        self.p.expect_ident()?;
        self.in_module = true;
        if self.p.eat_sym("#") {
            self.p.expect_sym("(")?;
            loop {
                let local = self.p.eat_kw("localparam");
                if !local {
                    self.p.eat_kw("parameter");
                }
                self.param_assignment()?;
                if !self.p.eat_sym(",") {
                    break;
                }
            }
            self.p.expect_sym(")")?;
        }
        if self.p.eat_sym("(") && !self.p.eat_sym(")") {
            loop {
                for d in ["input", "output", "inout"] {
                    self.p.eat_kw(d);
                }
                for k in ["wire", "logic", "reg", "bit"] {
                    self.p.eat_kw(k);
                }
                let width = self.range_width()?;
                let (name, _) = self.p.expect_ident()?;
                self.add_declared(&name, width)?;
                if !self.p.eat_sym(",") {
                    break;
                }
            }
            self.p.expect_sym(")")?;
        }
        self.p.expect_sym(";")?;
        Ok(())
    }

    fn range_width(&mut self) -> Result<u32, ItemError> {
        let Some(r) = self.p.parse_range()? else {
            return Ok(1);
        };
        let known = self.known_params();
        let msb = eval_constant(&r.msb, &known)?.0;
        let lsb = eval_constant(&r.lsb, &known)?.0;
        if msb < lsb || msb - lsb >= 64 {
            return Err(SvaError::Parse {
                line: r.msb.span.start_line,
                message: "range must be descending and at most 64 bits".into(),
            }
            .into());
        }
        Ok((msb - lsb + 1) as u32)
    }

    fn known_params(&self) -> Vec<(String, u64, u32)> {
        self.out
            .resources
            .parameters
            .iter()
            .map(|p| (p.name.clone(), p.value, p.width))
            .collect()
    }

    fn add_declared(&mut self, name: &str, width: u32) -> Result<(), ItemError> {
        if self.out.resources.has_signal(name) {
            return Err(SvaError::Parse {
                line: self.p.prev_span().start_line,
                message: format!("signal `{name}` declared twice"),
            }
            .into());
        }
        self.out.resources.add_signal(name, Some(width));
        Ok(())
    }

    fn declaration(&mut self) -> Result<(), ItemError> {
        for d in ["input", "output", "inout"] {
            self.p.eat_kw(d);
        }
        for k in ["wire", "logic", "reg", "bit"] {
            self.p.eat_kw(k);
        }
        let width = self.range_width()?;
        loop {
            let (name, _) = self.p.expect_ident()?;
            self.add_declared(&name, width)?;
            if self.p.eat_sym("=") {
                self.p.parse_expr()?;
            }
            if !self.p.eat_sym(",") {
                break;
            }
        }
        self.p.expect_sym(";")?;
        Ok(())
    }

    fn parameter(&mut self) -> Result<(), ItemError> {
        self.p.bump();
        loop {
            self.param_assignment()?;
            if !self.p.eat_sym(",") {
                break;
            }
        }
        self.p.expect_sym(";")?;
        Ok(())
    }

    fn param_assignment(&mut self) -> Result<(), ItemError> {
        self.p.eat_kw("int");
        let declared = match self.p.parse_range()? {
            Some(r) => {
                let known = self.known_params();
                let msb = eval_constant(&r.msb, &known)?.0;
                let lsb = eval_constant(&r.lsb, &known)?.0;
                Some((msb.saturating_sub(lsb) + 1).min(64) as u32)
            }
            None => None,
        };
        let (name, span) = self.p.expect_ident()?;
        self.p.expect_sym("=")?;
        let e = self.p.parse_expr()?;
        let (value, w) = eval_constant(&e, &self.known_params())?;
        let width = declared.unwrap_or(w.max(32));
        if self.out.resources.parameter(&name).is_some() {
            return Err(parse_err(span.start_line, format!("parameter `{name}` declared twice")).into());
        }
        self.out.resources.parameters.push(Parameter {
            name,
            value: value & crate::rtl::ast::mask(width),
            width,
        });
        Ok(())
    }

    /// `[clock] [disable iff (e)] body`
    fn spec(&mut self) -> Result<SpecParts, ItemError> {
        let line = self.line();
        let mut clock_expr = String::new();
        if self.p.is_sym("@") {
            let start = self.p.peek().span;
            parse_clock(&mut self.p)?;
            let span = start.to(self.p.prev_span());
            clock_expr = self.slice(span)?;
            if self.out.resources.clock_expr.is_none() {
                self.out.resources.clock_expr = Some(clock_expr.clone());
            }
        }
        let mut disable_expr = None;
        if self.p.eat_kw("disable") {
            self.p.expect_kw("iff")?;
            self.p.expect_sym("(")?;
            let d = self.p.parse_expr()?;
            self.p.expect_sym(")")?;
            self.note_signals(&d);
            disable_expr = Some(self.slice(d.span)?);
        }
        let first = self.p.parse_expr()?;
        let implicit = !(self.p.is_sym("|->") || self.p.is_sym("|=>"));
        let (antecedent, op, consequent) = if self.p.eat_sym("|->") {
            let op = if self.p.eat_sym("##") {
                match self.p.bump().tok {
                    Tok::Number(l) if l.wildcard == 0 && l.value <= 64 => ImplOp::OverlapDelay(l.value as u32),
                    _ => return Err(parse_err(self.p.prev_span().start_line, "expected a cycle count after ##").into()),
                }
            } else {
                ImplOp::Overlap
            };
            (first, op, self.p.parse_expr()?)
        } else if self.p.eat_sym("|=>") {
            (first, ImplOp::NonOverlap, self.p.parse_expr()?)
        } else {
            let t = Expr::literal(crate::rtl::ast::Literal::bit(true), first.span);
            (t, ImplOp::Overlap, first)
        };
        if self.p.is_sym("|->") || self.p.is_sym("|=>") || self.p.is_sym("##") {
            return Err(SvaError::InvalidForm {
                reason: format!("line {}: chained implication or sequence", self.p.peek().span.start_line),
            }
            .into());
        }
        self.note_signals(&antecedent);
        self.note_signals(&consequent);
        Ok(SpecParts {
            clock_expr,
            disable_expr,
            antecedent,
            implicit,
            op,
            consequent,
            line,
        })
    }

    fn slice(&self, span: SourceSpan) -> Result<String, SvaError> {
        extract_slice(span, self.text).map_err(|e| parse_err(span.start_line, e.to_string()))
    }

    fn note_signals(&mut self, e: &Expr) {
        for id in e.identifiers() {
            if self.out.resources.parameter(&id).is_none() {
                self.out.resources.add_signal(&id, None);
            }
        }
    }

    fn take_trace(&mut self, before_line: u32) -> Option<Trace> {
        let mut trace: Option<Trace> = None;
        while let Some(c) = self.covs.get(self.next_cov) {
            if c.line >= before_line {
                break;
            }
            match &mut trace {
                Some(t) => {
                    t.locations.push(c.span);
                    t.iteration = t.iteration.max(c.iteration);
                }
                None => {
                    trace = Some(Trace {
                        file: c.file.clone(),
                        locations: vec![c.span],
                        iteration: c.iteration,
                    })
                }
            }
            self.next_cov += 1;
        }
        trace
    }

    fn build(&mut self, name: String, kind: PropKind, s: SpecParts) -> Result<SvaProperty, ItemError> {
        let trace = self.take_trace(s.line);
        let antecedent = if s.implicit {
            s.antecedent.to_string()
        } else {
            self.slice(s.antecedent.span)?
        };
        let prop = SvaProperty {
            name: name.clone(),
            kind,
            clock_expr: s.clock_expr,
            disable_expr: s.disable_expr,
            antecedent,
            op: s.op,
            consequent: self.slice(s.consequent.span)?,
            behavior: String::new(),
            trace,
        };
        if self.out.resources.existing_properties.iter().any(|p| p.name == name) {
            return Err(parse_err(s.line, format!("property `{name}` defined twice")).into());
        }
        self.out.resources.existing_properties.push(ExistingProperty {
            name,
            body: format!("{} {} {}", s.antecedent, s.op, s.consequent),
        });
        Ok(prop)
    }

    fn property_block(&mut self) -> Result<(), ItemError> {
        let line = self.line();
        self.p.expect_kw("property")?;
        let (name, _) = self.p.expect_ident()?;
        if self.p.is_sym("(") {
            return Err(self.p.unsupported("property arguments").into());
        }
        self.p.expect_sym(";")?;
        let mut s = self.spec()?;
        s.line = line;
        self.p.expect_sym(";")?;
        self.p.expect_kw("endproperty")?;
        if self.p.eat_sym(":") {
            let (end_name, span) = self.p.expect_ident()?;
            if end_name != name {
                return Err(parse_err(span.start_line, format!("endproperty label `{end_name}` does not match `{name}`")).into());
            }
        }
        // Kind is fixed once a directive names the property.
        let prop = self.build(name, PropKind::Assert, s)?;
        self.blocks.push((prop, line));
        Ok(())
    }

    fn directive(&mut self, label: Option<String>) -> Result<(), ItemError> {
        let line = self.line();
        let kind = if self.p.eat_kw("assert") {
            PropKind::Assert
        } else if self.p.eat_kw("cover") {
            PropKind::Cover
        } else if self.p.eat_kw("assume") {
            PropKind::Assume
        } else {
            return Err(self.p.error(&["assert", "cover", "assume"]).into());
        };
        self.p.expect_kw("property")?;
        self.p.expect_sym("(")?;
        let named = matches!(&self.p.peek().tok, Tok::Ident(_)) && matches!(self.p.peek_at(1).tok, Tok::Sym(")"));
        if named {
            let (name, _) = self.p.expect_ident()?;
            self.p.expect_sym(")")?;
            self.p.expect_sym(";")?;
            self.directives.push((kind, name, line));
            return Ok(());
        }
        let mut s = self.spec()?;
        s.line = line;
        self.p.expect_sym(")")?;
        if self.p.is_kw("else") {
            return Err(self.p.unsupported("action block").into());
        }
        self.p.expect_sym(";")?;
        let name = label.unwrap_or_else(|| format!("{}_line{line}", kind.keyword()));
        let prop = self.build(name, kind, s)?;
        self.out.properties.push(prop);
        Ok(())
    }

    fn finish(mut self) -> Result<ParsedSva, SvaError> {
        let mut all = std::mem::take(&mut self.out.properties);
        for (kind, name, line) in std::mem::take(&mut self.directives) {
            let Some((block, _)) = self.blocks.iter().find(|(b, _)| b.name == name) else {
                return Err(parse_err(line, format!("directive names unknown property `{name}`")));
            };
            let mut p = block.clone();
            p.kind = kind;
            all.push(p);
        }
        let existing = &self.out.resources.existing_properties;
        all.sort_by_key(|p| existing.iter().position(|e| e.name == p.name));
        self.out.properties = all;
        Ok(self.out)
    }
}

enum ItemError {
    Rtl(RtlError),
    Sva(SvaError),
}

impl From<RtlError> for ItemError {
    fn from(e: RtlError) -> Self {
        ItemError::Rtl(e)
    }
}

impl From<SvaError> for ItemError {
    fn from(e: SvaError) -> Self {
        ItemError::Sva(e)
    }
}

fn byte_offset(text: &str, (line, col): (u32, u32)) -> usize {
    let mut start = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line as usize {
            return start + col as usize - 1;
        }
        start += l.len();
    }
    text.len()
}
