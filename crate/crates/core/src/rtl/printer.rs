//! Source printer. Output reparses to the same tree (spans aside).

use std::fmt::{self, Write};

use super::ast::*;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(width) = self.width else {
            return match self.base {
                Base::Dec => write!(f, "{}", self.value),
                Base::Bin => write!(f, "'b{:b}", self.value),
                Base::Oct => write!(f, "'o{:o}", self.value),
                Base::Hex => write!(f, "'h{:x}", self.value),
            };
        };
        let bits = match self.base {
            Base::Bin => 1,
            Base::Oct => 3,
            Base::Hex => 4,
            Base::Dec => 0,
        };
        // Wildcards that do not fill whole digits are printed in binary.
        let aligned = bits > 0 && {
            let digit = (1u64 << bits) - 1;
            (0..width.div_ceil(bits)).all(|i| {
                let w = (self.wildcard >> (i * bits)) & digit;
                w == 0 || w == digit & mask(width - i * bits)
            })
        };
        let (bits, tag) = match (self.base, self.wildcard != 0 && !aligned) {
            (_, true) | (Base::Bin, _) => (1, 'b'),
            (Base::Oct, _) => (3, 'o'),
            (Base::Hex, _) => (4, 'h'),
            (Base::Dec, false) => return write!(f, "{width}'d{}", self.value),
        };
        write!(f, "{width}'{tag}")?;
        let digits = width.div_ceil(bits);
        let digit_mask = (1u64 << bits) - 1;
        for i in (0..digits).rev() {
            let shift = i * bits;
            if (self.wildcard >> shift) & digit_mask != 0 {
                f.write_char('?')?;
            } else {
                let d = (self.value >> shift) & digit_mask;
                f.write_char(char::from_digit(d as u32, 16).expect("digit"))?;
            }
        }
        Ok(())
    }
}

/// Binding strength used to decide parenthesization.
fn strength(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Ternary { .. } => 0,
        ExprKind::Binary { op, .. } => op.precedence(),
        ExprKind::Unary { .. } => 20,
        _ => 30,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if strength(e) < min {
        f.write_char('(')?;
        write_expr(f, e)?;
        f.write_char(')')
    } else {
        write_expr(f, e)
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[Expr]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write_expr(f, item)?;
    }
    Ok(())
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match &e.kind {
        ExprKind::Ident(n) => f.write_str(n),
        ExprKind::Number(l) => write!(f, "{l}"),
        ExprKind::Unary { op, arg } => {
            f.write_str(op.symbol())?;
            // Nested unary operators are parenthesized so `! !a` or `~&a`
            // can never re-lex as a different operator.
            write_child(f, arg, 21)
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            write_child(f, lhs, p)?;
            write!(f, " {} ", op.symbol())?;
            write_child(f, rhs, p + 1)
        }
        ExprKind::Ternary {
            cond,
            then_expr,
            else_expr,
        } => {
            write_child(f, cond, 1)?;
            f.write_str(" ? ")?;
            write_child(f, then_expr, 1)?;
            f.write_str(" : ")?;
            write_expr(f, else_expr)
        }
        ExprKind::Concat(items) => {
            f.write_char('{')?;
            write_list(f, items)?;
            f.write_char('}')
        }
        ExprKind::Replicate { count, items } => {
            f.write_char('{')?;
            write_child(f, count, 30)?;
            f.write_char('{')?;
            write_list(f, items)?;
            f.write_str("}}")
        }
        ExprKind::Index { base, index } => write!(f, "{base}[{index}]"),
        ExprKind::Slice { base, msb, lsb } => write!(f, "{base}[{msb}:{lsb}]"),
        ExprKind::Cast { width, arg } => write!(f, "{width}'({arg})"),
        ExprKind::SysCall { name, args } => {
            write!(f, "${name}")?;
            if !args.is_empty() {
                f.write_char('(')?;
                write_list(f, args)?;
                f.write_char(')')?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for LValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        match &self.select {
            None => Ok(()),
            Some(Select::Bit(i)) => write!(f, "[{i}]"),
            Some(Select::Part { msb, lsb }) => write!(f, "[{msb}:{lsb}]"),
        }
    }
}

fn range_text(r: &Option<Range>) -> String {
    match r {
        Some(r) => format!("[{}:{}] ", r.msb, r.lsb),
        None => String::new(),
    }
}

fn kind_text(k: NetKind) -> &'static str {
    match k {
        NetKind::Wire => "wire ",
        NetKind::Reg => "reg ",
        NetKind::Logic => "logic ",
        NetKind::Implicit => "",
    }
}

/// Render a design unit as source text.
pub fn print_unit(unit: &DesignUnit) -> String {
    let mut out = String::new();
    out.push_str("module ");
    out.push_str(&unit.name);
    let header: Vec<&ParamDecl> = unit.params.iter().filter(|p| !p.local).collect();
    if !header.is_empty() {
        out.push_str(" #(");
        for (i, p) in header.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "parameter {}{} = {}", range_text(&p.range), p.name, p.expr);
        }
        out.push(')');
    }
    if !unit.ports.is_empty() {
        out.push_str(" (\n");
        for (i, p) in unit.ports.iter().enumerate() {
            let dir = match p.direction {
                Direction::Input => "input",
                Direction::Output => "output",
                Direction::Inout => "inout",
            };
            let sep = if i + 1 < unit.ports.len() { "," } else { "" };
            let _ = writeln!(
                out,
                "  {dir} {}{}{}{sep}",
                kind_text(p.kind),
                range_text(&p.range),
                p.name
            );
        }
        out.push(')');
    }
    out.push_str(";\n");
    for p in unit.params.iter().filter(|p| p.local) {
        let _ = writeln!(out, "  localparam {}{} = {};", range_text(&p.range), p.name, p.expr);
    }
    for n in &unit.nets {
        let _ = writeln!(out, "  {}{}{};", kind_text(n.kind), range_text(&n.range), n.name);
    }
    for item in &unit.items {
        match item {
            Item::Assign(a) => {
                let _ = writeln!(out, "  assign {} = {};", a.lhs, a.rhs);
            }
            Item::Always(b) => {
                out.push_str("  ");
                match (&b.timing, &b.sensitivity) {
                    (TimingClass::AlwaysComb, _) => out.push_str("always_comb"),
                    (t, s) => {
                        out.push_str(if *t == TimingClass::AlwaysFf {
                            "always_ff"
                        } else {
                            "always"
                        });
                        match s {
                            Sensitivity::Star | Sensitivity::Implicit => out.push_str(" @(*)"),
                            Sensitivity::List(ev) => {
                                let terms: Vec<String> = ev
                                    .iter()
                                    .map(|e| match e.edge {
                                        Some(edge) => format!("{edge} {}", e.signal),
                                        None => e.signal.clone(),
                                    })
                                    .collect();
                                let _ = write!(out, " @({})", terms.join(" or "));
                            }
                        }
                    }
                }
                out.push(' ');
                print_stmt(&mut out, &b.body, 1);
            }
        }
    }
    out.push_str("endmodule\n");
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

/// Prints `s` starting at the current column; ends with a newline.
fn print_stmt(out: &mut String, s: &Stmt, level: usize) {
    match &s.kind {
        StmtKind::Assign {
            lhs,
            rhs,
            nonblocking,
        } => {
            let op = if *nonblocking { "<=" } else { "=" };
            let _ = writeln!(out, "{lhs} {op} {rhs};");
        }
        StmtKind::Block { label, stmts } => {
            out.push_str("begin");
            if let Some(l) = label {
                let _ = write!(out, " : {l}");
            }
            out.push('\n');
            for st in stmts {
                indent(out, level + 1);
                print_stmt(out, st, level + 1);
            }
            indent(out, level);
            out.push_str("end\n");
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = write!(out, "if ({cond}) ");
            // A nested if without else would capture our else; force a block.
            let then_needs_block = else_branch.is_some() && dangling_if(then_branch);
            if then_needs_block {
                out.push_str("begin\n");
                indent(out, level + 1);
                print_stmt(out, then_branch, level + 1);
                indent(out, level);
                out.push_str("end\n");
            } else {
                print_stmt(out, then_branch, level);
            }
            if let Some(e) = else_branch {
                indent(out, level);
                out.push_str("else ");
                print_stmt(out, e, level);
            }
        }
        StmtKind::Case {
            kind,
            subject,
            arms,
            default,
        } => {
            let kw = match kind {
                CaseKind::Case => "case",
                CaseKind::Casez => "casez",
            };
            let _ = writeln!(out, "{kw} ({subject})");
            for arm in arms {
                indent(out, level + 1);
                let labels: Vec<String> = arm.labels.iter().map(|l| l.to_string()).collect();
                let _ = write!(out, "{}: ", labels.join(", "));
                print_stmt(out, &arm.body, level + 1);
            }
            if let Some(d) = default {
                indent(out, level + 1);
                out.push_str("default: ");
                print_stmt(out, d, level + 1);
            }
            indent(out, level);
            out.push_str("endcase\n");
        }
    }
}

fn dangling_if(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::If { else_branch, .. } => match else_branch {
            None => true,
            Some(e) => dangling_if(e),
        },
        _ => false,
    }
}
