//! Two-state bit-vector semantics for the expression subset.
//!
//! Expressions are compiled against a [`Resolve`] implementation into a
//! width-annotated [`Node`] tree and evaluated over `u64` slots. Width rules
//! follow Verilog for unsigned operands: arithmetic and bitwise operators are
//! context-determined, relational and logical operators produce one bit from
//! operands sized to the wider side, and `$past` arguments are
//! self-determined. Division by zero yields zero.

use thiserror::Error;

use crate::rtl::ast::{mask, BinaryOp, Expr, ExprKind, SourceSpan, UnaryOp};

pub const MAX_WIDTH: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogicError {
    #[error("unknown identifier `{name}` at {span}")]
    UnknownIdentifier { name: String, span: SourceSpan },
    #[error("unsupported in expression at {span}: {what}")]
    Unsupported { what: String, span: SourceSpan },
    #[error("expression at {span} is not constant")]
    NotConstant { span: SourceSpan },
    #[error("expression at {span} is wider than 64 bits")]
    TooWide { span: SourceSpan },
    #[error("bit select at {span} is outside the declared range")]
    SelectOutOfRange { span: SourceSpan },
}

/// What an identifier resolves to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Operand {
    Slot { index: usize, width: u32, lsb: u32 },
    Const { value: u64, width: u32 },
}

pub trait Resolve {
    fn ident(&self, name: &str, span: SourceSpan) -> Result<Operand, LogicError>;

    /// Allocate a history slot for `$past(arg, depth)`.
    fn past(&mut self, arg: &Node, depth: u32, span: SourceSpan) -> Result<usize, LogicError> {
        let _ = (arg, depth);
        Err(LogicError::Unsupported {
            what: "$past outside a property".into(),
            span,
        })
    }
}

/// Resolver with no identifiers; only literals are accepted.
pub struct NoIdents;

impl Resolve for NoIdents {
    fn ident(&self, name: &str, span: SourceSpan) -> Result<Operand, LogicError> {
        Err(LogicError::UnknownIdentifier {
            name: name.to_string(),
            span,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const {
        value: u64,
        width: u32,
    },
    Var {
        slot: usize,
        width: u32,
    },
    Past {
        slot: usize,
        width: u32,
    },
    Unary {
        op: UnaryOp,
        arg: Box<Node>,
        width: u32,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Node>,
        rhs: Box<Node>,
        width: u32,
    },
    /// `lhs ==? literal` with don't-care bits.
    Masked {
        lhs: Box<Node>,
        value: u64,
        care: u64,
        literal_width: u32,
        negate: bool,
    },
    Ternary {
        cond: Box<Node>,
        then_node: Box<Node>,
        else_node: Box<Node>,
        width: u32,
    },
    Concat {
        parts: Vec<Node>,
        width: u32,
    },
    Index {
        base: Box<Node>,
        index: Box<Node>,
        base_lsb: u32,
        base_width: u32,
    },
    Slice {
        base: Box<Node>,
        offset: u32,
        width: u32,
    },
    Cast {
        arg: Box<Node>,
        width: u32,
    },
}

/// Values visible to an evaluation: current-cycle slots and history slots.
#[derive(Clone, Copy, Debug)]
pub struct Env<'a> {
    pub cur: &'a [u64],
    pub past: &'a [u64],
}

impl<'a> Env<'a> {
    pub fn new(cur: &'a [u64]) -> Self {
        Env { cur, past: &[] }
    }
}

impl Node {
    pub fn width(&self) -> u32 {
        match self {
            Node::Const { width, .. }
            | Node::Var { width, .. }
            | Node::Past { width, .. }
            | Node::Unary { width, .. }
            | Node::Binary { width, .. }
            | Node::Ternary { width, .. }
            | Node::Concat { width, .. }
            | Node::Slice { width, .. }
            | Node::Cast { width, .. } => *width,
            Node::Masked { .. } | Node::Index { .. } => 1,
        }
    }

    /// Evaluate in its own width.
    pub fn value(&self, env: &Env<'_>) -> u64 {
        self.eval(env, self.width())
    }

    pub fn truth(&self, env: &Env<'_>) -> bool {
        self.value(env) != 0
    }

    /// Evaluate with context width `ctx` (never narrower than the node).
    pub fn eval(&self, env: &Env<'_>, ctx: u32) -> u64 {
        let w = ctx.max(self.width());
        match self {
            Node::Const { value, .. } => *value,
            Node::Var { slot, .. } => env.cur[*slot],
            Node::Past { slot, .. } => env.past[*slot],
            Node::Unary { op, arg, .. } => {
                let aw = arg.width();
                match op {
                    UnaryOp::LogNot => (arg.eval(env, aw) == 0) as u64,
                    UnaryOp::BitNot => !arg.eval(env, w) & mask(w),
                    UnaryOp::Neg => arg.eval(env, w).wrapping_neg() & mask(w),
                    UnaryOp::Plus => arg.eval(env, w),
                    UnaryOp::RedAnd => (arg.eval(env, aw) == mask(aw)) as u64,
                    UnaryOp::RedOr => (arg.eval(env, aw) != 0) as u64,
                    UnaryOp::RedXor => (arg.eval(env, aw).count_ones() & 1) as u64,
                    UnaryOp::RedNand => (arg.eval(env, aw) != mask(aw)) as u64,
                    UnaryOp::RedNor => (arg.eval(env, aw) == 0) as u64,
                    UnaryOp::RedXnor => (arg.eval(env, aw).count_ones() & 1 == 0) as u64,
                }
            }
            Node::Binary { op, lhs, rhs, .. } => eval_binary(*op, lhs, rhs, env, w),
            Node::Masked {
                lhs,
                value,
                care,
                literal_width,
                negate,
            } => {
                let ow = lhs.width().max(*literal_width);
                let v = lhs.eval(env, ow);
                let hit = (v ^ value) & care & mask(ow) == 0;
                (hit != *negate) as u64
            }
            Node::Ternary {
                cond,
                then_node,
                else_node,
                ..
            } => {
                if cond.truth(env) {
                    then_node.eval(env, w)
                } else {
                    else_node.eval(env, w)
                }
            }
            Node::Concat { parts, .. } => parts.iter().fold(0u64, |acc, p| {
                let pw = p.width();
                let shifted = if pw >= 64 { 0 } else { acc << pw };
                shifted | p.value(env)
            }),
            Node::Index {
                base,
                index,
                base_lsb,
                base_width,
            } => {
                let i = index.value(env);
                match i.checked_sub(*base_lsb as u64) {
                    Some(bit) if bit < *base_width as u64 => (base.value(env) >> bit) & 1,
                    _ => 0,
                }
            }
            Node::Slice {
                base,
                offset,
                width,
            } => (base.value(env) >> offset) & mask(*width),
            Node::Cast { arg, width } => arg.eval(env, (*width).max(arg.width())) & mask(*width),
        }
    }

    /// Visit every node.
    pub fn visit(&self, f: &mut impl FnMut(&Node)) {
        f(self);
        match self {
            Node::Const { .. } | Node::Var { .. } | Node::Past { .. } => {}
            Node::Unary { arg, .. } | Node::Cast { arg, .. } => arg.visit(f),
            Node::Slice { base, .. } => base.visit(f),
            Node::Masked { lhs, .. } => lhs.visit(f),
            Node::Binary { lhs, rhs, .. } => {
                lhs.visit(f);
                rhs.visit(f);
            }
            Node::Index { base, index, .. } => {
                base.visit(f);
                index.visit(f);
            }
            Node::Ternary {
                cond,
                then_node,
                else_node,
                ..
            } => {
                cond.visit(f);
                then_node.visit(f);
                else_node.visit(f);
            }
            Node::Concat { parts, .. } => parts.iter().for_each(|p| p.visit(f)),
        }
    }

    /// Current-cycle slots read by this node (history slots excluded).
    pub fn slots(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if let Node::Var { slot, .. } = n {
                if !out.contains(slot) {
                    out.push(*slot);
                }
            }
        });
        out
    }

    pub fn is_const(&self) -> bool {
        let mut c = true;
        self.visit(&mut |n| {
            if matches!(n, Node::Var { .. } | Node::Past { .. }) {
                c = false;
            }
        });
        c
    }
}

fn eval_binary(op: BinaryOp, lhs: &Node, rhs: &Node, env: &Env<'_>, w: u32) -> u64 {
    use BinaryOp::*;
    let m = mask(w);
    match op {
        Add | Sub | Mul | Div | Mod | BitAnd | BitOr | BitXor | BitXnor => {
            let a = lhs.eval(env, w);
            let b = rhs.eval(env, w);
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
                _ => unreachable!(),
            };
            r & m
        }
        Shl | Shr => {
            let a = lhs.eval(env, w);
            let s = rhs.value(env);
            if s >= 64 {
                0
            } else if op == Shl {
                (a << s) & m
            } else {
                a >> s
            }
        }
        Lt | Le | Gt | Ge | Eq | Ne | CaseEq | CaseNe | WildEq | WildNe => {
            let ow = lhs.width().max(rhs.width());
            let a = lhs.eval(env, ow);
            let b = rhs.eval(env, ow);
            let r = match op {
                Lt => a < b,
                Le => a <= b,
                Gt => a > b,
                Ge => a >= b,
                Eq | CaseEq | WildEq => a == b,
                Ne | CaseNe | WildNe => a != b,
                _ => unreachable!(),
            };
            r as u64
        }
        LogAnd => (lhs.truth(env) && rhs.truth(env)) as u64,
        LogOr => (lhs.truth(env) || rhs.truth(env)) as u64,
    }
}

/// Compile `expr` against `res`.
pub fn compile(expr: &Expr, res: &mut dyn Resolve) -> Result<Node, LogicError> {
    let node = match &expr.kind {
        ExprKind::Ident(name) => match res.ident(name, expr.span)? {
            Operand::Slot { index, width, .. } => Node::Var { slot: index, width },
            Operand::Const { value, width } => Node::Const { value, width },
        },
        ExprKind::Number(lit) => {
            if lit.wildcard != 0 {
                return Err(LogicError::Unsupported {
                    what: "wildcard literal outside a wildcard comparison".into(),
                    span: expr.span,
                });
            }
            Node::Const {
                value: lit.value,
                width: lit.eval_width(),
            }
        }
        ExprKind::Unary { op, arg } => {
            let arg = compile(arg, res)?;
            let width = match op {
                UnaryOp::BitNot | UnaryOp::Neg | UnaryOp::Plus => arg.width(),
                _ => 1,
            };
            Node::Unary {
                op: *op,
                arg: Box::new(arg),
                width,
            }
        }
        ExprKind::Binary { op, lhs, rhs } => {
            if matches!(op, BinaryOp::WildEq | BinaryOp::WildNe) {
                if let ExprKind::Number(lit) = &rhs.kind {
                    let lhs = compile(lhs, res)?;
                    let lw = lit.eval_width();
                    return Ok(Node::Masked {
                        lhs: Box::new(lhs),
                        value: lit.value,
                        care: !lit.wildcard & mask(lw),
                        literal_width: lw,
                        negate: *op == BinaryOp::WildNe,
                    });
                }
            }
            let l = compile(lhs, res)?;
            let r = compile(rhs, res)?;
            let width = match op.precedence() {
                1 | 2 | 6 | 7 => 1,
                8 => l.width(),
                _ => l.width().max(r.width()),
            };
            Node::Binary {
                op: *op,
                lhs: Box::new(l),
                rhs: Box::new(r),
                width,
            }
        }
        ExprKind::Ternary {
            cond,
            then_expr,
            else_expr,
        } => {
            let c = compile(cond, res)?;
            let t = compile(then_expr, res)?;
            let e = compile(else_expr, res)?;
            let width = t.width().max(e.width());
            Node::Ternary {
                cond: Box::new(c),
                then_node: Box::new(t),
                else_node: Box::new(e),
                width,
            }
        }
        ExprKind::Concat(items) => {
            let parts = items
                .iter()
                .map(|i| compile(i, res))
                .collect::<Result<Vec<_>, _>>()?;
            let width = parts.iter().map(Node::width).sum();
            Node::Concat { parts, width }
        }
        ExprKind::Replicate { count, items } => {
            let (n, _) = const_value(count, res)?;
            let parts = items
                .iter()
                .map(|i| compile(i, res))
                .collect::<Result<Vec<_>, _>>()?;
            let unit: u32 = parts.iter().map(Node::width).sum();
            if n == 0 || n as u128 * unit as u128 > MAX_WIDTH as u128 {
                return Err(LogicError::TooWide { span: expr.span });
            }
            let mut all = Vec::new();
            for _ in 0..n {
                all.extend(parts.iter().cloned());
            }
            Node::Concat {
                parts: all,
                width: unit * n as u32,
            }
        }
        ExprKind::Index { base, index } => {
            let (base_node, lsb, bw) = compile_select_base(base, res)?;
            let index_node = compile(index, res)?;
            if index_node.is_const() {
                let i = index_node.value(&Env::new(&[]));
                if i < lsb as u64 || i - lsb as u64 >= bw as u64 {
                    return Err(LogicError::SelectOutOfRange { span: expr.span });
                }
            }
            Node::Index {
                base: Box::new(base_node),
                index: Box::new(index_node),
                base_lsb: lsb,
                base_width: bw,
            }
        }
        ExprKind::Slice { base, msb, lsb } => {
            let (base_node, base_lsb, bw) = compile_select_base(base, res)?;
            let (hi, _) = const_value(msb, res)?;
            let (lo, _) = const_value(lsb, res)?;
            if hi < lo || lo < base_lsb as u64 || hi - base_lsb as u64 >= bw as u64 {
                return Err(LogicError::SelectOutOfRange { span: expr.span });
            }
            Node::Slice {
                base: Box::new(base_node),
                offset: (lo - base_lsb as u64) as u32,
                width: (hi - lo + 1) as u32,
            }
        }
        ExprKind::Cast { width, arg } => {
            let arg = compile(arg, res)?;
            Node::Cast {
                arg: Box::new(arg),
                width: *width,
            }
        }
        ExprKind::SysCall { name, args } if name == "past" => {
            if args.is_empty() || args.len() > 2 {
                return Err(LogicError::Unsupported {
                    what: "$past takes one or two arguments".into(),
                    span: expr.span,
                });
            }
            let depth = match args.get(1) {
                Some(d) => const_value(d, res)?.0,
                None => 1,
            };
            if !(1..=16).contains(&depth) {
                return Err(LogicError::Unsupported {
                    what: format!("$past depth {depth}"),
                    span: expr.span,
                });
            }
            let arg = compile(&args[0], res)?;
            let width = arg.width();
            let slot = res.past(&arg, depth as u32, expr.span)?;
            Node::Past { slot, width }
        }
        ExprKind::SysCall { name, .. } => {
            return Err(LogicError::Unsupported {
                what: format!("${name}"),
                span: expr.span,
            })
        }
    };
    if node.width() > MAX_WIDTH || node.width() == 0 {
        return Err(LogicError::TooWide { span: expr.span });
    }
    Ok(node)
}

fn compile_select_base(base: &Expr, res: &mut dyn Resolve) -> Result<(Node, u32, u32), LogicError> {
    let ExprKind::Ident(name) = &base.kind else {
        return Err(LogicError::Unsupported {
            what: "select of a non-identifier".into(),
            span: base.span,
        });
    };
    Ok(match res.ident(name, base.span)? {
        Operand::Slot { index, width, lsb } => (Node::Var { slot: index, width }, lsb, width),
        Operand::Const { value, width } => (Node::Const { value, width }, 0, width),
    })
}

/// Evaluate a constant expression; returns `(value, self width)`.
pub fn const_value(expr: &Expr, res: &mut dyn Resolve) -> Result<(u64, u32), LogicError> {
    let node = compile(expr, res)?;
    if !node.is_const() {
        return Err(LogicError::NotConstant { span: expr.span });
    }
    Ok((node.value(&Env::new(&[])), node.width()))
}
