//! Signal table construction and reference checking.

use serde::Serialize;

use super::ast::*;
use super::RtlError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    Reg,
    Wire,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignalInfo {
    pub name: String,
    /// `None` for module-local nets and variables.
    pub direction: Option<Direction>,
    pub kind: SignalKind,
    pub width: u32,
    pub lsb: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SignalTable {
    /// Ports first (declaration order), then locals.
    pub signals: Vec<SignalInfo>,
    pub params: Vec<(String, u64, u32)>,
}

impl SignalTable {
    pub fn get(&self, name: &str) -> Option<&SignalInfo> {
        self.signals.iter().find(|s| s.name == name)
    }

    pub fn param(&self, name: &str) -> Option<(u64, u32)> {
        self.params
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, v, w)| (*v, *w))
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.get(name).is_some() || self.param(name).is_some()
    }

    pub fn width(&self, name: &str) -> Option<u32> {
        self.get(name)
            .map(|s| s.width)
            .or_else(|| self.param(name).map(|p| p.1))
    }

    pub fn inputs(&self) -> Vec<&str> {
        self.with_direction(Direction::Input)
    }

    pub fn outputs(&self) -> Vec<&str> {
        self.with_direction(Direction::Output)
    }

    fn with_direction(&self, d: Direction) -> Vec<&str> {
        self.signals
            .iter()
            .filter(|s| s.direction == Some(d))
            .map(|s| s.name.as_str())
            .collect()
    }
}

/// Build the signal table of `unit` and check that every referenced
/// identifier is declared and every constant select is in range.
pub fn resolve_signals(unit: &DesignUnit) -> Result<SignalTable, RtlError> {
    let mut procedural: Vec<String> = Vec::new();
    for b in unit.blocks() {
        for s in b.body.assigned_signals() {
            if !procedural.contains(&s) {
                procedural.push(s);
            }
        }
    }
    let kind_of = |name: &str, k: NetKind| match k {
        NetKind::Reg => SignalKind::Reg,
        NetKind::Wire => SignalKind::Wire,
        NetKind::Logic | NetKind::Implicit => {
            if procedural.iter().any(|p| p == name) {
                SignalKind::Reg
            } else {
                SignalKind::Wire
            }
        }
    };
    let mut table = SignalTable {
        signals: Vec::new(),
        params: unit
            .params
            .iter()
            .map(|p| (p.name.clone(), p.value, p.width))
            .collect(),
    };
    for p in &unit.ports {
        table.signals.push(SignalInfo {
            name: p.name.clone(),
            direction: Some(p.direction),
            kind: kind_of(&p.name, p.kind),
            width: p.width,
            lsb: p.lsb,
        });
    }
    for n in &unit.nets {
        if table.param(&n.name).is_some() {
            return Err(RtlError::DuplicateDeclaration {
                name: n.name.clone(),
                span: n.span,
            });
        }
        table.signals.push(SignalInfo {
            name: n.name.clone(),
            direction: None,
            kind: kind_of(&n.name, n.kind),
            width: n.width,
            lsb: n.lsb,
        });
    }

    let origin = unit.name.as_str();
    for item in &unit.items {
        match item {
            Item::Assign(a) => {
                check_lvalue(&table, &a.lhs, origin)?;
                check_expr(&table, &a.rhs, origin)?;
            }
            Item::Always(b) => {
                if let Sensitivity::List(ev) = &b.sensitivity {
                    for e in ev {
                        if !table.is_declared(&e.signal) {
                            return Err(RtlError::UndeclaredSignal {
                                name: e.signal.clone(),
                                span: e.span,
                            });
                        }
                    }
                }
                let mut result = Ok(());
                b.body.walk(&mut |s| {
                    if result.is_err() {
                        return;
                    }
                    result = match &s.kind {
                        StmtKind::If { cond, .. } => check_expr(&table, cond, origin),
                        StmtKind::Case { subject, arms, .. } => {
                            check_expr(&table, subject, origin).and_then(|_| {
                                arms.iter()
                                    .flat_map(|a| a.labels.iter())
                                    .try_for_each(|l| check_label(&table, l, origin))
                            })
                        }
                        StmtKind::Assign { lhs, rhs, .. } => check_lvalue(&table, lhs, origin)
                            .and_then(|_| check_expr(&table, rhs, origin)),
                        StmtKind::Block { .. } => Ok(()),
                    };
                });
                result?;
            }
        }
    }
    Ok(table)
}

fn check_label(table: &SignalTable, label: &Expr, origin: &str) -> Result<(), RtlError> {
    check_expr(table, label, origin)?;
    let mut non_const = None;
    label.visit(&mut |e| {
        if let ExprKind::Ident(n) = &e.kind {
            if table.param(n).is_none() && non_const.is_none() {
                non_const = Some(e.span);
            }
        }
    });
    match non_const {
        Some(span) => Err(RtlError::Invalid {
            origin: origin.to_string(),
            span,
            reason: "case label is not a constant expression".into(),
        }),
        None => Ok(()),
    }
}

fn check_lvalue(table: &SignalTable, lv: &LValue, origin: &str) -> Result<(), RtlError> {
    let Some(sig) = table.get(&lv.name) else {
        return Err(RtlError::UndeclaredSignal {
            name: lv.name.clone(),
            span: lv.span,
        });
    };
    if sig.direction == Some(Direction::Input) {
        return Err(RtlError::Invalid {
            origin: origin.to_string(),
            span: lv.span,
            reason: format!("assignment to input `{}`", lv.name),
        });
    }
    match &lv.select {
        None => Ok(()),
        Some(Select::Bit(i)) => {
            check_expr(table, i, origin)?;
            check_const_index(table, sig, i, i.span, origin)
        }
        Some(Select::Part { msb, lsb }) => {
            check_const_index(table, sig, msb, lv.span, origin)?;
            check_const_index(table, sig, lsb, lv.span, origin)
        }
    }
}

fn check_const_index(
    table: &SignalTable,
    sig: &SignalInfo,
    idx: &Expr,
    span: SourceSpan,
    origin: &str,
) -> Result<(), RtlError> {
    let known = table.params.clone();
    if let Ok((v, _)) = super::consteval::eval_const(idx, &known, origin) {
        if v < sig.lsb as u64 || v - sig.lsb as u64 >= sig.width as u64 {
            return Err(RtlError::Invalid {
                origin: origin.to_string(),
                span,
                reason: format!("select of `{}` outside [{}:{}]", sig.name, sig.lsb + sig.width - 1, sig.lsb),
            });
        }
    }
    Ok(())
}

fn check_expr(table: &SignalTable, e: &Expr, origin: &str) -> Result<(), RtlError> {
    let mut result = Ok(());
    e.visit(&mut |n| {
        if result.is_err() {
            return;
        }
        result = match &n.kind {
            ExprKind::Ident(name) if !table.is_declared(name) => Err(RtlError::UndeclaredSignal {
                name: name.clone(),
                span: n.span,
            }),
            ExprKind::Index { base, index } => match &base.kind {
                ExprKind::Ident(b) => match table.get(b) {
                    Some(sig) => check_const_index(table, sig, index, n.span, origin),
                    None => Ok(()),
                },
                _ => Ok(()),
            },
            ExprKind::Slice { base, msb, lsb } => match &base.kind {
                ExprKind::Ident(b) => match table.get(b) {
                    Some(sig) => check_const_index(table, sig, msb, n.span, origin)
                        .and_then(|_| check_const_index(table, sig, lsb, n.span, origin)),
                    None => Ok(()),
                },
                _ => Ok(()),
            },
            _ => Ok(()),
        };
    });
    result
}
