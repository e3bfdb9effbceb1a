use serde::{Deserialize, Serialize};

use super::Action;
use crate::coverage::Timing;
use crate::rtl::ast::{Expr, ExprKind};
use crate::rtl::parse_expr_text;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignalRelation {
    pub lhs: String,
    pub rhs: Vec<String>,
}

/// Shape of the behavior a hole encodes. Equal signatures yield the same
/// property up to the antecedent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LogicSignature {
    pub operation_pattern: String,
    pub signal_relation: SignalRelation,
    pub timing_pattern: String,
}

/// Replace signal identifiers by positional placeholders `$0`, `$1`, ...
/// in first-occurrence order. Identifiers rejected by `is_signal` (such as
/// parameters) stay literal.
pub fn abstract_signals(e: &Expr, is_signal: &dyn Fn(&str) -> bool) -> (String, Vec<String>) {
    let mut order: Vec<String> = Vec::new();
    let abstracted = rename(e, &mut |name| {
        if !is_signal(name) {
            return name.to_string();
        }
        let pos = match order.iter().position(|n| n == name) {
            Some(p) => p,
            None => {
                order.push(name.to_string());
                order.len() - 1
            }
        };
        format!("${pos}")
    });
    (abstracted.to_string(), order)
}

/// Copy of `e` with identifiers mapped through `f`.
pub fn rename(e: &Expr, f: &mut dyn FnMut(&str) -> String) -> Expr {
    let mut out = e.clone();
    rename_in_place(&mut out, f);
    out
}

fn rename_in_place(e: &mut Expr, f: &mut dyn FnMut(&str) -> String) {
    match &mut e.kind {
        ExprKind::Ident(n) => *n = f(n),
        ExprKind::Number(_) => {}
        ExprKind::Unary { arg, .. } | ExprKind::Cast { arg, .. } => rename_in_place(arg, f),
        ExprKind::Binary { lhs, rhs, .. } => {
            rename_in_place(lhs, f);
            rename_in_place(rhs, f);
        }
        ExprKind::Ternary {
            cond,
            then_expr,
            else_expr,
        } => {
            rename_in_place(cond, f);
            rename_in_place(then_expr, f);
            rename_in_place(else_expr, f);
        }
        ExprKind::Concat(items) => items.iter_mut().for_each(|i| rename_in_place(i, f)),
        ExprKind::Replicate { count, items } => {
            rename_in_place(count, f);
            items.iter_mut().for_each(|i| rename_in_place(i, f));
        }
        ExprKind::Index { base, index } => {
            rename_in_place(base, f);
            rename_in_place(index, f);
        }
        ExprKind::Slice { base, msb, lsb } => {
            rename_in_place(base, f);
            rename_in_place(msb, f);
            rename_in_place(lsb, f);
        }
        ExprKind::SysCall { args, .. } => args.iter_mut().for_each(|a| rename_in_place(a, f)),
    }
}

pub fn logic_signature(
    action: &Action,
    precondition: &Expr,
    timing: Timing,
    clocked: bool,
    reset_branch: bool,
    is_signal: &dyn Fn(&str) -> bool,
) -> LogicSignature {
    let imp = if clocked { "|=>" } else { "|->" };
    let mut timing_pattern = format!("{}:{imp}", timing.as_str());
    if reset_branch {
        timing_pattern.push_str(":reset");
    }
    let (operation_pattern, signal_relation) = match action {
        Action::Assign { lhs, rhs, .. } => {
            let (pattern, rhs_signals) = match parse_expr_text(rhs, "rhs") {
                Ok(e) => abstract_signals(&e, is_signal),
                Err(_) => (rhs.clone(), Vec::new()),
            };
            (
                pattern,
                SignalRelation {
                    lhs: lhs.clone(),
                    rhs: rhs_signals,
                },
            )
        }
        Action::Hold { signal } => (
            "hold".to_string(),
            SignalRelation {
                lhs: signal.clone(),
                rhs: vec![signal.clone()],
            },
        ),
        Action::Reach => {
            let mut sigs: Vec<String> = precondition
                .identifiers()
                .into_iter()
                .filter(|n| is_signal(n))
                .collect();
            sigs.sort();
            (
                "reach".to_string(),
                SignalRelation {
                    lhs: String::new(),
                    rhs: sigs,
                },
            )
        }
    };
    LogicSignature {
        operation_pattern,
        signal_relation,
        timing_pattern,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placeholders_in_first_occurrence_order() {
        let e = parse_expr_text("b + a * b + W + 4'd3", "t").unwrap();
        let (p, s) = abstract_signals(&e, &|n| n != "W");
        assert_eq!(p, "$0 + $1 * $0 + W + 4'd3");
        assert_eq!(s, vec!["b", "a"]);
    }
}
