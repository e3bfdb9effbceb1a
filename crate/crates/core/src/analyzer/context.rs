use super::signature::logic_signature;
use super::*;
use crate::coverage::targets::{Anchor, BlockKind};
use crate::rtl::ast::{ActiveLevel, Expr, Item, StmtKind};
use crate::rtl::resolve_signals;

/// Build the context record for one target.
pub fn derive_context(
    target: &CoverageTarget,
    unit: &DesignUnit,
    source: &str,
    file: &str,
) -> Result<HoleContext, AnalyzerError> {
    let table = resolve_signals(unit)?;
    let is_signal = |n: &str| table.get(n).is_some();
    let clock_name = unit.primary_clock().map(|c| c.signal.clone());

    let block = match unit.items.get(target.enclosing.item) {
        Some(Item::Always(b)) => Some(b),
        _ => None,
    };
    let clock = block.and_then(|b| b.clock.as_ref()).map(|c| c.event_text());
    let reset_branch = target.in_reset_branch();
    let reset = block.and_then(|b| b.reset.as_ref()).map(|r| ResetInfo {
        signal: r.signal.clone(),
        active: match r.active {
            ActiveLevel::High => Level::High,
            ActiveLevel::Low => Level::Low,
        },
        asserted_branch: reset_branch,
    });

    // The deasserted reset guard becomes the disable condition instead.
    let kept: Vec<Expr> = target
        .guards
        .iter()
        .filter(|g| !(g.reset && !g.asserted))
        .map(|g| g.cond.clone())
        .collect();
    let pre = Expr::conjunction(kept, target.span);

    let action = match &target.anchor {
        Anchor::Assign {
            lhs,
            rhs,
            nonblocking,
        } => Action::Assign {
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
            nonblocking: *nonblocking,
        },
        Anchor::Arm {
            construct_assigns,
            arm_assigns,
            arm_stmts,
            ..
        } => match arm_stmts.as_slice() {
            [single] => match &single.kind {
                StmtKind::Assign {
                    lhs,
                    rhs,
                    nonblocking,
                } => Action::Assign {
                    lhs: lhs.to_string(),
                    rhs: rhs.to_string(),
                    nonblocking: *nonblocking,
                },
                _ => Action::Reach,
            },
            [] if arm_assigns.is_empty() && clock.is_some() && !construct_assigns.is_empty() => {
                Action::Hold {
                    signal: construct_assigns[0].clone(),
                }
            }
            _ => Action::Reach,
        },
    };

    let mut inputs: Vec<String> = Vec::new();
    let mut add_in = |names: Vec<String>| {
        for n in names {
            if is_signal(&n) && Some(&n) != clock_name.as_ref() && !inputs.contains(&n) {
                inputs.push(n);
            }
        }
    };
    add_in(pre.identifiers());
    let out = match &action {
        Action::Assign { lhs, rhs, .. } => {
            if let Ok(e) = parse_expr_text(rhs, "rhs") {
                add_in(e.identifiers());
            }
            vec![lvalue_base(lhs)]
        }
        Action::Hold { signal } => vec![signal.clone()],
        Action::Reach => match &target.anchor {
            Anchor::Arm { arm_assigns, .. } => arm_assigns.clone(),
            _ => Vec::new(),
        },
    };

    let isolated = is_isolated(target);
    let statement_type = if isolated {
        StatementType::Assignment
    } else {
        match target.enclosing.block {
            BlockKind::Case => StatementType::CaseStatement,
            BlockKind::If => StatementType::IfStatement,
            BlockKind::Always | BlockKind::Assign => StatementType::Assignment,
        }
    };

    let logic_signature = logic_signature(
        &action,
        &pre,
        target.enclosing.timing,
        clock.is_some(),
        reset_branch,
        &is_signal,
    );

    Ok(HoleContext {
        module: unit.name.clone(),
        input_type: if isolated {
            InputType::IsolatedStructure
        } else {
            InputType::BranchStructure
        },
        locations: vec![Location::of(target.span)],
        kind: target.kind,
        code: extract_slice(target.span, source)?,
        behavior: behavior(&action, statement_type, clock.is_some(), reset_branch),
        statement_type,
        signals: Signals { inputs, out },
        timing: target.enclosing.timing,
        precondition: pre.to_string(),
        reset,
        logic_signature,
        clock,
        action,
        file: file.to_string(),
        targets: vec![target.id.clone()],
    })
}

fn lvalue_base(lhs: &str) -> String {
    lhs.split('[').next().unwrap_or(lhs).trim().to_string()
}

fn behavior(action: &Action, st: StatementType, clocked: bool, reset_branch: bool) -> String {
    match action {
        Action::Assign { lhs, rhs, .. } if reset_branch => {
            format!("{lhs} loads {rhs} while reset is asserted")
        }
        Action::Assign { lhs, rhs, .. } => match st {
            StatementType::CaseStatement => format!("{lhs} takes {rhs} when its case item is selected"),
            StatementType::IfStatement => format!("{lhs} takes {rhs} when its guard holds"),
            StatementType::Assignment if clocked => format!("{lhs} registers {rhs} every cycle"),
            StatementType::Assignment => format!("{lhs} is driven by {rhs}"),
        },
        Action::Hold { signal } => format!("{signal} keeps its value on this branch"),
        Action::Reach => match st {
            StatementType::CaseStatement => "case item is selected".to_string(),
            _ => "conditional branch is entered".to_string(),
        },
    }
}
