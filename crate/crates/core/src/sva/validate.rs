use super::parse::{clock_event, parse_property_expr, parse_sva, SvaResources};
use super::property::{ImplOp, SvaProperty};
use super::SvaError;
use crate::rtl::ast::{Expr, ExprKind};

fn invalid(reason: impl Into<String>) -> SvaError {
    SvaError::InvalidForm { reason: reason.into() }
}

/// Form and resource checks every emitted property must pass.
pub fn validate_property(p: &SvaProperty, res: &SvaResources) -> Result<(), SvaError> {
    if p.name.is_empty() || !p.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(invalid(format!("`{}` is not a property name", p.name)));
    }
    if let ImplOp::OverlapDelay(n) = p.op {
        if !(1..=16).contains(&n) {
            return Err(invalid(format!("##{n} delay outside 1..16")));
        }
    }
    if p.clock_expr.trim().is_empty() {
        return Err(invalid("missing clocking event"));
    }
    let (_, clk) = clock_event(&p.clock_expr, &res.macros)?;
    let ante = parse_property_expr(&p.antecedent, &res.macros)?;
    let cons = parse_property_expr(&p.consequent, &res.macros)?;
    let mut exprs = vec![&ante, &cons];
    let dis = match &p.disable_expr {
        Some(d) => Some(parse_property_expr(d, &res.macros)?),
        None => None,
    };
    if let Some(d) = &dis {
        exprs.push(d);
    }
    single_outcome(&cons)?;
    for e in &exprs {
        check_calls(e)?;
    }
    let mut names = vec![clk];
    for e in exprs {
        names.extend(e.identifiers());
    }
    for n in names {
        if !res.has_signal(&n) && res.parameter(&n).is_none() {
            return Err(SvaError::UnavailableSignal { name: n });
        }
    }
    Ok(())
}

/// At most one relational comparison and no logical chaining in the outcome.
fn single_outcome(cons: &Expr) -> Result<(), SvaError> {
    if let ExprKind::Binary { op, .. } = &cons.kind {
        if matches!(op.symbol(), "&&" | "||") {
            return Err(invalid(format!("consequent `{cons}` chains several outcomes")));
        }
    }
    let mut relational = 0;
    cons.visit(&mut |e| {
        if let ExprKind::Binary { op, .. } = &e.kind {
            if op.is_relational() {
                relational += 1;
            }
        }
    });
    if relational > 1 {
        return Err(invalid(format!("consequent `{cons}` has {relational} comparisons")));
    }
    Ok(())
}

fn check_calls(e: &Expr) -> Result<(), SvaError> {
    let mut err = None;
    e.visit(&mut |x| {
        if let ExprKind::SysCall { name, args } = &x.kind {
            let ok = name == "past"
                && match args.as_slice() {
                    [_] => true,
                    [_, d] => matches!(&d.kind, ExprKind::Number(l) if (1..=16).contains(&l.value)),
                    _ => false,
                };
            if !ok && err.is_none() {
                err = Some(invalid(format!("unsupported call `{x}`")));
            }
        }
    });
    err.map_or(Ok(()), Err)
}

/// Parse free-form SVA text (for instance a model response or a reviewer
/// edit) into properties, with the file's macros in scope.
pub fn parse_candidates(text: &str, res: &SvaResources) -> Result<Vec<SvaProperty>, SvaError> {
    let mut src = String::new();
    for m in &res.macros {
        src.push_str(&format!("`define {} {}\n", m.name, m.body));
    }
    let shift = res.macros.len() as u32;
    src.push_str(text);
    let parsed = parse_sva(&src).map_err(|e| match e {
        SvaError::Parse { line, message } => SvaError::Parse {
            line: line.saturating_sub(shift),
            message,
        },
        other => other,
    })?;
    Ok(parsed.properties)
}
