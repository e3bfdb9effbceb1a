//! Deterministic property templates per timing class.

use serde::{Deserialize, Serialize};

use super::parse::SvaResources;
use super::property::{ImplOp, PropKind, SvaProperty, Trace};
use super::SvaError;
use crate::analyzer::{Action, HoleContext};
use crate::coverage::TargetKind;
use crate::logic::{compile, const_value, LogicError, Operand, Resolve};
use crate::rtl::ast::{Expr, ExprKind, Literal, SourceSpan};
use crate::rtl::parse_expr_text;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenOptions {
    /// Also emit a reachability cover next to an assertion for branch holes.
    pub emit_covers: bool,
    /// Use `|-> ##N` instead of `|=>` for clocked holes.
    pub delay_cycles: Option<u32>,
    /// Iteration recorded in trace comments.
    pub iteration: u32,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            emit_covers: false,
            delay_cycles: None,
            iteration: 1,
        }
    }
}

/// Width lookup over the resource inventory.
pub(crate) struct ResourceWidths<'a>(pub &'a SvaResources);

impl Resolve for ResourceWidths<'_> {
    fn ident(&self, name: &str, span: SourceSpan) -> Result<Operand, LogicError> {
        if let Some(p) = self.0.parameter(name) {
            return Ok(Operand::Const {
                value: p.value,
                width: p.width,
            });
        }
        match self.0.signal(name) {
            Some(s) => Ok(Operand::Slot {
                index: 0,
                width: s.width.unwrap_or(1),
                lsb: 0,
            }),
            None => Err(LogicError::UnknownIdentifier {
                name: name.to_string(),
                span,
            }),
        }
    }
}

fn is_compound(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Binary { .. } | ExprKind::Ternary { .. })
}

fn paren(e: &Expr) -> String {
    if is_compound(e) {
        format!("({e})")
    } else {
        e.to_string()
    }
}

fn parse(text: &str, what: &str) -> Result<Expr, SvaError> {
    parse_expr_text(text, what).map_err(|e| SvaError::InvalidForm { reason: e.to_string() })
}

fn check_available(e: &Expr, res: &SvaResources) -> Result<(), SvaError> {
    for id in e.identifiers() {
        if !res.is_available(&id) {
            return Err(SvaError::UnavailableSignal { name: id });
        }
    }
    Ok(())
}

/// Clocking event: a clock macro from the file wins over the RTL clock.
pub fn pick_clock(ctx: &HoleContext, res: &SvaResources) -> Result<String, SvaError> {
    if let Some(m) = res.clock_macro() {
        return Ok(format!("`{}", m.name));
    }
    ctx.clock
        .clone()
        .or_else(|| res.clock_expr.clone())
        .ok_or_else(|| SvaError::UnsupportedTiming {
            reason: format!("no clock available for the {} hole in `{}`", ctx.timing.as_str(), ctx.module),
        })
}

/// Template properties for one hole: one assertion when the hole has a
/// checkable action, plus a reachability cover when requested or when no
/// assertion applies.
pub fn generate_property(
    ctx: &HoleContext,
    res: &SvaResources,
    opts: &GenOptions,
) -> Result<Vec<SvaProperty>, SvaError> {
    for s in ctx.signals.inputs.iter().chain(&ctx.signals.out) {
        if !res.has_signal(s) {
            return Err(SvaError::UnavailableSignal { name: s.clone() });
        }
    }
    let pre = parse(&ctx.precondition, "precondition")?;
    check_available(&pre, res)?;
    let clock_expr = pick_clock(ctx, res)?;
    let disable_expr = ctx
        .reset
        .as_ref()
        .filter(|r| !r.asserted_branch)
        .map(|r| r.asserted_text());
    let antecedent = if pre.is_true_literal() {
        "1'b1".to_string()
    } else {
        paren(&pre)
    };
    let ante_wrapped = antecedent.starts_with('(');
    let clocked = ctx.is_clocked();

    let assertion = match &ctx.action {
        Action::Assign { lhs, rhs, .. } => {
            let lhs_e = parse(lhs, "lhs")?;
            let rhs_e = parse(rhs, "rhs")?;
            check_available(&lhs_e, res)?;
            check_available(&rhs_e, res)?;
            let mut widths = ResourceWidths(res);
            let lw = compile(&lhs_e, &mut widths)
                .map_err(|e| SvaError::InvalidForm { reason: e.to_string() })?
                .width();
            let value_text = match const_value(&rhs_e, &mut widths) {
                Ok((v, _)) => Some(constant_text(v, lw)),
                Err(_) => None,
            };
            let (op, consequent) = if clocked {
                let (op, depth) = match opts.delay_cycles {
                    Some(n) => (ImplOp::OverlapDelay(n), n),
                    None => (ImplOp::NonOverlap, 1),
                };
                let outcome = match value_text {
                    Some(k) => format!("{lhs_e} == {k}"),
                    None => {
                        let arg = sized(&rhs_e, lw, &mut widths)?;
                        if depth == 1 {
                            format!("{lhs_e} == $past({arg})")
                        } else {
                            format!("{lhs_e} == $past({arg}, {depth})")
                        }
                    }
                };
                let c = if ante_wrapped { format!("({outcome})") } else { outcome };
                (op, c)
            } else {
                let r = match value_text {
                    Some(k) => k,
                    None => {
                        let s = sized(&rhs_e, lw, &mut widths)?;
                        if s.starts_with(char::is_numeric) || !is_compound(&rhs_e) {
                            s
                        } else {
                            format!("({s})")
                        }
                    }
                };
                (ImplOp::Overlap, format!("({lhs_e} == {r})"))
            };
            Some((op, consequent))
        }
        Action::Hold { signal } if clocked => {
            let outcome = format!("{signal} == $past({signal})");
            let c = if ante_wrapped { format!("({outcome})") } else { outcome };
            Some((ImplOp::NonOverlap, c))
        }
        Action::Hold { .. } | Action::Reach => None,
    };

    let trace = Some(Trace {
        file: ctx.file.clone(),
        locations: ctx.locations.iter().map(|l| l.span()).collect(),
        iteration: opts.iteration,
    });
    let base = SvaProperty {
        name: String::new(),
        kind: PropKind::Assert,
        clock_expr,
        disable_expr,
        antecedent: antecedent.clone(),
        op: ImplOp::Overlap,
        consequent: String::new(),
        behavior: ctx.behavior.clone(),
        trace,
    };
    let mut out = Vec::new();
    let has_assert = assertion.is_some();
    if let Some((op, consequent)) = assertion {
        out.push(SvaProperty {
            op,
            consequent,
            ..base.clone()
        });
    }
    if !has_assert || (opts.emit_covers && ctx.kind == TargetKind::Branch) {
        out.push(SvaProperty {
            kind: PropKind::Cover,
            op: ImplOp::Overlap,
            consequent: "1'b1".into(),
            behavior: format!("reach {}", ctx.behavior),
            ..base
        });
    }
    Ok(out)
}

fn constant_text(v: u64, width: u32) -> String {
    let lit = if width == 1 {
        Literal::bit(v & 1 == 1)
    } else {
        Literal::sized(width, v)
    };
    Expr::literal(lit, SourceSpan::default()).to_string()
}

/// `rhs` text, cast to `width` when its self-determined width differs.
fn sized(rhs: &Expr, width: u32, widths: &mut ResourceWidths) -> Result<String, SvaError> {
    let w = compile(rhs, widths)
        .map_err(|e| SvaError::InvalidForm { reason: e.to_string() })?
        .width();
    Ok(if w == width {
        rhs.to_string()
    } else {
        format!("{width}'({rhs})")
    })
}
