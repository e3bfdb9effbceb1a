//! Constant folding for parameter values and declared ranges.

use super::ast::{Expr, SourceSpan};
use super::RtlError;
use crate::logic::{const_value, LogicError, Operand, Resolve};

struct Known<'a>(&'a [(String, u64, u32)]);

impl Resolve for Known<'_> {
    fn ident(&self, name: &str, span: SourceSpan) -> Result<Operand, LogicError> {
        self.0
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, value, width)| Operand::Const {
                value: *value,
                width: *width,
            })
            .ok_or_else(|| LogicError::UnknownIdentifier {
                name: name.to_string(),
                span,
            })
    }
}

/// Evaluate `expr` over previously defined parameters. Returns the value and
/// its self-determined width.
pub(crate) fn eval_const(
    expr: &Expr,
    known: &[(String, u64, u32)],
    origin: &str,
) -> Result<(u64, u32), RtlError> {
    const_value(expr, &mut Known(known)).map_err(|e| logic_to_rtl(e, origin))
}

pub(crate) fn logic_to_rtl(e: LogicError, origin: &str) -> RtlError {
    match e {
        LogicError::UnknownIdentifier { name, span } => RtlError::UndeclaredSignal { name, span },
        LogicError::Unsupported { what, span } => RtlError::UnsupportedConstruct {
            origin: origin.to_string(),
            span,
            construct: what,
        },
        LogicError::NotConstant { span } => RtlError::Invalid {
            origin: origin.to_string(),
            span,
            reason: "expression is not constant".into(),
        },
        LogicError::TooWide { span } => RtlError::UnsupportedConstruct {
            origin: origin.to_string(),
            span,
            construct: "expression wider than 64 bits".into(),
        },
        LogicError::SelectOutOfRange { span } => RtlError::Invalid {
            origin: origin.to_string(),
            span,
            reason: "bit select outside the declared range".into(),
        },
    }
}
