//! RTL front end: lexer, parser, printer and signal resolution.

pub mod ast;
mod consteval;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod signals;

use std::path::Path;

use thiserror::Error;

pub use ast::{DesignUnit, SourceSpan};
pub use parser::{parse_expr_text, parse_source, parse_source_with, ParseOptions};
pub use signals::{resolve_signals, SignalInfo, SignalKind, SignalTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RtlError {
    #[error("{origin}:{span}: syntax error: expected {}, found {found}", .expected.join(" or "))]
    Syntax {
        origin: String,
        span: SourceSpan,
        expected: Vec<String>,
        found: String,
    },
    #[error("{origin}:{span}: unsupported construct `{construct}`")]
    UnsupportedConstruct {
        origin: String,
        span: SourceSpan,
        construct: String,
    },
    #[error("undeclared signal `{name}` at {span}")]
    UndeclaredSignal { name: String, span: SourceSpan },
    #[error("duplicate declaration of `{name}` at {span}")]
    DuplicateDeclaration { name: String, span: SourceSpan },
    #[error("{origin}:{span}: {reason}")]
    Invalid {
        origin: String,
        span: SourceSpan,
        reason: String,
    },
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
}

/// Evaluate a constant expression over `(name, value, width)` parameters.
pub fn eval_constant(expr: &ast::Expr, params: &[(String, u64, u32)]) -> Result<(u64, u32), RtlError> {
    consteval::eval_const(expr, params, "<const>")
}

/// A parsed source file together with its text, kept for slicing.
#[derive(Clone, Debug)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
    pub units: Vec<DesignUnit>,
}

impl SourceFile {
    pub fn parse(path: &str, text: String, opts: &ParseOptions) -> Result<Self, RtlError> {
        let units = parse_source_with(&text, path, opts)?;
        Ok(SourceFile {
            path: path.to_string(),
            text,
            units,
        })
    }

    pub fn load(path: &Path, opts: &ParseOptions) -> Result<Self, RtlError> {
        let text = std::fs::read_to_string(path).map_err(|e| RtlError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&path.display().to_string(), text, opts)
    }

    /// Short file name used in target ids and trace comments.
    pub fn file_name(&self) -> String {
        Path::new(&self.path)
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.path.clone())
    }
}
