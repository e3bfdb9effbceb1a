//! Property generation: resource scanning, templates, naming, merging and
//! the model-backed path.

pub mod llm;
pub mod merge;
pub mod naming;
pub mod parse;
pub mod property;
pub mod template;
pub mod validate;

use serde::Serialize;
use thiserror::Error;

pub use llm::{llm_generate, ChatBackend, ChatMessage, GenerationBackend, HttpChat, LlmConfig, LlmOutcome, Rejection};
pub use merge::merge_into_file;
pub use naming::name_and_dedup;
pub use parse::{parse_sva, scan_resources, ParsedSva, SvaResources};
pub use property::{ImplOp, PropKind, SvaProperty, Trace};
pub use template::{generate_property, GenOptions};
pub use validate::{parse_candidates, validate_property};

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum SvaError {
    #[error("line {line}: {message}")]
    Parse { line: u32, message: String },
    #[error("signal `{name}` is not available in the property file")]
    UnavailableSignal { name: String },
    #[error("unsupported timing: {reason}")]
    UnsupportedTiming { reason: String },
    #[error("property form rejected: {reason}")]
    InvalidForm { reason: String },
    #[error("generation backend unavailable: {reason}")]
    BackendUnavailable { reason: String },
    #[error("no valid property after {} attempts", .rejected.len())]
    ValidationExhausted { rejected: Vec<Rejection> },
    #[error("configuration error: {reason}")]
    Config { reason: String },
}
