//! Coverage closure for formal verification.

pub mod logic;
pub mod rtl;
pub mod coverage;
pub mod analyzer;
pub mod sva;
pub mod formal;
pub mod closure;
pub mod cli;
