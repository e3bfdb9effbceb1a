use serde::{Deserialize, Serialize};

use super::ClosureState;
use crate::coverage::report::round2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    /// Generated properties that passed review and were merged.
    pub num_properties: usize,
    pub proven: usize,
    /// 100 when nothing was generated.
    pub proven_pct: f64,
    pub coverage_pct: f64,
}

/// Proof rate over every merged generated property, using the last proof run.
/// Only PROVEN counts; UNDETERMINED and FALSIFIED do not.
pub fn compute_kpis(state: &ClosureState) -> KpiReport {
    let names: Vec<&str> = state
        .history
        .iter()
        .flat_map(|r| r.new_properties.iter().map(String::as_str))
        .collect();
    let last = state.history.last();
    let proven = names
        .iter()
        .filter(|n| {
            last.is_some_and(|r| r.proofs.iter().any(|p| p.name == **n && p.status == "PROVEN"))
        })
        .count();
    let proven_pct = if names.is_empty() {
        100.0
    } else {
        round2(proven as f64 / names.len() as f64 * 100.0)
    };
    KpiReport {
        num_properties: names.len(),
        proven,
        proven_pct,
        coverage_pct: last.map_or(0.0, |r| r.coverage_pct),
    }
}
