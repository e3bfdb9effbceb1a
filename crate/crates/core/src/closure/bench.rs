//! Corpus comparison with and without property generation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{run_closure, BackendChoice, ClosureConfig, ClosureError, Design, HilMode, Outcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub design: String,
    /// `generation` or `baseline`.
    pub config: String,
    pub num_properties: usize,
    pub proven_pct: f64,
    pub coverage_pct: f64,
    pub iterations: u32,
    pub outcome: Option<Outcome>,
    pub wall_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

/// One corpus entry: a design file and its seed property file, if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusEntry {
    pub design: PathBuf,
    pub sva: Option<PathBuf>,
}

/// Designs in `dir`, sorted by file name. `x_sva.sv` next to `x.v` or
/// `x.sv` is its seed property file.
pub fn corpus_entries(dir: &Path) -> Result<Vec<CorpusEntry>, ClosureError> {
    let io = |e: std::io::Error| ClosureError::Io {
        path: dir.display().to_string(),
        reason: e.to_string(),
    };
    let mut designs: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()).map_err(io))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            (name.ends_with(".v") || name.ends_with(".sv")) && !name.ends_with("_sva.sv")
        })
        .collect();
    designs.sort();
    Ok(designs
        .into_iter()
        .map(|d| {
            let stem = d.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let sva = d.with_file_name(format!("{stem}_sva.sv"));
            CorpusEntry {
                sva: sva.exists().then_some(sva),
                design: d,
            }
        })
        .collect())
}

fn run_one(entry: &CorpusEntry, cfg: &ClosureConfig, label: &str) -> BenchRow {
    let start = Instant::now();
    let name = entry
        .design
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let result = (|| {
        let design = Design::load(std::slice::from_ref(&entry.design), cfg.top.as_deref())?;
        let sva = match &entry.sva {
            Some(p) => std::fs::read_to_string(p).map_err(|e| ClosureError::Io {
                path: p.display().to_string(),
                reason: e.to_string(),
            })?,
            None => String::new(),
        };
        run_closure(&design, &sva, cfg)
    })();
    let wall_ms = start.elapsed().as_millis() as u64;
    match result {
        Ok(run) => BenchRow {
            design: name,
            config: label.to_string(),
            num_properties: run.kpis.num_properties,
            proven_pct: run.kpis.proven_pct,
            coverage_pct: run.report.coverage_pct,
            iterations: run.state.iteration,
            outcome: Some(run.state.outcome),
            wall_ms,
            error: None,
        },
        Err(e) => BenchRow {
            design: name,
            config: label.to_string(),
            num_properties: 0,
            proven_pct: 0.0,
            coverage_pct: 0.0,
            iterations: 0,
            outcome: None,
            wall_ms,
            error: Some(e.to_string()),
        },
    }
}

/// Close every corpus design twice, with generation on and off, using the
/// builtin engine and automatic approval. Failures are recorded per row.
pub fn benchmark(dir: &Path, base: &ClosureConfig) -> Result<BenchTable, ClosureError> {
    let mut with = base.clone();
    with.backend = BackendChoice::Builtin;
    with.hil_mode = HilMode::AutoApprove;
    with.generation_enabled = true;
    let mut without = with.clone();
    without.generation_enabled = false;
    let mut table = BenchTable::default();
    for entry in corpus_entries(dir)? {
        table.rows.push(run_one(&entry, &without, "baseline"));
        table.rows.push(run_one(&entry, &with, "generation"));
    }
    Ok(table)
}

impl BenchTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    /// Fixed-width text rendering.
    pub fn render_text(&self) -> String {
        let header = ["design", "config", "props", "proven%", "coverage%", "iters", "outcome", "ms"];
        let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for r in &self.rows {
            let outcome = match (&r.outcome, &r.error) {
                (Some(o), _) => serde_json::to_value(o).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
                (None, Some(e)) => format!("ERROR: {e}"),
                (None, None) => String::new(),
            };
            cells.push(vec![
                r.design.clone(),
                r.config.clone(),
                r.num_properties.to_string(),
                format!("{:.2}", r.proven_pct),
                format!("{:.2}", r.coverage_pct),
                r.iterations.to_string(),
                outcome,
                r.wall_ms.to_string(),
            ]);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|i| cells.iter().map(|row| row[i].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in cells {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i < 2 || i == 6 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}
