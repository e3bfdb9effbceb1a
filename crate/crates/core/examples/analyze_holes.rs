//! Prove the seed properties of the ALU and describe what is left uncovered.

use covloop::analyzer::{analyze_report, consolidate, contexts_to_json};
use covloop::closure::Design;
use covloop::coverage::enumerate_targets;
use covloop::formal::{BuiltinBackend, FormalBackend, ProofJob};
use covloop::sva::parse_sva;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let design = Design::load(&[dir.join("alu.v")], None)?;
    let sva = parse_sva(&std::fs::read_to_string(dir.join("alu_sva.sv"))?)?;
    let file = design.file_name();
    let run = BuiltinBackend::new(0).run(&ProofJob {
        unit: design.unit(),
        file: &file,
        properties: &sva.properties,
        macros: &sva.resources.macros,
        iteration: 0,
        exclude_unreachable: false,
    })?;
    let targets = enumerate_targets(design.unit(), &file);
    let contexts = consolidate(analyze_report(&run.report, &targets, design.unit(), design.source(), &file)?);
    eprintln!("coverage {:.2}%, {} holes", run.report.coverage_pct, contexts.len());
    println!("{}", contexts_to_json(&contexts));
    Ok(())
}
