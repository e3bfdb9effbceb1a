//! Prove properties with the builtin engine and print a counterexample.

use covloop::closure::Design;
use covloop::formal::{BuiltinBackend, FormalBackend, ProofJob, ProofStatus};
use covloop::sva::parse_sva;

const SVA: &str = "property captures_d1;
  @(posedge clk) (a && b) |=> (c == $past(d1));
endproperty
assert property (captures_d1);

property captures_d2;
  @(posedge clk) (a && b) |=> (c == $past(d2));
endproperty
assert property (captures_d2);
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/extra/listing1.v");
    let design = Design::load(&[path], None)?;
    let sva = parse_sva(SVA)?;
    let file = design.file_name();
    let run = BuiltinBackend::new(0).run(&ProofJob {
        unit: design.unit(),
        file: &file,
        properties: &sva.properties,
        macros: &sva.resources.macros,
        iteration: 0,
        exclude_unreachable: false,
    })?;
    for r in &run.results {
        println!("{:<12} {}", r.name, r.status.label());
        if let ProofStatus::Falsified { cex } = &r.status {
            for (i, step) in cex.iter().enumerate() {
                println!("  cycle {i}: state {:?} inputs {:?}", step.state, step.inputs);
            }
        }
    }
    for t in &run.report.targets {
        println!("{:<36} {:?}", t.id, t.status);
    }
    println!("coverage {:.2}%", run.report.coverage_pct);
    Ok(())
}
