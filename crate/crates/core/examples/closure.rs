//! Close the counter from its seed property file and print the audit trail.

use covloop::closure::{run_closure, ClosureConfig, Design};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let design = Design::load(&[dir.join("counter3.v")], None)?;
    let seed = std::fs::read_to_string(dir.join("counter3_sva.sv"))?;
    let run = run_closure(&design, &seed, &ClosureConfig::default())?;
    for r in &run.state.history {
        println!(
            "iteration {}: {:.2}% covered, {} holes, {} merged",
            r.iteration,
            r.coverage_pct,
            r.holes,
            r.new_properties.len()
        );
    }
    println!("{:?} with {:?}", run.state.outcome, run.kpis);
    print!("{}", run.sva_text);
    Ok(())
}
